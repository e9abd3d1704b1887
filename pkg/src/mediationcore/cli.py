"""Command-line entry point: ``mediationcore <command> --config experiment.yaml``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from collections.abc import Sequence
from pathlib import Path

from pydantic import TypeAdapter, ValidationError

from mediationcore.config import ExperimentConfig, expand_grid, load_config, parse_config
from mediationcore.console import console_hooks
from mediationcore.dataset import ColumnSpec, Dataset, load_csv, write_csv
from mediationcore.dgp import read_true_effects, write_true_effects
from mediationcore.effects import estimate_effects
from mediationcore.exceptions import ConfigError, MediationError
from mediationcore.experiment import load_base, run_experiment, simulate_cell
from mediationcore.fairness import load_fairness_data, run_fairness
from mediationcore.hooks import Hooks
from mediationcore.logging import enable_logging
from mediationcore.model import ModelConfig, load_checkpoint, save_checkpoint
from mediationcore.models import AbsoluteErrors
from mediationcore.outputs import emit_outputs, write_fairness, write_json
from mediationcore.training import train, training_summary

logger = logging.getLogger("mediationcore")

_SCHEMA = TypeAdapter(list[ColumnSpec])


def _read_config(args: argparse.Namespace) -> ExperimentConfig:
    if args.config is None:
        cfg = parse_config({})
        return cfg if args.seed is None else cfg.model_copy(update={"seed": args.seed})
    return load_config(args.config, seed=args.seed)


def _hooks(args: argparse.Namespace) -> Hooks:
    hooks = Hooks()
    if args.verbose:
        hooks.extend(enable_logging(logging.DEBUG))
    if not args.quiet:
        hooks.extend(console_hooks(verbose=args.verbose))
    return hooks


def _write_schema(schema: Sequence[ColumnSpec], path: Path) -> Path:
    return write_json([c.model_dump() for c in schema], path)


def _read_schema(path: str | Path) -> list[ColumnSpec]:
    try:
        return _SCHEMA.validate_json(Path(path).read_bytes())
    except (OSError, ValidationError) as exc:
        raise ConfigError(f"cannot read schema {path}: {exc}") from exc


def _read_dataset(args: argparse.Namespace) -> Dataset:
    data = Path(args.data)
    schema = Path(args.schema) if args.schema else data.with_name("schema.json")
    return load_csv(data, _read_schema(schema))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _read_config(args)
    out = cfg.resolved_output_dir(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    if cfg.dgp.kind == "fairness_csv":
        dataset = load_fairness_data(cfg)
        truth = None
    else:
        cells = expand_grid(cfg)
        if not 0 <= args.cell < len(cells):
            raise ConfigError(f"cell {args.cell} outside the grid of {len(cells)} cells")
        dataset, truth = simulate_cell(cfg, cells[args.cell], cfg.seed + args.rep, load_base(cfg))

    write_csv(dataset, out / "dataset.csv")
    _write_schema(dataset.schema, out / "schema.json")
    if truth is not None:
        write_true_effects(truth, out / "truth.json")
    print(out / "dataset.csv")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    cfg = _read_config(args)
    out = cfg.resolved_output_dir(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = _read_dataset(args)

    started = time.monotonic()
    model_config = ModelConfig.for_dataset(dataset, **cfg.model_overrides())
    model = train(dataset, model_config, cfg.train_config(cfg.seed))
    summary = training_summary(model, time.monotonic() - started)

    path = save_checkpoint(model, out / "model.pt")
    write_json(summary.model_dump(), out / "training.json")
    print(path)
    return 0


def cmd_estimate(args: argparse.Namespace) -> int:
    cfg = _read_config(args)
    out = cfg.resolved_output_dir(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = _read_dataset(args)
    model = load_checkpoint(args.checkpoint)

    samples = args.samples or cfg.effect_samples
    estimate = estimate_effects(model, dataset.X, samples=samples, seed=cfg.seed)
    scale = 100.0 if args.percent or cfg.percent else 1.0
    payload: dict[str, object] = {
        "units": "percent" if scale != 1.0 else "outcome",
        "effects": estimate.scaled(scale).model_dump(),
    }
    if args.truth:
        truth = read_true_effects(args.truth)
        errors = AbsoluteErrors.between(estimate, truth)
        payload["truth"] = {k: v * scale for k, v in truth.model_dump().items()}
        payload["errors"] = {k: v * scale for k, v in errors.model_dump().items()}

    path = write_json(payload, out / "effects.json")
    print(json.dumps(payload["effects"]))
    logger.debug("wrote %s", path)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = _read_config(args)
    if cfg.dgp.kind == "fairness_csv":
        return cmd_fairness(args)
    percent = args.percent or cfg.percent
    out = cfg.resolved_output_dir(args.output_dir)

    result = run_experiment(cfg, _hooks(args))
    emit_outputs(result, out, percent=percent)
    result.print_summary(percent=percent)
    return 0


def cmd_fairness(args: argparse.Namespace) -> int:
    cfg = _read_config(args)
    out = cfg.resolved_output_dir(args.output_dir)

    report = run_fairness(cfg, _hooks(args))
    write_fairness(report, out)
    print(report.summary(), file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mediationcore",
        description="Causal mediation analysis with hidden confounders.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment file")
    common.add_argument("--seed", type=int, default=None, help="override the base seed")
    common.add_argument(
        "--output-dir",
        default=None,
        help="output directory (default: config, then $MEDIATIONCORE_OUTPUT_DIR, then results)",
    )
    common.add_argument("--percent", action="store_true", help="report errors multiplied by 100")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="no progress output")

    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="draw one dataset")
    simulate.add_argument("--cell", type=int, default=0, help="grid cell index")
    simulate.add_argument("--rep", type=int, default=0, help="replication index")
    simulate.set_defaults(func=cmd_simulate)

    train_cmd = sub.add_parser("train", parents=[common], help="fit the model to a CSV")
    train_cmd.add_argument("--data", required=True, help="dataset CSV")
    train_cmd.add_argument("--schema", help="schema JSON (default: schema.json beside --data)")
    train_cmd.set_defaults(func=cmd_train)

    estimate = sub.add_parser("estimate", parents=[common], help="estimate effects")
    estimate.add_argument("--checkpoint", required=True, help="model checkpoint")
    estimate.add_argument("--data", required=True, help="evaluation covariates CSV")
    estimate.add_argument("--schema", help="schema JSON (default: schema.json beside --data)")
    estimate.add_argument("--samples", type=int, default=None, help="posterior draws per unit")
    estimate.add_argument("--truth", help="truth JSON to score against")
    estimate.set_defaults(func=cmd_estimate)

    experiment = sub.add_parser("experiment", parents=[common], help="run a replicated grid")
    experiment.set_defaults(func=cmd_experiment)

    fairness = sub.add_parser("fairness", parents=[common], help="run the fairness study")
    fairness.set_defaults(func=cmd_fairness)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MediationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
