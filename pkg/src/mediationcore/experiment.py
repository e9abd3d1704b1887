"""Replicated simulation experiments: simulate, split, fit, estimate, score."""

from __future__ import annotations

import asyncio
import logging
import time
from datetime import datetime, timezone
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from mediationcore.baselines import lsem_effects, lsem_i_effects
from mediationcore.config import Cell, ExperimentConfig, expand_grid
from mediationcore.dataset import Dataset, load_csv, standardize, stratified_split
from mediationcore.dgp import SyntheticConfig, generate_synthetic
from mediationcore.effects import error_report, estimate_effects
from mediationcore.exceptions import ConfigError, EstimatorError
from mediationcore.hooks import (
    CellEndData,
    CellStartData,
    EstimatorEndData,
    EstimatorErrorData,
    EstimatorStartData,
    Event,
    EventType,
    ExperimentEndData,
    ExperimentStartData,
    Hooks,
    ReplicationEndData,
    ReplicationStartData,
    TrainingEndData,
)
from mediationcore.model import ModelConfig
from mediationcore.models import (
    AbsoluteErrors,
    CellError,
    CellResult,
    EffectEstimate,
    ExperimentResult,
    Provenance,
    ReplicationRecord,
    TrainingSummary,
    TrueEffects,
)
from mediationcore.semisynthetic import (
    ProxyNoiseConfig,
    SemiSynthConfig,
    generate_jobs_standin,
    inject_proxy_noise,
    jobs_schema,
    make_proxy_treatment_sampler,
    simulate_semisynthetic,
)
from mediationcore.training import train, training_summary

logger = logging.getLogger("mediationcore")

# Independent random streams derived from one replication seed.
_STREAMS = {"dgp": 0, "proxy": 1, "split": 2, "train": 3, "effects": 4}


def package_version() -> str:
    try:
        return version("mediationcore")
    except PackageNotFoundError:
        return "0+unknown"


def derive_seed(seed: int, stream: str) -> int:
    """Seed of one random stream of a replication."""
    state = np.random.SeedSequence([seed, _STREAMS[stream]]).generate_state(1)
    return int(state[0])


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# Replication building blocks
# ---------------------------------------------------------------------------


def load_base(cfg: ExperimentConfig) -> Dataset | None:
    """Base table the semisynthetic processes resample from."""
    if cfg.dgp.kind not in ("semisynthetic", "proxy_noise"):
        return None
    if cfg.dgp.base_csv is not None:
        schema = cfg.dgp.base_schema or list(jobs_schema())
        return load_csv(cfg.dgp.base_csv, schema)
    return generate_jobs_standin(cfg.dgp.base_n, seed=cfg.seed)


def simulate_cell(
    cfg: ExperimentConfig, cell: Cell, seed: int, base: Dataset | None = None
) -> tuple[Dataset, TrueEffects]:
    """One replicate dataset of a grid cell and its true effects."""
    spec = cfg.dgp
    params = cell.params
    dgp_seed = derive_seed(seed, "dgp")

    match spec.kind:
        case "synthetic":
            synthetic = SyntheticConfig(
                n=int(params["n"]), seed=dgp_seed, x_dim=spec.x_dim, c_mode=spec.c_mode
            )
            dataset, truth, _ = generate_synthetic(synthetic)
        case "semisynthetic" | "proxy_noise":
            if base is None:
                raise ConfigError(f"dgp '{spec.kind}' needs a base dataset")
            semi = SemiSynthConfig(
                n=int(params["n"]),
                eta=float(params["eta"]),
                share=float(params["share"]),
                mediator_threshold=spec.mediator_threshold,
                binarize_mediator=spec.binarize_mediator,
                seed=dgp_seed,
            )
            if spec.kind == "semisynthetic":
                dataset, truth = simulate_semisynthetic(base, semi)
            else:
                noise = ProxyNoiseConfig(
                    p_c=float(params["p_c"]),
                    bins=spec.bins,
                    replications=spec.replications,
                    seed=derive_seed(seed, "proxy"),
                )
                sampler = make_proxy_treatment_sampler(base, spec.confounder, noise)
                dataset, truth = simulate_semisynthetic(base, semi, treatment_sampler=sampler)
                dataset = inject_proxy_noise(
                    dataset, spec.confounder, noise, resimulate_treatment=False
                )
        case _:
            raise ConfigError(f"dgp '{spec.kind}' is not a simulation; use run_fairness")

    if spec.standardize:
        dataset = standardize(dataset)
    return dataset, truth


def run_estimator(
    name: str,
    fit_data: Dataset,
    eval_data: Dataset,
    cfg: ExperimentConfig,
    seed: int,
) -> tuple[EffectEstimate, TrainingSummary | None]:
    """Fit one estimator on ``fit_data``; the model-based one is scored on ``eval_data``."""
    match name:
        case "cmavae":
            started = time.monotonic()
            model_config = ModelConfig.for_dataset(fit_data, **cfg.model_overrides())
            model = train(fit_data, model_config, cfg.train_config(derive_seed(seed, "train")))
            summary = training_summary(model, time.monotonic() - started)
            estimate = estimate_effects(
                model,
                eval_data.X,
                samples=cfg.effect_samples,
                seed=derive_seed(seed, "effects"),
            )
            return estimate, summary
        case "lsem":
            return lsem_effects(fit_data).effects, None
        case "lsem_i":
            return lsem_i_effects(fit_data).effects, None
    raise ConfigError(f"unknown estimator '{name}'")


def _guarded_estimator(
    name: str, fit_data: Dataset, eval_data: Dataset, cfg: ExperimentConfig, seed: int
) -> tuple[EffectEstimate, TrainingSummary | None]:
    try:
        return run_estimator(name, fit_data, eval_data, cfg, seed)
    except Exception as exc:
        raise EstimatorError(name, str(exc)) from exc


def _split(cfg: ExperimentConfig, dataset: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    if cfg.evaluate_on == "full":
        return dataset, dataset
    pair = stratified_split(dataset, cfg.train_fraction, derive_seed(seed, "split"))
    return pair.train, pair.test


def aggregate_cell(
    cell: Cell,
    estimators: list[str],
    records: list[ReplicationRecord],
    errors: list[CellError],
    duration: float,
) -> CellResult:
    """Error reports per estimator over the replications that succeeded."""
    reports = {}
    for name in estimators:
        rows = sorted((r for r in records if r.estimator == name), key=lambda r: r.rep)
        if rows:
            reports[name] = error_report([r.estimate for r in rows], rows[0].truth)
    return CellResult(
        index=cell.index,
        label=cell.label,
        params=dict(cell.params),
        reports=reports,
        errors=sorted(errors, key=lambda e: (e.rep, e.estimator)),
        duration_seconds=round(duration, 3),
    )


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


class Experiment:
    """Runs every grid cell and replication of an :class:`ExperimentConfig`.

    Replications execute in worker threads, at most ``cfg.max_workers``
    at a time. Each replication derives all of its randomness from
    ``cfg.seed + rep``, so results do not depend on scheduling. A failing
    estimator is recorded on its cell and the run continues.
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        hooks: Hooks | None = None,
        *,
        base: Dataset | None = None,
    ) -> None:
        if cfg.dgp.kind == "fairness_csv":
            raise ConfigError("dgp 'fairness_csv' runs through run_fairness")
        self._cfg = cfg
        self._hooks = hooks
        self._base = base
        self._cells = expand_grid(cfg)

    @property
    def cells(self) -> list[Cell]:
        return list(self._cells)

    async def _emit(self, event: Event) -> None:
        if self._hooks and self._hooks.is_active:
            await self._hooks.emit(event)

    async def _run_replication(
        self, cell: Cell, rep: int, semaphore: asyncio.Semaphore
    ) -> tuple[list[ReplicationRecord], list[CellError]]:
        cfg = self._cfg
        seed = cfg.seed + rep
        records: list[ReplicationRecord] = []
        errors: list[CellError] = []

        async with semaphore:
            rep_start = time.monotonic()
            await self._emit(
                Event(
                    EventType.REPLICATION_START,
                    ReplicationStartData(cell=cell.index, rep=rep, seed=seed),
                )
            )
            try:
                dataset, truth = await asyncio.to_thread(
                    simulate_cell, cfg, cell, seed, self._base
                )
                fit_data, eval_data = _split(cfg, dataset, seed)
            except Exception as exc:
                logger.debug("simulation failed for %s rep %d", cell.label, rep, exc_info=True)
                for name in cfg.estimators:
                    errors.append(CellError(estimator=name, rep=rep, message=f"simulation: {exc}"))
                    await self._emit(
                        Event(
                            EventType.ESTIMATOR_ERROR,
                            EstimatorErrorData(
                                cell=cell.index, rep=rep, estimator=name, error=str(exc)
                            ),
                        )
                    )
                return records, errors

            for name in cfg.estimators:
                est_start = time.monotonic()
                await self._emit(
                    Event(
                        EventType.ESTIMATOR_START,
                        EstimatorStartData(cell=cell.index, rep=rep, estimator=name),
                    )
                )
                try:
                    estimate, training = await asyncio.to_thread(
                        _guarded_estimator, name, fit_data, eval_data, cfg, seed
                    )
                except EstimatorError as err:
                    logger.debug("%s failed on %s rep %d", name, cell.label, rep, exc_info=True)
                    errors.append(CellError(estimator=name, rep=rep, message=str(err)))
                    await self._emit(
                        Event(
                            EventType.ESTIMATOR_ERROR,
                            EstimatorErrorData(
                                cell=cell.index, rep=rep, estimator=name, error=str(err)
                            ),
                        )
                    )
                    continue

                if training is not None:
                    await self._emit(
                        Event(
                            EventType.TRAINING_END,
                            TrainingEndData(
                                cell=cell.index,
                                rep=rep,
                                epochs=training.epochs,
                                steps=training.steps,
                                final_objective=training.final_objective,
                                duration_seconds=training.duration_seconds,
                            ),
                        )
                    )
                records.append(
                    ReplicationRecord(
                        cell=cell.index,
                        label=cell.label,
                        estimator=name,
                        rep=rep,
                        seed=seed,
                        truth=truth,
                        estimate=estimate,
                        errors=AbsoluteErrors.between(estimate, truth),
                        training=training,
                    )
                )
                await self._emit(
                    Event(
                        EventType.ESTIMATOR_END,
                        EstimatorEndData(
                            cell=cell.index,
                            rep=rep,
                            estimator=name,
                            duration_seconds=round(time.monotonic() - est_start, 3),
                            acme1=estimate.acme1,
                            acde0=estimate.acde0,
                            ate=estimate.ate,
                        ),
                    )
                )

            await self._emit(
                Event(
                    EventType.REPLICATION_END,
                    ReplicationEndData(
                        cell=cell.index,
                        rep=rep,
                        duration_seconds=round(time.monotonic() - rep_start, 3),
                    ),
                )
            )
        return records, errors

    async def _run_cell(
        self, cell: Cell, semaphore: asyncio.Semaphore
    ) -> tuple[CellResult, list[ReplicationRecord]]:
        cell_start = time.monotonic()
        await self._emit(
            Event(EventType.CELL_START, CellStartData(cell=cell.index, label=cell.label))
        )
        gathered = await asyncio.gather(
            *(
                self._run_replication(cell, rep, semaphore)
                for rep in range(self._cfg.resolved_reps)
            )
        )
        records = [r for rep_records, _ in gathered for r in rep_records]
        errors = [e for _, rep_errors in gathered for e in rep_errors]
        result = aggregate_cell(
            cell, list(self._cfg.estimators), records, errors, time.monotonic() - cell_start
        )
        await self._emit(
            Event(
                EventType.CELL_END,
                CellEndData(
                    cell=cell.index,
                    label=cell.label,
                    duration_seconds=result.duration_seconds,
                    error_count=len(result.errors),
                ),
            )
        )
        return result, records

    async def run(self) -> ExperimentResult:
        """Run the whole grid."""
        cfg = self._cfg
        run_start = time.monotonic()
        started_at = _now()
        reps = cfg.resolved_reps

        await self._emit(
            Event(
                EventType.EXPERIMENT_START,
                ExperimentStartData(
                    experiment=cfg.name,
                    dgp=cfg.dgp.kind,
                    cell_count=len(self._cells),
                    reps=reps,
                    estimators=list(cfg.estimators),
                ),
            )
        )

        if self._base is None:
            self._base = await asyncio.to_thread(load_base, cfg)

        semaphore = asyncio.Semaphore(cfg.max_workers)
        # cells run one after another; replications inside a cell share the pool
        cells: list[CellResult] = []
        records: list[ReplicationRecord] = []
        for cell in self._cells:
            cell_result, cell_records = await self._run_cell(cell, semaphore)
            cells.append(cell_result)
            records.extend(cell_records)

        records.sort(key=lambda r: (r.cell, cfg.estimators.index(r.estimator), r.rep))
        duration = round(time.monotonic() - run_start, 3)
        result = ExperimentResult(
            name=cfg.name,
            dgp=cfg.dgp.kind,
            estimators=list(cfg.estimators),
            cells=cells,
            records=records,
            provenance=Provenance(
                config_sha256=cfg.sha256(),
                base_seed=cfg.seed,
                seeds=[cfg.seed + rep for rep in range(reps)],
                started_at=started_at,
                finished_at=_now(),
                version=package_version(),
                extra={"profile": cfg.profile, "reps": reps},
            ),
            duration_seconds=duration,
        )

        await self._emit(
            Event(
                EventType.EXPERIMENT_END,
                ExperimentEndData(
                    experiment=cfg.name,
                    duration_seconds=duration,
                    cell_count=len(cells),
                    error_count=result.error_count,
                ),
            )
        )
        return result


def run_experiment(
    cfg: ExperimentConfig,
    hooks: Hooks | None = None,
    *,
    base: Dataset | None = None,
) -> ExperimentResult:
    """Synchronous entry point around :meth:`Experiment.run`."""
    return asyncio.run(Experiment(cfg, hooks, base=base).run())

