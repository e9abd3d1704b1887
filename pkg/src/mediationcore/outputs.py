"""Result files: long-format errors, summary tables and plot data."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import pandas as pd

from mediationcore.exceptions import OutputError
from mediationcore.models import ExperimentResult, FairnessReport

logger = logging.getLogger("mediationcore")

RESULT_COLUMNS = ("cell", "estimator", "rep", "abs_err_acme", "abs_err_acde", "abs_err_ate")
PLOT_COLUMNS = ("series", "x", "y", "yerr")
EFFECTS = ("acme", "acde", "ate")


@dataclass(frozen=True)
class OutputPaths:
    results: Path
    summary: Path
    plotdata: dict[str, Path]


def _prepare_dir(directory: str | Path) -> Path:
    path = Path(directory)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {path}: {exc}") from exc
    return path


def _write_text(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    try:
        frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    return path


def write_json(payload: Any, path: str | Path) -> Path:
    return _write_text(Path(path), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def results_frame(result: ExperimentResult, *, percent: bool = False) -> pd.DataFrame:
    """One row per cell, estimator and replication, in run order."""
    scale = 100.0 if percent else 1.0
    rows = [
        (
            r.cell,
            r.estimator,
            r.rep,
            r.errors.abs_err_acme * scale,
            r.errors.abs_err_acde * scale,
            r.errors.abs_err_ate * scale,
        )
        for r in result.records
    ]
    return pd.DataFrame(rows, columns=list(RESULT_COLUMNS))


def summary_payload(result: ExperimentResult, *, percent: bool = False) -> dict[str, Any]:
    scale = 100.0 if percent else 1.0
    cells = []
    for cell in result.cells:
        estimators = {}
        for name, report in cell.reports.items():
            estimators[name] = {
                "reps": report.reps,
                "single_replication": report.single_replication,
                "acme": {"mean": report.acme_mean * scale, "std": report.acme_std * scale},
                "acde": {"mean": report.acde_mean * scale, "std": report.acde_std * scale},
                "ate": {"mean": report.ate_mean * scale, "std": report.ate_std * scale},
            }
        cells.append(
            {
                "index": cell.index,
                "label": cell.label,
                "params": cell.params,
                "estimators": estimators,
                "errors": [e.model_dump() for e in cell.errors],
            }
        )
    return {
        "name": result.name,
        "dgp": result.dgp,
        "estimators": result.estimators,
        "units": "percent" if percent else "outcome",
        "cells": cells,
        "provenance": result.provenance.model_dump(),
    }


def plot_axis(result: ExperimentResult) -> str:
    return "p_c" if result.dgp == "proxy_noise" else "n"


def plot_frames(result: ExperimentResult, *, percent: bool = False) -> dict[str, pd.DataFrame]:
    """Mean and std of each error against sample size, or flip probability for proxy noise.

    A series is one estimator at fixed values of the remaining grid axes.
    """
    scale = 100.0 if percent else 1.0
    axis = plot_axis(result)
    rows: dict[str, list[tuple[str, float, float, float]]] = {e: [] for e in EFFECTS}
    for name in result.estimators:
        for cell in result.cells:
            report = cell.reports.get(name)
            if report is None:
                continue
            rest = "|".join(f"{k}={v:g}" for k, v in cell.params.items() if k != axis)
            series = f"{name}|{rest}" if rest else name
            x = float(cell.params[axis])
            rows["acme"].append((series, x, report.acme_mean * scale, report.acme_std * scale))
            rows["acde"].append((series, x, report.acde_mean * scale, report.acde_std * scale))
            rows["ate"].append((series, x, report.ate_mean * scale, report.ate_std * scale))
    return {e: pd.DataFrame(rows[e], columns=list(PLOT_COLUMNS)) for e in EFFECTS}


def emit_outputs(
    result: ExperimentResult, directory: str | Path, *, percent: bool = False
) -> OutputPaths:
    """Write ``results.csv``, ``summary.json`` and ``plotdata/{acme,acde,ate}.csv``."""
    root = _prepare_dir(directory)
    if not result.estimators:
        logger.warning("experiment '%s' has no estimators; writing empty results", result.name)

    results = _write_frame(results_frame(result, percent=percent), root / "results.csv")
    summary = write_json(summary_payload(result, percent=percent), root / "summary.json")
    plot_dir = _prepare_dir(root / "plotdata")
    plotdata = {
        effect: _write_frame(frame, plot_dir / f"{effect}.csv")
        for effect, frame in plot_frames(result, percent=percent).items()
    }
    logger.info("wrote %d result rows to %s", len(result.records), root)
    return OutputPaths(results=results, summary=summary, plotdata=plotdata)


def write_fairness(report: FairnessReport, directory: str | Path) -> Path:
    root = _prepare_dir(directory)
    return write_json(report.model_dump(mode="json"), root / "fairness.json")
