from __future__ import annotations

import json
import logging
from pathlib import Path

import pandas as pd
import pytest

from mediationcore.effects import error_report
from mediationcore.exceptions import OutputError
from mediationcore.experiment import run_experiment
from mediationcore.models import (
    CellResult,
    EffectEstimate,
    ExperimentResult,
    Provenance,
    TrueEffects,
)
from mediationcore.outputs import (
    PLOT_COLUMNS,
    RESULT_COLUMNS,
    emit_outputs,
    plot_frames,
    results_frame,
)
from tests.conftest import make_config


@pytest.fixture(scope="module")
def baseline_result() -> ExperimentResult:
    return run_experiment(make_config(estimators=["lsem", "lsem_i"]))


def _provenance() -> Provenance:
    return Provenance(config_sha256="0" * 64, base_seed=0, started_at="", version="test")


def _proxy_result() -> ExperimentResult:
    truth = TrueEffects.zero()
    cells = []
    for index, p_c in enumerate([0.1, 0.3]):
        estimates = [EffectEstimate.from_parts(p_c, -p_c), EffectEstimate.from_parts(2 * p_c, 0.0)]
        cells.append(
            CellResult(
                index=index,
                label=f"n=500|eta=1|share=0.5|p_c={p_c:g}",
                params={"n": 500, "eta": 1.0, "share": 0.5, "p_c": p_c},
                reports={"cmavae": error_report(estimates, truth)},
            )
        )
    return ExperimentResult(
        name="proxy",
        dgp="proxy_noise",
        estimators=["cmavae"],
        cells=cells,
        provenance=_provenance(),
    )


def test_results_frame_rows(baseline_result: ExperimentResult) -> None:
    frame = results_frame(baseline_result)
    assert list(frame.columns) == list(RESULT_COLUMNS)
    assert len(frame) == 2 * 2 * 2
    assert list(frame["cell"].unique()) == [0, 1]


def test_percent_scales_errors(baseline_result: ExperimentResult) -> None:
    plain = results_frame(baseline_result)
    percent = results_frame(baseline_result, percent=True)
    pd.testing.assert_series_equal(percent["abs_err_ate"], plain["abs_err_ate"] * 100.0)


def test_emit_outputs_files(baseline_result: ExperimentResult, tmp_path: Path) -> None:
    paths = emit_outputs(baseline_result, tmp_path / "out")

    assert paths.results.exists()
    assert sorted(p.name for p in paths.plotdata.values()) == ["acde.csv", "acme.csv", "ate.csv"]
    summary = json.loads(paths.summary.read_text(encoding="utf-8"))
    assert summary["units"] == "outcome"
    assert summary["provenance"]["base_seed"] == 7
    assert [c["label"] for c in summary["cells"]] == ["n=60", "n=80"]


def test_summary_means_match_results(baseline_result: ExperimentResult, tmp_path: Path) -> None:
    paths = emit_outputs(baseline_result, tmp_path)
    rows = pd.read_csv(paths.results)
    summary = json.loads(paths.summary.read_text(encoding="utf-8"))

    means = rows.groupby(["cell", "estimator"])[["abs_err_acme", "abs_err_ate"]].mean()
    for cell in summary["cells"]:
        for name, stats in cell["estimators"].items():
            row = means.loc[(cell["index"], name)]
            assert abs(row["abs_err_acme"] - stats["acme"]["mean"]) <= 1e-12
            assert abs(row["abs_err_ate"] - stats["ate"]["mean"]) <= 1e-12


def test_percent_summary(baseline_result: ExperimentResult, tmp_path: Path) -> None:
    paths = emit_outputs(baseline_result, tmp_path, percent=True)
    summary = json.loads(paths.summary.read_text(encoding="utf-8"))
    report = baseline_result.cells[0].reports["lsem"]
    assert summary["units"] == "percent"
    assert summary["cells"][0]["estimators"]["lsem"]["acme"]["mean"] == pytest.approx(
        report.acme_mean * 100.0
    )


def test_plot_frames_against_sample_size(baseline_result: ExperimentResult) -> None:
    frames = plot_frames(baseline_result)
    acme = frames["acme"]
    assert list(acme.columns) == list(PLOT_COLUMNS)
    assert list(acme["series"]) == ["lsem", "lsem", "lsem_i", "lsem_i"]
    assert list(acme["x"]) == [60.0, 80.0, 60.0, 80.0]


def test_plot_frames_against_flip_probability() -> None:
    frames = plot_frames(_proxy_result())
    acme = frames["acme"]
    assert list(acme["x"]) == [0.1, 0.3]
    assert set(acme["series"]) == {"cmavae|n=500|eta=1|share=0.5"}
    # errors 0.1 and 0.2 in the first cell
    assert acme["y"].iloc[0] == pytest.approx(0.15)
    assert frames["ate"]["y"].iloc[0] == pytest.approx(0.1)


def test_single_replication_reported(tmp_path: Path) -> None:
    cell = CellResult(
        index=0,
        label="n=60",
        params={"n": 60},
        reports={"lsem": error_report([EffectEstimate.from_parts(0.1, 0.2)], TrueEffects.zero())},
    )
    result = ExperimentResult(
        name="one", dgp="synthetic", estimators=["lsem"], cells=[cell], provenance=_provenance()
    )
    paths = emit_outputs(result, tmp_path)
    summary = json.loads(paths.summary.read_text(encoding="utf-8"))
    stats = summary["cells"][0]["estimators"]["lsem"]
    assert stats["single_replication"] is True
    assert stats["acme"]["std"] == 0.0


def test_empty_estimators_warns(tmp_path: Path, caplog: pytest.LogCaptureFixture) -> None:
    result = ExperimentResult(
        name="empty", dgp="synthetic", estimators=[], cells=[], provenance=_provenance()
    )
    with caplog.at_level(logging.WARNING, logger="mediationcore"):
        paths = emit_outputs(result, tmp_path)
    assert "no estimators" in caplog.text
    assert list(pd.read_csv(paths.results).columns) == list(RESULT_COLUMNS)


def test_unwritable_directory(baseline_result: ExperimentResult, tmp_path: Path) -> None:
    blocker = tmp_path / "file"
    blocker.write_text("", encoding="utf-8")
    with pytest.raises(OutputError, match="cannot create"):
        emit_outputs(baseline_result, blocker / "out")
