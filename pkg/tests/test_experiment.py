from __future__ import annotations

import pytest

from mediationcore import experiment as experiment_module
from mediationcore.config import Cell, ExperimentConfig, expand_grid, parse_config
from mediationcore.dataset import Dataset
from mediationcore.exceptions import ConfigError
from mediationcore.experiment import (
    Experiment,
    derive_seed,
    load_base,
    run_experiment,
    simulate_cell,
)
from mediationcore.hooks import Event, EventType, Hooks
from mediationcore.models import TrueEffects
from tests.conftest import make_config


def test_derive_seed_separates_streams() -> None:
    seeds = {derive_seed(7, stream) for stream in ("dgp", "proxy", "split", "train", "effects")}
    assert len(seeds) == 5
    assert derive_seed(7, "dgp") == derive_seed(7, "dgp")
    assert derive_seed(7, "dgp") != derive_seed(8, "dgp")


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def test_simulate_synthetic_cell() -> None:
    cfg = make_config()
    cell = expand_grid(cfg)[1]
    dataset, truth = simulate_cell(cfg, cell, seed=7)
    assert dataset.n == 80
    assert truth.acme1 > 0
    again, _ = simulate_cell(cfg, cell, seed=7)
    assert again == dataset


def test_simulate_semisynthetic_cell(jobs_base: Dataset) -> None:
    cfg = make_config(dgp={"kind": "semisynthetic", "n": 150, "eta": 2.0, "share": 0.3})
    dataset, truth = simulate_cell(cfg, expand_grid(cfg)[0], seed=0, base=jobs_base)
    assert dataset.n == 150
    assert truth == TrueEffects.zero()
    assert dataset.x_dim == jobs_base.x_dim


def test_simulate_proxy_noise_cell(jobs_base: Dataset) -> None:
    cfg = make_config(dgp={"kind": "proxy_noise", "n": 150, "p_c": 0.2})
    dataset, truth = simulate_cell(cfg, expand_grid(cfg)[0], seed=0, base=jobs_base)
    names = [c.name for c in dataset.covariates]
    assert "depress1" not in names
    assert sum(name.startswith("depress1_proxy_") for name in names) == 9
    assert truth == TrueEffects.zero()


def test_proxy_noise_grid_runs_without_failures() -> None:
    cfg = make_config(reps=4, dgp={"kind": "proxy_noise", "n": 300, "p_c": [0.1, 0.5]})
    result = run_experiment(cfg)
    assert result.error_count == 0
    for cell in result.cells:
        assert set(cell.reports) == {"cmavae", "lsem", "lsem_i"}
        assert all(report.reps == 4 for report in cell.reports.values())


def test_semisynthetic_needs_base() -> None:
    cfg = make_config(dgp={"kind": "semisynthetic", "n": 150})
    with pytest.raises(ConfigError, match="base dataset"):
        simulate_cell(cfg, expand_grid(cfg)[0], seed=0)


def test_load_base_only_for_semisynthetic() -> None:
    assert load_base(make_config()) is None
    base = load_base(make_config(dgp={"kind": "semisynthetic", "base_n": 120}))
    assert base is not None
    assert base.n == 120


def test_fairness_kind_is_not_a_simulation() -> None:
    cfg = make_config(dgp={"kind": "fairness_csv"})
    with pytest.raises(ConfigError, match="run_fairness"):
        Experiment(cfg)


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


def test_run_experiment_shape(tiny_config: ExperimentConfig) -> None:
    result = run_experiment(tiny_config)

    assert [c.label for c in result.cells] == ["n=60", "n=80"]
    assert len(result.records) == 2 * 2 * 3
    assert result.error_count == 0
    for cell in result.cells:
        assert set(cell.reports) == {"cmavae", "lsem", "lsem_i"}
        assert all(report.reps == 2 for report in cell.reports.values())

    keys = [(r.cell, r.estimator, r.rep) for r in result.records]
    order = ["cmavae", "lsem", "lsem_i"]
    assert keys == sorted(keys, key=lambda k: (k[0], order.index(k[1]), k[2]))
    assert result.provenance.seeds == [7, 8]
    assert result.provenance.config_sha256 == tiny_config.sha256()


def test_records_carry_training_summary(tiny_config: ExperimentConfig) -> None:
    result = run_experiment(tiny_config)
    for record in result.records:
        if record.estimator == "cmavae":
            assert record.training is not None
            assert record.training.epochs == 1
            assert record.estimate.samples == 5
        else:
            assert record.training is None


def test_run_is_reproducible() -> None:
    cfg = make_config(max_workers=2)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert [r.estimate for r in a.records] == [r.estimate for r in b.records]
    assert [r.truth for r in a.records] == [r.truth for r in b.records]


def test_worker_count_does_not_change_results() -> None:
    serial = run_experiment(make_config(max_workers=1))
    parallel = run_experiment(make_config(max_workers=3))
    assert [r.estimate.ate for r in parallel.records] == pytest.approx(
        [r.estimate.ate for r in serial.records], rel=1e-9, abs=1e-12
    )


def test_full_evaluation_uses_every_row() -> None:
    cfg = make_config(evaluate_on="full", estimators=["cmavae"], dgp={"n": [60]})
    result = run_experiment(cfg)
    assert all(r.estimate.n_eval == 60 for r in result.records)


def test_estimator_failure_is_recorded(monkeypatch: pytest.MonkeyPatch) -> None:
    original = experiment_module.run_estimator

    def flaky(name: str, *args: object, **kwargs: object):
        if name == "lsem":
            raise RuntimeError("boom")
        return original(name, *args, **kwargs)

    monkeypatch.setattr(experiment_module, "run_estimator", flaky)
    result = run_experiment(make_config(estimators=["lsem", "lsem_i"]))

    assert result.error_count == 4
    for cell in result.cells:
        assert set(cell.reports) == {"lsem_i"}
        assert [e.rep for e in cell.errors] == [0, 1]
        assert all("boom" in e.message for e in cell.errors)


def test_binary_mediator_fails_linear_baseline(jobs_base: Dataset) -> None:
    cfg = make_config(
        reps=1,
        estimators=["lsem"],
        dgp={"kind": "semisynthetic", "n": 200, "binarize_mediator": True},
    )
    result = run_experiment(cfg, base=jobs_base)
    (cell,) = result.cells
    assert cell.reports == {}
    assert "continuous" in cell.errors[0].message


def test_simulation_failure_records_every_estimator(monkeypatch: pytest.MonkeyPatch) -> None:
    def broken(cfg: ExperimentConfig, cell: Cell, seed: int, base: Dataset | None = None):
        raise ValueError("no data")

    monkeypatch.setattr(experiment_module, "simulate_cell", broken)
    result = run_experiment(make_config(reps=1, dgp={"n": [60]}))
    (cell,) = result.cells
    assert sorted(e.estimator for e in cell.errors) == ["cmavae", "lsem", "lsem_i"]
    assert all(e.message.startswith("simulation:") for e in cell.errors)


def test_hooks_see_events_in_order() -> None:
    seen: list[EventType] = []
    hooks = Hooks()
    hooks.on_all(lambda e: seen.append(e.type))

    run_experiment(make_config(reps=1, estimators=["cmavae", "lsem"], dgp={"n": [60]}), hooks)

    assert seen == [
        EventType.EXPERIMENT_START,
        EventType.CELL_START,
        EventType.REPLICATION_START,
        EventType.ESTIMATOR_START,
        EventType.TRAINING_END,
        EventType.ESTIMATOR_END,
        EventType.ESTIMATOR_START,
        EventType.ESTIMATOR_END,
        EventType.REPLICATION_END,
        EventType.CELL_END,
        EventType.EXPERIMENT_END,
    ]


def test_estimator_end_payload() -> None:
    payloads: list[Event] = []
    hooks = Hooks()
    hooks.on(EventType.ESTIMATOR_END, payloads.append)

    result = run_experiment(make_config(reps=1, estimators=["lsem"], dgp={"n": [60]}), hooks)

    (event,) = payloads
    assert event.data["estimator"] == "lsem"
    assert event.data["acme1"] == result.records[0].estimate.acme1
    assert event.data["duration_seconds"] >= 0


@pytest.mark.slow
def test_semisynthetic_grid(jobs_base: Dataset) -> None:
    cfg = make_config(
        reps=1,
        estimators=["lsem", "lsem_i"],
        dgp={"kind": "semisynthetic", "n": [200, 400], "eta": [1, 2], "share": [0.3, 0.6]},
    )
    result = run_experiment(cfg, base=jobs_base)
    assert len(result.cells) == 8
    assert result.error_count == 0
    assert result.cells[5].label == "n=400|eta=1|share=0.6"


@pytest.mark.slow
def test_cmavae_beats_linear_baselines_on_synthetic_data() -> None:
    cfg = parse_config(
        {"name": "synthetic", "seed": 0, "reps": 10, "dgp": {"kind": "synthetic", "n": 3000}}
    )
    result = run_experiment(cfg)
    assert result.error_count == 0

    reports = result.cells[0].reports
    cmavae = reports["cmavae"]
    for baseline in ("lsem", "lsem_i"):
        assert cmavae.acme_mean < reports[baseline].acme_mean
        assert cmavae.ate_mean < reports[baseline].ate_mean
    assert cmavae.ate_std <= reports["lsem"].ate_std


@pytest.mark.slow
def test_cmavae_semisynthetic_errors_stay_small(jobs_base: Dataset) -> None:
    cfg = parse_config(
        {
            "name": "semisynthetic",
            "seed": 0,
            "reps": 10,
            "profile": "paper",
            "estimators": ["cmavae", "lsem"],
            "dgp": {"kind": "semisynthetic", "n": 500, "eta": 1, "share": 0.5},
        }
    )
    result = run_experiment(cfg, base=jobs_base)
    assert result.error_count == 0

    cmavae = result.cells[0].reports["cmavae"]
    assert cmavae.acme_mean <= 0.02
    assert cmavae.acde_mean <= 0.02
    assert cmavae.ate_mean <= 0.02
