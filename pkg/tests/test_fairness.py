from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from mediationcore.config import ExperimentConfig
from mediationcore.dataset import write_csv
from mediationcore.dgp import generate_fairness_standin
from mediationcore.exceptions import DatasetError
from mediationcore.fairness import classifier_features, load_fairness_data, run_fairness
from mediationcore.hooks import EventType, Hooks
from tests.conftest import make_config


def _fairness_config(**fairness: object) -> ExperimentConfig:
    return make_config(dgp={"kind": "fairness_csv"}, fairness={"n": 2000, **fairness})


def test_report_fields() -> None:
    report = run_fairness(_fairness_config())

    assert report.n_train + report.n_test == 2000
    assert 0.0 <= report.classifier_dp <= 1.0
    assert 0.0 < report.ground_truth_dp <= 1.0
    assert abs(report.effects.ate - (report.effects.acme1 + report.effects.acde0)) <= 1e-12
    assert report.effects.n_eval == report.n_test
    assert report.training is not None and report.training.epochs == 1
    assert report.provenance is not None
    assert report.provenance.extra["source"] == "standin"


def test_classifier_picks_up_direct_effect() -> None:
    report = run_fairness(_fairness_config(direct_effect=1.0))
    assert report.classifier_treatment_coefficient > 0
    assert report.classifier_dp > 0


def test_same_seed_same_report() -> None:
    cfg = _fairness_config()
    a = run_fairness(cfg)
    b = run_fairness(cfg)
    assert a.effects == b.effects
    assert a.classifier_dp == b.classifier_dp


def test_hook_events() -> None:
    seen: list[EventType] = []
    hooks = Hooks()
    hooks.on_all(lambda e: seen.append(e.type))
    run_fairness(_fairness_config(), hooks)
    assert seen == [EventType.FAIRNESS_START, EventType.TRAINING_END, EventType.FAIRNESS_END]


def test_features_end_with_attribute_and_mediator() -> None:
    d = generate_fairness_standin(50, seed=0)
    features = classifier_features(d)
    np.testing.assert_array_equal(features[:, -2], d.t)
    np.testing.assert_array_equal(features[:, -1], d.m)
    # one education level is dropped as the reference
    assert features.shape[1] == d.x_dim - 1 + 2


def test_loads_csv_with_default_schema(tmp_path: Path) -> None:
    path = write_csv(generate_fairness_standin(300, seed=2), tmp_path / "adult.csv")
    dgp = {"kind": "fairness_csv", "standardize": False}
    cfg = make_config(dgp=dgp, fairness={"csv": str(path)})
    dataset = load_fairness_data(cfg)
    assert dataset.n == 300
    assert dataset == generate_fairness_standin(300, seed=2)


def test_non_binary_outcome_rejected(synthetic_data, tmp_path: Path) -> None:
    path = write_csv(synthetic_data, tmp_path / "continuous.csv")
    cfg = make_config(
        dgp={"kind": "fairness_csv"},
        fairness={"csv": str(path), "schema": [c.model_dump() for c in synthetic_data.schema]},
    )
    with pytest.raises(DatasetError, match="binary outcome"):
        load_fairness_data(cfg)


def _study_config(**fairness: object) -> ExperimentConfig:
    return make_config(
        dgp={"kind": "fairness_csv"},
        fairness={"n": 20_000, **fairness},
        model={"z_dim": 5, "hidden_layers": 2, "layer_size": 50},
        train={"epochs": 10, "batch_size": 256, "learning_rate": 1e-3},
        effects={"samples": 20},
    )


@pytest.mark.slow
def test_unrelated_attribute_shows_no_effect() -> None:
    report = run_fairness(_study_config(mediator_effect=0.0, direct_effect=0.0))
    assert abs(report.effects.ate) <= 0.05
    assert report.ground_truth_dp <= 0.05


@pytest.mark.slow
def test_direct_discrimination_is_not_mediated() -> None:
    report = run_fairness(_study_config(mediator_effect=0.0, direct_effect=1.0))
    assert abs(report.effects.acme1) <= 0.25 * abs(report.effects.acde0)
