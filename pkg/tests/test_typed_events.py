from __future__ import annotations

import pytest

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
    FairnessEndData,
    FairnessStartData,
    ReplicationEndData,
    ReplicationStartData,
    TrainingEndData,
)


# ---------------------------------------------------------------------------
# Dict-compat access
# ---------------------------------------------------------------------------


def test_get_access() -> None:
    data = CellStartData(cell=1, label="n=500")
    assert data.get("cell") == 1
    assert data.get("label") == "n=500"


def test_get_default_for_missing_key() -> None:
    data = CellStartData(cell=1, label="n=500")
    assert data.get("nonexistent") is None
    assert data.get("nonexistent", "fallback") == "fallback"


def test_bracket_access() -> None:
    data = ReplicationStartData(cell=0, rep=2, seed=12)
    assert data["rep"] == 2
    assert data["seed"] == 12


def test_bracket_raises_key_error_for_missing() -> None:
    data = ReplicationStartData(cell=0, rep=2, seed=12)
    with pytest.raises(KeyError):
        data["nonexistent"]


def test_contains_and_iter() -> None:
    data = EstimatorStartData(cell=0, rep=1, estimator="cmavae")
    assert "estimator" in data
    assert "label" not in data
    assert list(data) == ["cell", "rep", "estimator"]


def test_items_returns_all_fields() -> None:
    data = EstimatorErrorData(cell=0, rep=1, estimator="lsem", error="singular")
    assert dict(data.items()) == {"cell": 0, "rep": 1, "estimator": "lsem", "error": "singular"}


# ---------------------------------------------------------------------------
# Every payload class
# ---------------------------------------------------------------------------


def test_experiment_payloads() -> None:
    start = ExperimentStartData(
        experiment="grid", dgp="synthetic", cell_count=8, reps=10, estimators=["cmavae"]
    )
    end = ExperimentEndData(experiment="grid", duration_seconds=3.5, cell_count=8)
    assert start["estimators"] == ["cmavae"]
    assert end.error_count == 0
    assert end.get("duration_seconds") == 3.5


def test_cell_and_replication_payloads() -> None:
    cell = CellEndData(cell=1, label="n=1000", duration_seconds=2.0, error_count=3)
    rep = ReplicationEndData(cell=1, rep=4, duration_seconds=0.5)
    assert cell["error_count"] == 3
    assert rep.get("rep") == 4


def test_estimator_end_payload() -> None:
    data = EstimatorEndData(
        cell=0, rep=0, estimator="lsem", duration_seconds=0.1, acme1=0.5, acde0=1.0, ate=1.5
    )
    items = dict(data.items())
    assert len(items) == 7
    assert items["ate"] == 1.5


def test_training_and_fairness_payloads() -> None:
    training = TrainingEndData(
        cell=0, rep=0, epochs=3, steps=30, final_objective=None, duration_seconds=1.2
    )
    start = FairnessStartData(n_train=800, n_test=200)
    end = FairnessEndData(duration_seconds=9.0, ate=0.1, classifier_dp=0.2, ground_truth_dp=0.25)
    assert training.get("final_objective") is None
    assert start["n_test"] == 200
    assert end.classifier_dp == 0.2


# ---------------------------------------------------------------------------
# Event with typed data or a plain dict
# ---------------------------------------------------------------------------


def test_event_with_typed_data() -> None:
    event = Event(type=EventType.CELL_START, data=CellStartData(cell=0, label="n=500"))
    assert event.data.get("cell") == 0
    assert event.data["label"] == "n=500"


def test_event_with_dict_data() -> None:
    event = Event(type=EventType.CELL_START, data={"cell": 0, "label": "n=500"})
    assert event.data["cell"] == 0


def test_event_default_data_is_empty_dict() -> None:
    event = Event(type=EventType.EXPERIMENT_START)
    assert event.data == {}
