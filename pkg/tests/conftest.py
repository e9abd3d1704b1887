from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from mediationcore.config import ExperimentConfig, parse_config
from mediationcore.dataset import ColumnSpec, Dataset
from mediationcore.dgp import SyntheticConfig, generate_synthetic
from mediationcore.model import ModelConfig
from mediationcore.semisynthetic import generate_jobs_standin
from mediationcore.training import TrainConfig

TINY_MODEL = {"z_dim": 2, "hidden_layers": 1, "layer_size": 8}
TINY_TRAIN = {"epochs": 1, "batch_size": 32}


def make_config(**overrides: Any) -> ExperimentConfig:
    """A fast experiment config; nested ``dgp`` overrides are merged."""
    data: dict[str, Any] = {
        "name": "tiny",
        "seed": 7,
        "reps": 2,
        "estimators": ["cmavae", "lsem", "lsem_i"],
        "dgp": {"kind": "synthetic", "n": [60, 80]},
        "model": dict(TINY_MODEL),
        "train": dict(TINY_TRAIN),
        "effects": {"samples": 5},
    }
    dgp = overrides.pop("dgp", None)
    data.update(overrides)
    if dgp is not None:
        data["dgp"] = {**data["dgp"], **dgp}
    return parse_config(data)


def mixed_schema() -> tuple[ColumnSpec, ...]:
    return (
        ColumnSpec(name="age", kind="continuous"),
        ColumnSpec(name="smoker", kind="binary"),
        ColumnSpec(name="region", kind="categorical", levels=3),
        ColumnSpec(name="t", kind="binary", role="treatment"),
        ColumnSpec(name="m", kind="continuous", role="mediator"),
        ColumnSpec(name="y", kind="binary", role="outcome"),
    )


@pytest.fixture
def synthetic_data() -> Dataset:
    dataset, _, _ = generate_synthetic(SyntheticConfig(n=200, seed=0))
    return dataset


@pytest.fixture
def mixed_data() -> Dataset:
    """Twelve rows with every covariate kind and a binary outcome."""
    rng = np.random.default_rng(3)
    n = 12
    region = np.arange(n) % 3
    X = np.column_stack(
        [
            rng.normal(40.0, 5.0, n),
            np.arange(n) % 2,
            np.eye(3)[region],
        ]
    )
    t = np.array([0, 1] * (n // 2))
    return Dataset(
        X=X,
        t=t,
        m=rng.standard_normal(n),
        y=(np.arange(n) % 4 == 0).astype(float),
        schema=mixed_schema(),
    )


@pytest.fixture(scope="session")
def jobs_base() -> Dataset:
    return generate_jobs_standin(400, seed=1)


@pytest.fixture
def tiny_model_config(synthetic_data: Dataset) -> ModelConfig:
    return ModelConfig.for_dataset(synthetic_data, **TINY_MODEL)


@pytest.fixture
def tiny_train_config() -> TrainConfig:
    return TrainConfig(epochs=2, batch_size=50, learning_rate=1e-3, seed=0)


@pytest.fixture
def tiny_config() -> ExperimentConfig:
    return make_config()
