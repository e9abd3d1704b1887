"""Synthetic data-generating processes with known effects.

The structural mixture process draws a binary hidden confounder ``z`` and
exposes only noisy Gaussian proxies of it, so treatment, mediator and
outcome are confounded through a variable the estimators never see.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit

from mediationcore.dataset import ColumnSpec, Dataset, one_hot
from mediationcore.models import TrueEffects

logger = logging.getLogger("mediationcore")


class SyntheticConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(default=1000, ge=1)
    seed: int = 0
    x_dim: int = Field(default=1, ge=1)
    # P(t=1 | z=1), P(t=1 | z=0)
    treatment_probs: tuple[float, float] = (0.75, 0.25)
    # weight of z, weight of t * kappa(z)
    mediator_weights: tuple[float, float] = (0.5, 0.5)
    # weight of t, m, t * m
    outcome_weights: tuple[float, float, float] = (1.0, 1.0, 0.5)
    c_mode: Literal["per_dataset", "per_unit"] = "per_dataset"

    @field_validator("treatment_probs")
    @classmethod
    def _open_unit_interval(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not all(0.0 < p < 1.0 for p in v):
            raise ValueError("treatment probabilities must lie in (0, 1)")
        return v


def kappa(z: np.ndarray | float) -> np.ndarray:
    """Confounder-dependent strength of the treatment on the mediator."""
    return expit(1.0 + 0.2 * np.asarray(z, dtype=np.float64))


def mediator_mean(cfg: SyntheticConfig, z: np.ndarray, t: np.ndarray) -> np.ndarray:
    wz, wt = cfg.mediator_weights
    return wz * z + wt * t * kappa(z)


def outcome_mean(
    cfg: SyntheticConfig,
    z: np.ndarray,
    t: np.ndarray,
    m: np.ndarray,
    c: np.ndarray | float,
) -> np.ndarray:
    at, am, atm = cfg.outcome_weights
    return c * z + at * t + am * m + atm * t * m


def synthetic_schema(x_dim: int) -> tuple[ColumnSpec, ...]:
    proxies = [ColumnSpec(name=f"x{j}", kind="continuous") for j in range(x_dim)]
    return (
        *proxies,
        ColumnSpec(name="t", kind="binary", role="treatment"),
        ColumnSpec(name="m", kind="continuous", role="mediator"),
        ColumnSpec(name="y", kind="continuous", role="outcome"),
    )


def generate_synthetic(cfg: SyntheticConfig) -> tuple[Dataset, TrueEffects, np.ndarray]:
    """Draw one dataset; the latent ``z`` is returned for diagnostics only."""
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n
    z = rng.binomial(1, 0.5, size=n).astype(np.float64)

    # second Normal parameter is a variance
    scale = np.sqrt(25.0 * z + 9.0 * (1.0 - z))
    X = rng.normal(loc=z[:, None], scale=scale[:, None], size=(n, cfg.x_dim))

    p1, p0 = cfg.treatment_probs
    t = rng.binomial(1, p1 * z + p0 * (1.0 - z)).astype(np.float64)

    e1 = rng.standard_normal(n)
    e2 = rng.standard_normal(n)
    c = rng.standard_normal() if cfg.c_mode == "per_dataset" else rng.standard_normal(n)

    m = mediator_mean(cfg, z, t) + e1
    y = outcome_mean(cfg, z, t, m, c) + e2

    dataset = Dataset(X=X, t=t, m=m, y=y, schema=synthetic_schema(cfg.x_dim))
    return dataset, true_effects_synthetic(cfg), z


def true_effects_synthetic(cfg: SyntheticConfig) -> TrueEffects:
    """Closed-form effects of the mixture process; ``c`` only scales ``z``."""
    wz, wt = cfg.mediator_weights
    at, am, atm = cfg.outcome_weights
    mean_kappa = 0.5 * (float(kappa(0.0)) + float(kappa(1.0)))
    acme1 = (am + atm) * wt * mean_kappa
    # E[m(0)] = wz * E[z]
    acde0 = at + atm * wz * 0.5
    return TrueEffects.from_parts(acme1, acde0)


class MonteCarloTruth(BaseModel):
    effects: TrueEffects
    acme_se: float
    acde_se: float
    n: int


def true_effects_monte_carlo(
    cfg: SyntheticConfig, *, n: int = 10_000_000, seed: int = 0, chunk: int = 1_000_000
) -> MonteCarloTruth:
    """Brute-force potential-outcome oracle for the mixture process.

    Every unit gets both potential mediators and all four potential
    outcomes, sharing its exogenous noise across them.
    """
    rng = np.random.default_rng(seed)
    totals = np.zeros(2)
    sq_sum = np.zeros(2)
    done = 0
    while done < n:
        size = min(chunk, n - done)
        z = rng.binomial(1, 0.5, size=size).astype(np.float64)
        e1 = rng.standard_normal(size)
        e2 = rng.standard_normal(size)
        c = rng.standard_normal() if cfg.c_mode == "per_dataset" else rng.standard_normal(size)
        ones, zeros = np.ones(size), np.zeros(size)

        m1 = mediator_mean(cfg, z, ones) + e1
        m0 = mediator_mean(cfg, z, zeros) + e1
        y1_m1 = outcome_mean(cfg, z, ones, m1, c) + e2
        y1_m0 = outcome_mean(cfg, z, ones, m0, c) + e2
        y0_m0 = outcome_mean(cfg, z, zeros, m0, c) + e2

        unit = np.stack([y1_m1 - y1_m0, y1_m0 - y0_m0])
        totals += unit.sum(axis=1)
        sq_sum += (unit**2).sum(axis=1)
        done += size

    mean = totals / n
    var = np.maximum(sq_sum / n - mean**2, 0.0)
    se = np.sqrt(var / n)
    return MonteCarloTruth(
        effects=TrueEffects.from_parts(float(mean[0]), float(mean[1])),
        acme_se=float(se[0]),
        acde_se=float(se[1]),
        n=n,
    )


def write_true_effects(truth: TrueEffects, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(truth.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def read_true_effects(path: str | Path) -> TrueEffects:
    return TrueEffects.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Fairness stand-in
# ---------------------------------------------------------------------------


def fairness_schema() -> tuple[ColumnSpec, ...]:
    return (
        ColumnSpec(name="age", kind="continuous"),
        ColumnSpec(name="hours_per_week", kind="continuous"),
        ColumnSpec(name="capital_gain", kind="continuous"),
        ColumnSpec(name="education", kind="categorical", levels=4),
        ColumnSpec(name="married", kind="binary"),
        ColumnSpec(name="gender", kind="binary", role="treatment"),
        ColumnSpec(name="occupation", kind="binary", role="mediator"),
        ColumnSpec(name="income", kind="binary", role="outcome"),
    )


def generate_fairness_standin(
    n: int = 10_000,
    seed: int = 0,
    *,
    mediator_effect: float = 0.8,
    direct_effect: float = 0.6,
    mediator_outcome_effect: float = 1.0,
    confounding: float = 0.0,
) -> Dataset:
    """Census-like income data with a binary sensitive attribute.

    A latent socio-economic factor drives the covariates, occupation and
    income. ``mediator_effect`` is the attribute's pull on occupation,
    ``direct_effect`` its pull on income, ``confounding`` its dependence
    on the latent factor. All three at zero give an attribute that has no
    bearing on income.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(n)
    gender = rng.binomial(1, expit(confounding * u)).astype(np.float64)

    age = 38.0 + 6.0 * u + rng.normal(0.0, 10.0, n)
    hours = 40.0 + 4.0 * u + rng.normal(0.0, 8.0, n)
    capital = 0.5 * u + rng.standard_normal(n)
    edu_logits = np.stack([np.zeros(n), 0.6 * u, 1.2 * u - 0.3, 1.8 * u - 1.0], axis=1)
    edu_probs = np.exp(edu_logits - edu_logits.max(axis=1, keepdims=True))
    edu_probs /= edu_probs.sum(axis=1, keepdims=True)
    education = (rng.random(n)[:, None] > np.cumsum(edu_probs, axis=1)).sum(axis=1)
    education = np.minimum(education, 3)
    married = rng.binomial(1, expit(0.8 * u))

    occupation = rng.binomial(1, expit(-0.3 + mediator_effect * gender + 0.8 * u))
    income = rng.binomial(
        1,
        expit(-1.0 + direct_effect * gender + mediator_outcome_effect * occupation + u),
    )

    X = np.column_stack(
        [age, hours, capital, one_hot(education, 4), married.astype(np.float64)]
    )
    logger.debug("generated fairness stand-in with %d rows", n)
    return Dataset(X=X, t=gender, m=occupation, y=income, schema=fairness_schema())

