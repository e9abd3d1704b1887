"""Semisynthetic benchmarks built by resampling a real-world base table.

Treatment and mediator are re-drawn from probit models fitted on the
base data, but only on rows that were neither treated nor mediated, so
the carried-over outcomes cannot depend on either and every true effect
is zero.
"""

from __future__ import annotations

import logging
from collections.abc import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from mediationcore.dataset import ColumnSpec, Dataset, one_hot
from mediationcore.exceptions import DatasetError, ProbitError
from mediationcore.models import TrueEffects
from mediationcore.probit import ProbitFit, fit_probit

logger = logging.getLogger("mediationcore")

TreatmentSampler = Callable[[np.ndarray, np.random.Generator], np.ndarray]
"""Draws pseudo-treatments from resampled encoded covariate rows."""


class SemiSynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int = Field(default=500, ge=1)
    eta: float = Field(default=1.0, ge=0.0)
    share: float = Field(default=0.5, gt=0.0, lt=1.0)
    mediator_threshold: float = 3.0
    binarize_mediator: bool = False
    seed: int = 0


class ProxyNoiseConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    p_c: float = Field(default=0.1, ge=0.0, le=0.5)
    bins: int = Field(default=3, ge=2)
    replications: int = Field(default=3, ge=1)
    w_x_mean: float = 0.0
    w_x_var: float = Field(default=0.1, ge=0.0)
    w_z_mean: float = 5.0
    w_z_var: float = Field(default=0.1, ge=0.0)
    seed: int = 0


# ---------------------------------------------------------------------------
# Mediation share calibration
# ---------------------------------------------------------------------------


def calibrate_alpha(systematic: np.ndarray, share: float, threshold: float) -> float:
    """Shift that puts ``round(share * n)`` values at or above ``threshold``."""
    values = np.asarray(systematic, dtype=np.float64).reshape(-1)
    n = values.size
    if n == 0:
        raise DatasetError("cannot calibrate a mediation share on an empty vector")
    k = int(np.clip(round(share * n), 1, n))
    kth_largest = np.sort(values)[::-1][k - 1]
    alpha = threshold - kth_largest
    while kth_largest + alpha < threshold:
        alpha = np.nextafter(alpha, np.inf)
    return float(alpha)


# ---------------------------------------------------------------------------
# Resampling simulator
# ---------------------------------------------------------------------------


def _require_converged(fit: ProbitFit, what: str) -> ProbitFit:
    if fit.separated:
        raise ProbitError(f"{what} probit is perfectly separated")
    if not fit.converged:
        raise ProbitError(f"{what} probit did not converge")
    return fit


def simulate_semisynthetic(
    base: Dataset,
    cfg: SemiSynthConfig,
    *,
    treatment_sampler: TreatmentSampler | None = None,
) -> tuple[Dataset, TrueEffects]:
    """Resample ``base`` into a dataset whose true effects are all zero.

    ``treatment_sampler`` replaces the fitted treatment probit when the
    pseudo-treatment has to follow another law.
    """
    if base.mediator_kind != "continuous":
        raise DatasetError(
            "semisynthetic simulation needs a continuous mediator",
            column=base.mediator_column.name,
        )

    design = base.design_matrix(drop_reference=True, drop_constant=True)
    mediated = (base.m >= cfg.mediator_threshold).astype(np.float64)

    treatment_fit = _require_converged(fit_probit(design, base.t), "treatment")
    mediator_fit = _require_converged(
        fit_probit(np.column_stack([base.t, design]), mediated), "mediator"
    )

    pool = np.flatnonzero((base.t == 0) & (mediated == 0))
    if pool.size == 0:
        raise DatasetError("no untreated, unmediated rows survive to resample from")
    logger.debug(
        "resampling %d rows from %d untreated unmediated rows", cfg.n, pool.size
    )

    rng = np.random.default_rng(cfg.seed)
    rows = rng.choice(pool, size=cfg.n, replace=True)
    X_rows = design[rows]

    if treatment_sampler is None:
        u = rng.standard_normal(cfg.n)
        t = (treatment_fit.linear_predictor(X_rows) + u > 0).astype(np.float64)
    else:
        t = np.asarray(treatment_sampler(base.X[rows], rng), dtype=np.float64)

    beta = mediator_fit.params
    # intercept, treatment slope, covariate slopes
    v = rng.standard_normal(cfg.n)
    systematic = cfg.eta * (beta[0] + t * beta[1] + X_rows @ beta[2:]) + v
    alpha = calibrate_alpha(systematic, cfg.share, cfg.mediator_threshold)
    m = systematic + alpha

    mediator_kind = "continuous"
    if cfg.binarize_mediator:
        m = (m >= cfg.mediator_threshold).astype(np.float64)
        mediator_kind = "binary"

    resampled = base.subset(rows)
    dataset = resampled.with_targets(t=t, m=m, mediator_kind=mediator_kind)
    return dataset, TrueEffects.zero()


# ---------------------------------------------------------------------------
# Proxy noise
# ---------------------------------------------------------------------------


def proxy_bins(z: np.ndarray, bins: int) -> np.ndarray:
    """Equal-count bin codes of ``z``; ties are ordered by value, then position."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    distinct = np.unique(z).size
    if bins > distinct:
        raise DatasetError(f"cannot form {bins} bins from {distinct} distinct values")
    order = np.argsort(z, kind="stable")
    ranks = np.empty(z.size, dtype=np.int64)
    ranks[order] = np.arange(z.size)
    return (ranks * bins) // z.size


def clean_proxies(z: np.ndarray, bins: int, replications: int) -> np.ndarray:
    """Replicated one-hot bin encoding before any flips."""
    return np.tile(one_hot(proxy_bins(z, bins), bins), (1, replications))


def _confounder_column(base: Dataset, confounder: str) -> tuple[ColumnSpec, slice]:
    spec = next((c for c in base.covariates if c.name == confounder), None)
    if spec is None:
        raise DatasetError("not a covariate of this dataset", column=confounder)
    if spec.kind != "continuous":
        raise DatasetError("proxy noise needs a continuous confounder", column=confounder)
    return spec, base.column_slice(confounder)


def _proxy_weights(
    cfg: ProxyNoiseConfig, width: int, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    # variances, one w_x entry per covariate slot
    w_x = rng.normal(cfg.w_x_mean, np.sqrt(cfg.w_x_var), size=width)
    w_z = float(rng.normal(cfg.w_z_mean, np.sqrt(cfg.w_z_var)))
    return w_x, w_z


def _covariate_scaling(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Per-slot location and scale; only continuous slots are rescaled."""
    continuous = np.array([kind == "continuous" for kind in d.encoded_kinds])
    std = d.X.std(axis=0)
    loc = np.where(continuous, d.X.mean(axis=0), 0.0)
    scale = np.where(continuous & (std > 0), std, 1.0)
    return loc, scale


def _proxy_treatment_prob(
    x_rest: np.ndarray, z: np.ndarray, w_x: np.ndarray, w_z: float
) -> np.ndarray:
    # x_rest standardized, z on its own scale
    return expit(x_rest @ w_x + w_z * (z / 3.0 - 0.3))


def make_proxy_treatment_sampler(
    base: Dataset, confounder: str, cfg: ProxyNoiseConfig
) -> TreatmentSampler:
    """Treatment law of the proxy-noise benchmark, for resampled rows of ``base``."""
    _, block = _confounder_column(base, confounder)
    rest = np.r_[0 : block.start, block.stop : base.x_dim]
    w_x, w_z = _proxy_weights(cfg, rest.size, np.random.default_rng(cfg.seed))
    loc, scale = _covariate_scaling(base)

    def sample(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        x_rest = ((rows - loc) / scale)[:, rest]
        prob = _proxy_treatment_prob(x_rest, rows[:, block.start], w_x, w_z)
        return rng.binomial(1, prob).astype(np.float64)

    return sample


def inject_proxy_noise(
    base: Dataset,
    confounder: str,
    cfg: ProxyNoiseConfig,
    *,
    resimulate_treatment: bool = True,
) -> Dataset:
    """Hide ``confounder`` behind noisy binary proxies.

    The confounder is binned into ``cfg.bins`` equal-count groups, the
    one-hot encoding is replicated ``cfg.replications`` times and every
    bit is flipped with probability ``cfg.p_c``. With
    ``resimulate_treatment`` the treatment is first redrawn from the
    logistic law on the remaining covariates, continuous ones standardized,
    and the raw confounder.
    """
    spec, block = _confounder_column(base, confounder)
    z = base.X[:, block.start]
    rest = np.r_[0 : block.start, block.stop : base.x_dim]
    rng = np.random.default_rng(cfg.seed)

    t = base.t
    if resimulate_treatment:
        w_x, w_z = _proxy_weights(cfg, rest.size, rng)
        loc, scale = _covariate_scaling(base)
        x_rest = ((base.X - loc) / scale)[:, rest]
        prob = _proxy_treatment_prob(x_rest, z, w_x, w_z)
        t = rng.binomial(1, prob)

    clean = clean_proxies(z, cfg.bins, cfg.replications)
    flips = rng.random(clean.shape) < cfg.p_c
    noisy = np.where(flips, 1.0 - clean, clean)

    columns = [
        ColumnSpec(name=f"{spec.name}_proxy_r{r}_b{b}", kind="binary")
        for r in range(cfg.replications)
        for b in range(cfg.bins)
    ]
    logger.debug(
        "replaced '%s' with %d proxies at flip probability %.2f",
        confounder,
        len(columns),
        cfg.p_c,
    )
    return base.replace_covariate(confounder, columns, noisy).with_targets(t=t)


# ---------------------------------------------------------------------------
# Job-training stand-in base table
# ---------------------------------------------------------------------------


def jobs_schema() -> tuple[ColumnSpec, ...]:
    return (
        ColumnSpec(name="econ_hard", kind="continuous"),
        ColumnSpec(name="depress1", kind="continuous"),
        ColumnSpec(name="sex", kind="binary"),
        ColumnSpec(name="age", kind="continuous"),
        ColumnSpec(name="nonwhite", kind="binary"),
        ColumnSpec(name="occp", kind="categorical", levels=4),
        ColumnSpec(name="marital", kind="categorical", levels=3),
        ColumnSpec(name="educ", kind="categorical", levels=4),
        ColumnSpec(name="income", kind="categorical", levels=4),
        ColumnSpec(name="work1", kind="binary"),
        ColumnSpec(name="unemp_months", kind="continuous"),
        ColumnSpec(name="children", kind="continuous"),
        ColumnSpec(name="health", kind="continuous"),
        ColumnSpec(name="self_esteem", kind="continuous"),
        ColumnSpec(name="social_support", kind="continuous"),
        ColumnSpec(name="mastery", kind="continuous"),
        ColumnSpec(name="anxiety1", kind="continuous"),
        ColumnSpec(name="treat", kind="binary", role="treatment"),
        ColumnSpec(name="job_seek", kind="continuous", role="mediator"),
        ColumnSpec(name="depress2", kind="continuous", role="outcome"),
    )


def _likert(rng: np.random.Generator, center: np.ndarray, spread: float) -> np.ndarray:
    return np.clip(center + rng.normal(0.0, spread, center.size), 1.0, 5.0)


def _categorical(rng: np.random.Generator, shift: np.ndarray, levels: int) -> np.ndarray:
    cut = np.linspace(-1.0, 1.0, levels - 1)
    return (shift[:, None] + rng.logistic(0.0, 0.6, shift.size)[:, None] > cut).sum(axis=1)


def generate_jobs_standin(n: int = 899, seed: int = 0) -> Dataset:
    """Job-search intervention survey look-alike with 17 covariates.

    Pre-treatment depression ``depress1`` drives job-search self-efficacy
    ``job_seek`` and later depression ``depress2``, making it a natural
    confounder to hide behind proxies.
    """
    rng = np.random.default_rng(seed)
    distress = rng.standard_normal(n)

    depress1 = _likert(rng, 1.9 + 0.45 * distress, 0.3)
    econ_hard = _likert(rng, 3.0 + 0.4 * distress, 0.8)
    anxiety1 = _likert(rng, 2.0 + 0.4 * distress, 0.5)
    self_esteem = _likert(rng, 3.8 - 0.4 * distress, 0.5)
    mastery = _likert(rng, 3.5 - 0.3 * distress, 0.6)
    social_support = _likert(rng, 3.4 - 0.2 * distress, 0.7)
    health = _likert(rng, 3.6 - 0.2 * distress, 0.8)
    age = np.clip(rng.normal(37.0, 10.0, n), 18.0, 70.0)
    unemp_months = rng.gamma(2.0, 3.0, n)
    children = rng.poisson(1.2, n).astype(np.float64)
    sex = rng.binomial(1, 0.54, n)
    nonwhite = rng.binomial(1, 0.2, n)
    work1 = rng.binomial(1, expit(1.0 - 0.3 * distress), n)

    occp = _categorical(rng, 0.2 * rng.standard_normal(n), 4)
    marital = _categorical(rng, 0.01 * (age - 37.0), 3)
    educ = _categorical(rng, -0.2 * distress, 4)
    income = _categorical(rng, 0.5 * (educ - 1.5) / 1.5 - 0.2 * distress, 4)

    treat = rng.binomial(1, 2.0 / 3.0, n)
    job_seek = _likert(
        rng,
        3.6 + 0.15 * treat - 0.5 * (depress1 - 1.9) + 0.2 * (self_esteem - 3.8),
        0.6,
    )
    depress2 = _likert(
        rng,
        1.0 + 0.55 * depress1 - 0.1 * (job_seek - 3.6) + 0.15 * (econ_hard - 3.0),
        0.4,
    )

    X = np.column_stack(
        [
            econ_hard,
            depress1,
            sex,
            age,
            nonwhite,
            one_hot(occp, 4),
            one_hot(marital, 3),
            one_hot(educ, 4),
            one_hot(income, 4),
            work1,
            unemp_months,
            children,
            health,
            self_esteem,
            social_support,
            mastery,
            anxiety1,
        ]
    )
    return Dataset(X=X, t=treat, m=job_seek, y=depress2, schema=jobs_schema())
