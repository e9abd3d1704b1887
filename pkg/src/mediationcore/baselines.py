"""Linear structural-equation baselines and fairness helpers."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
import statsmodels.api as sm
from pydantic import BaseModel
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression

from mediationcore.dataset import Dataset
from mediationcore.exceptions import BaselineError, SingularDesignError
from mediationcore.models import EffectEstimate

logger = logging.getLogger("mediationcore")


class OlsFit(BaseModel):
    coefficients: list[float]
    standard_errors: list[float]
    residual_variance: float

    @property
    def params(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=np.float64)


def fit_ols(X: np.ndarray | None, y: np.ndarray, *, add_intercept: bool = True) -> OlsFit:
    """Least squares through a QR decomposition; the intercept comes first."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = y.shape[0]
    columns = np.zeros((n, 0)) if X is None else np.asarray(X, dtype=np.float64).reshape(n, -1)
    design = np.column_stack([np.ones(n), columns]) if add_intercept else columns
    p = design.shape[1]
    if p == 0:
        raise SingularDesignError("OLS design has no columns")
    if n <= p:
        raise SingularDesignError(f"OLS needs more rows than columns ({n} <= {p})")
    if np.linalg.matrix_rank(design) < p:
        raise SingularDesignError(f"OLS design of {p} columns is rank deficient")

    result = sm.OLS(y, design).fit(method="qr")
    return OlsFit(
        coefficients=np.asarray(result.params, dtype=np.float64).tolist(),
        standard_errors=np.asarray(result.bse, dtype=np.float64).tolist(),
        residual_variance=float(result.scale),
    )


class LsemResult(BaseModel):
    mediator_model: OlsFit
    outcome_model: OlsFit
    gamma_t: float
    theta_t: float
    theta_m: float
    theta_tm: float | None = None
    acme_standard_error: float
    effects: EffectEstimate


def _require_continuous(d: Dataset) -> None:
    if d.mediator_kind != "continuous" or d.outcome_kind != "continuous":
        raise BaselineError("linear structural equations need a continuous mediator and outcome")


def lsem_effects(d: Dataset) -> LsemResult:
    """Product-of-coefficients estimates from ``m ~ t + x`` and ``y ~ t + m + x``."""
    _require_continuous(d)
    covariates = d.design_matrix(drop_reference=True, drop_constant=True)
    mediator = fit_ols(np.column_stack([d.t, covariates]), d.m)
    outcome = fit_ols(np.column_stack([d.t, d.m, covariates]), d.y)

    gamma_t = mediator.coefficients[1]
    theta_t, theta_m = outcome.coefficients[1], outcome.coefficients[2]
    se = math.hypot(theta_m * mediator.standard_errors[1], gamma_t * outcome.standard_errors[2])
    return LsemResult(
        mediator_model=mediator,
        outcome_model=outcome,
        gamma_t=gamma_t,
        theta_t=theta_t,
        theta_m=theta_m,
        acme_standard_error=se,
        effects=EffectEstimate.from_parts(gamma_t * theta_m, theta_t, n_eval=d.n),
    )


def lsem_i_effects(d: Dataset) -> LsemResult:
    """Like :func:`lsem_effects` with a treatment-mediator interaction in the outcome model.

    The direct effect under control evaluates the interaction at the mean
    fitted mediator under control, ``mean(gamma_0 + x'gamma)``.
    """
    _require_continuous(d)
    covariates = d.design_matrix(drop_reference=True, drop_constant=True)
    mediator = fit_ols(np.column_stack([d.t, covariates]), d.m)
    outcome = fit_ols(np.column_stack([d.t, d.m, d.t * d.m, covariates]), d.y)

    gamma = mediator.params
    gamma_t = float(gamma[1])
    theta_t, theta_m, theta_tm = (float(v) for v in outcome.params[1:4])
    mediator_control = float(np.mean(gamma[0] + covariates @ gamma[2:]))

    acme1 = gamma_t * (theta_m + theta_tm)
    acde0 = theta_t + theta_tm * mediator_control
    se = math.hypot(
        (theta_m + theta_tm) * mediator.standard_errors[1],
        gamma_t * math.hypot(outcome.standard_errors[2], outcome.standard_errors[3]),
    )
    return LsemResult(
        mediator_model=mediator,
        outcome_model=outcome,
        gamma_t=gamma_t,
        theta_t=theta_t,
        theta_m=theta_m,
        theta_tm=theta_tm,
        acme_standard_error=se,
        effects=EffectEstimate.from_parts(acme1, acde0, n_eval=d.n),
    )


# ---------------------------------------------------------------------------
# Fairness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogisticFit:
    """Penalized logistic regression; ``l2`` weights ``0.5 * ||w||^2`` against the summed log-loss."""

    estimator: LogisticRegression
    converged: bool

    @property
    def intercept(self) -> float:
        return float(self.estimator.intercept_[0])

    @property
    def coefficients(self) -> np.ndarray:
        return np.asarray(self.estimator.coef_[0], dtype=np.float64)

    @property
    def iterations(self) -> int:
        return int(np.max(self.estimator.n_iter_))

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.estimator.predict_proba(np.asarray(X, dtype=np.float64))[:, 1]

    def predict(self, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)


def fit_logistic(
    X: np.ndarray,
    y01: np.ndarray,
    *,
    l2: float = 1.0,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> LogisticFit:
    y01 = np.asarray(y01).reshape(-1)
    if not np.all((y01 == 0) | (y01 == 1)):
        raise BaselineError("logistic response must be 0/1")
    if np.unique(y01).size < 2:
        raise BaselineError("logistic regression needs both classes")
    if l2 < 0:
        raise BaselineError(f"l2 penalty must be >= 0, got {l2}")

    if l2 > 0:
        estimator = LogisticRegression(C=1.0 / l2, max_iter=max_iter, tol=tol)
    else:
        estimator = LogisticRegression(penalty=None, max_iter=max_iter, tol=tol)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        estimator.fit(np.asarray(X, dtype=np.float64), y01.astype(np.int64))
    converged = not any(issubclass(w.category, ConvergenceWarning) for w in caught)
    if not converged:
        logger.warning("logistic regression did not converge in %d iterations", max_iter)
    return LogisticFit(estimator=estimator, converged=converged)


def demographic_disparity(y_hat01: np.ndarray, t: np.ndarray) -> float:
    """``|P(y_hat=1 | t=1) - P(y_hat=1 | t=0)|``."""
    y_hat01 = np.asarray(y_hat01, dtype=np.float64).reshape(-1)
    t = np.asarray(t).reshape(-1)
    if y_hat01.shape != t.shape:
        raise BaselineError("predictions and sensitive attribute differ in length")
    treated, control = y_hat01[t == 1], y_hat01[t == 0]
    if treated.size == 0 or control.size == 0:
        raise BaselineError("demographic disparity needs both groups")
    return float(abs(treated.mean() - control.mean()))
