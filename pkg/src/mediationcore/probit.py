from __future__ import annotations

import logging
import warnings

import numpy as np
import statsmodels.api as sm
from pydantic import BaseModel
from statsmodels.tools.sm_exceptions import (
    ConvergenceWarning,
    PerfectSeparationError,
    PerfectSeparationWarning,
)

from mediationcore.exceptions import ProbitError, SingularDesignError

logger = logging.getLogger("mediationcore")


class ProbitFit(BaseModel):
    """Probit maximum-likelihood fit; the intercept comes first when added."""

    coefficients: list[float]
    converged: bool
    iterations: int
    separated: bool = False
    has_intercept: bool = True

    @property
    def params(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=np.float64)

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(len(X), -1)
        beta = self.params
        if self.has_intercept:
            return beta[0] + X @ beta[1:]
        return X @ beta


def _design(X: np.ndarray | None, n: int, add_intercept: bool) -> np.ndarray:
    columns = np.zeros((n, 0)) if X is None else np.asarray(X, dtype=np.float64).reshape(n, -1)
    if add_intercept:
        columns = np.column_stack([np.ones(n), columns])
    return columns


def fit_probit(
    X: np.ndarray | None,
    y: np.ndarray,
    *,
    add_intercept: bool = True,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> ProbitFit:
    """Fit ``P(y=1|x) = Phi(x'beta)`` by Newton-Raphson.

    Convergence means the largest absolute entry of the average score is
    below ``tol``. A response with a single class, or perfect separation
    found during the iterations, yields ``separated=True`` and
    ``converged=False``.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    n = y.shape[0]
    if n == 0:
        raise ProbitError("cannot fit a probit to an empty sample")
    if not np.all((y == 0) | (y == 1)):
        raise ProbitError("probit response must be 0/1")
    design = _design(X, n, add_intercept)
    p = design.shape[1]
    if p == 0:
        raise ProbitError("probit design has no columns")

    if y.min() == y.max():
        logger.warning("probit response has a single class; reporting separation")
        return ProbitFit(
            coefficients=[float("nan")] * p,
            converged=False,
            iterations=0,
            separated=True,
            has_intercept=add_intercept,
        )
    if np.linalg.matrix_rank(design) < p:
        raise SingularDesignError(f"probit design of {p} columns is rank deficient")

    model = sm.Probit(y, design)
    with warnings.catch_warnings():
        warnings.simplefilter("error", PerfectSeparationWarning)
        warnings.simplefilter("ignore", ConvergenceWarning)
        try:
            result = model.fit(method="newton", maxiter=max_iter, tol=tol, disp=False)
        except (PerfectSeparationError, PerfectSeparationWarning):
            logger.warning("probit hit perfect separation")
            return ProbitFit(
                coefficients=[float("nan")] * p,
                converged=False,
                iterations=0,
                separated=True,
                has_intercept=add_intercept,
            )
        except np.linalg.LinAlgError as exc:
            raise SingularDesignError(f"probit Hessian is singular: {exc}") from exc

    params = np.asarray(result.params, dtype=np.float64)
    if not np.all(np.isfinite(params)):
        raise ProbitError("probit produced non-finite coefficients")
    score = np.abs(model.score(params)).max() / n
    iterations = int(result.mle_retvals.get("iterations", max_iter))
    converged = bool(score < tol)
    if not converged:
        logger.warning(
            "probit did not converge after %d iterations (score %.3g)", iterations, score
        )
    return ProbitFit(
        coefficients=params.tolist(),
        converged=converged,
        iterations=iterations,
        has_intercept=add_intercept,
    )
