"""Monte-Carlo effect estimation from a fitted model, and error scoring.

Every estimate follows the same chain: draw ``z`` from the posterior
given only the proxies, intervene on the treatment inside the decoder,
and average decoder outcome means. Units are independent, so the evaluation
rows are processed in chunks of at most ``MAX_DRAWS_PER_CHUNK`` posterior
draws and their contrasts summed.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence

import numpy as np
import torch

from mediationcore.exceptions import EstimationError
from mediationcore.model import MediationVAE, PosteriorDraws
from mediationcore.models import AbsoluteErrors, EffectEstimate, ErrorReport, TrueEffects

logger = logging.getLogger("mediationcore")

DEFAULT_SAMPLES = 100
MAX_DRAWS_PER_CHUNK = 65_536

# posterior z draws -> one row of per-draw outcome contrasts per effect
Contrast = Callable[[torch.Tensor], torch.Tensor]


def _prepare(
    model: MediationVAE, X_eval: np.ndarray | torch.Tensor, samples: int, seed: int
) -> tuple[torch.Tensor, torch.Generator]:
    if not model.fitted:
        raise EstimationError("model has not been trained")
    if samples < 1:
        raise EstimationError(f"posterior sample count must be >= 1, got {samples}")
    x = torch.as_tensor(np.array(X_eval, dtype=np.float64)).to(model.dtype)
    if x.ndim != 2 or x.shape[0] == 0:
        raise EstimationError("evaluation covariates must be a non-empty matrix")
    if x.shape[1] != model.config.x_dim:
        raise EstimationError(
            f"evaluation covariates have {x.shape[1]} columns, model expects {model.config.x_dim}"
        )
    return x, torch.Generator().manual_seed(seed)


def _flat_z(draws: PosteriorDraws) -> torch.Tensor:
    return draws.z.reshape(-1, draws.z.shape[-1])


def _mean_contrast(
    model: MediationVAE,
    x: torch.Tensor,
    samples: int,
    generator: torch.Generator,
    contrast: Contrast,
) -> list[float]:
    """Average ``contrast`` over every unit and draw, in outcome units."""
    rows = max(1, MAX_DRAWS_PER_CHUNK // samples)
    total = torch.zeros((), dtype=torch.float64)
    for start in range(0, x.shape[0], rows):
        z = _flat_z(model.sample_posterior_z(x[start : start + rows], samples, generator))
        chunk = contrast(z).double().sum(dim=-1)
        total = total + chunk
    mean = total * model.outcome_scale / (x.shape[0] * samples)
    return [float(v) for v in mean]


def _arm(z: torch.Tensor, value: float) -> torch.Tensor:
    return torch.full((z.shape[0],), value, dtype=z.dtype)


@torch.no_grad()
def estimate_acme(
    model: MediationVAE,
    X_eval: np.ndarray | torch.Tensor,
    t: int = 1,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> float:
    """Mediation effect with the treatment held at ``t``."""
    x, generator = _prepare(model, X_eval, samples, seed)

    def contrast(z: torch.Tensor) -> torch.Tensor:
        m1 = model.sample_mediator(z, _arm(z, 1.0), generator)
        m0 = model.sample_mediator(z, _arm(z, 0.0), generator)
        fixed = _arm(z, float(t))
        return (model.outcome_mean(z, m1, fixed) - model.outcome_mean(z, m0, fixed)).unsqueeze(0)

    (acme,) = _mean_contrast(model, x, samples, generator, contrast)
    return acme


@torch.no_grad()
def estimate_acde(
    model: MediationVAE,
    X_eval: np.ndarray | torch.Tensor,
    t: int = 0,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> float:
    """Direct effect with the mediator drawn under arm ``t``."""
    x, generator = _prepare(model, X_eval, samples, seed)

    def contrast(z: torch.Tensor) -> torch.Tensor:
        m = model.sample_mediator(z, _arm(z, float(t)), generator)
        y1 = model.outcome_mean(z, m, _arm(z, 1.0))
        return (y1 - model.outcome_mean(z, m, _arm(z, 0.0))).unsqueeze(0)

    (acde,) = _mean_contrast(model, x, samples, generator, contrast)
    return acde


@torch.no_grad()
def estimate_effects(
    model: MediationVAE,
    X_eval: np.ndarray | torch.Tensor,
    samples: int = DEFAULT_SAMPLES,
    seed: int = 0,
) -> EffectEstimate:
    """Mediation effect under treatment and direct effect under control.

    Both share the posterior draws and the control-arm mediator draw; the
    total effect is their sum.
    """
    x, generator = _prepare(model, X_eval, samples, seed)

    def contrast(z: torch.Tensor) -> torch.Tensor:
        ones, zeros = _arm(z, 1.0), _arm(z, 0.0)
        m1 = model.sample_mediator(z, ones, generator)
        m0 = model.sample_mediator(z, zeros, generator)
        y1_m1 = model.outcome_mean(z, m1, ones)
        y1_m0 = model.outcome_mean(z, m0, ones)
        y0_m0 = model.outcome_mean(z, m0, zeros)
        return torch.stack([y1_m1 - y1_m0, y1_m0 - y0_m0])

    acme1, acde0 = _mean_contrast(model, x, samples, generator, contrast)
    logger.debug("effects over %d units x %d draws: %.4f, %.4f", x.shape[0], samples, acme1, acde0)
    return EffectEstimate.from_parts(acme1, acde0, samples=samples, n_eval=x.shape[0])


def error_report(estimates: Sequence[EffectEstimate], truth: TrueEffects) -> ErrorReport:
    """Absolute errors per replication with mean and sample std (divisor reps - 1)."""
    if not estimates:
        raise EstimationError("no replications to score")
    errors = [AbsoluteErrors.between(e, truth) for e in estimates]
    table = np.array(
        [[e.abs_err_acme, e.abs_err_acde, e.abs_err_ate] for e in errors], dtype=np.float64
    )
    means = table.mean(axis=0)
    single = len(errors) == 1
    stds = np.zeros(3) if single else table.std(axis=0, ddof=1)
    return ErrorReport(
        errors=errors,
        acme_mean=float(means[0]),
        acme_std=float(stds[0]),
        acde_mean=float(means[1]),
        acde_std=float(stds[1]),
        ate_mean=float(means[2]),
        ate_std=float(stds[2]),
        single_replication=single,
    )
