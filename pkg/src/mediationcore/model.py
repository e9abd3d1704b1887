"""Variational mediation model with treatment-conditional heads.

Generative side::

    z ~ N(0, I)
    x ~ p(x | z)                   proxies
    t ~ Bern(sigmoid(f1(z)))       treatment
    m ~ p(m | z, t)                f2 (t=1) / f3 (t=0)
    y ~ p(y | z, m, t)             f4 (t=1) / f5 (t=0), input z∘m

Inference side::

    q(z | x, y, m, t)              g2 (t=1) / g1 (t=0), input x∘y∘m
    q(t | x)                       g3
    q(m | x, t)                    g4 (t=1) / g5 (t=0)
    q(y | x, m, t)                 g6 (t=1) / g7 (t=0), input x∘m

The auxiliary ``q`` networks let the posterior over ``z`` be sampled for
units whose treatment, mediator and outcome are not observed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Literal

import numpy as np
import torch
import torch.nn.functional as F
from pydantic import BaseModel, ConfigDict, Field, model_validator
from torch import nn
from torch.distributions import Bernoulli, Distribution, Normal, kl_divergence

from mediationcore.dataset import Dataset
from mediationcore.exceptions import ConfigError, ObjectiveError
from mediationcore.nets import FullyConnected, TwinNet, init_parameters, mlp_sizes

logger = logging.getLogger("mediationcore")

Kind = Literal["continuous", "binary"]

PROB_EPS = 1e-7


class ModelConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_dim: int = Field(ge=1)
    x_kinds: tuple[Kind, ...] = ()
    z_dim: int = Field(default=10, ge=1)
    hidden_layers: int = Field(default=5, ge=0)
    layer_size: int = Field(default=100, ge=1)
    treatment_hidden_layers: int = Field(default=1, ge=0)
    mediator_variance: float = Field(default=1.0, gt=0.0)
    outcome_variance: float = Field(default=1.0, gt=0.0)
    aux_mediator_variance: float = Field(default=1.0, gt=0.0)
    aux_outcome_variance: float = Field(default=1.0, gt=0.0)
    mediator_kind: Kind = "continuous"
    outcome_kind: Kind = "continuous"
    dtype: Literal["float32", "float64"] = "float32"

    @model_validator(mode="before")
    @classmethod
    def _default_x_kinds(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("x_kinds") and "x_dim" in data:
            data = {**data, "x_kinds": ("continuous",) * int(data["x_dim"])}
        return data

    @model_validator(mode="after")
    def _kinds_match_width(self) -> ModelConfig:
        if len(self.x_kinds) != self.x_dim:
            raise ValueError(f"x_kinds has {len(self.x_kinds)} entries for x_dim={self.x_dim}")
        return self

    @property
    def torch_dtype(self) -> torch.dtype:
        return torch.float64 if self.dtype == "float64" else torch.float32

    @classmethod
    def for_dataset(cls, dataset: Dataset, **overrides: Any) -> ModelConfig:
        settings: dict[str, Any] = {
            "x_dim": dataset.x_dim,
            "x_kinds": dataset.encoded_kinds,
            "mediator_kind": dataset.mediator_kind,
            "outcome_kind": dataset.outcome_kind,
        }
        settings.update(overrides)
        return cls(**settings)


def _to_tensor(values: np.ndarray, dtype: torch.dtype) -> torch.Tensor:
    return torch.from_numpy(np.array(values, dtype=np.float64)).to(dtype)


@dataclass(frozen=True)
class Batch:
    x: torch.Tensor
    t: torch.Tensor
    m: torch.Tensor
    y: torch.Tensor

    @classmethod
    def from_dataset(cls, dataset: Dataset, dtype: torch.dtype = torch.float32) -> Batch:
        return cls(
            x=_to_tensor(dataset.X, dtype),
            t=_to_tensor(dataset.t, dtype),
            m=_to_tensor(dataset.m, dtype),
            y=_to_tensor(dataset.y, dtype),
        )

    def __len__(self) -> int:
        return self.x.shape[0]

    def index(self, idx: torch.Tensor) -> Batch:
        return Batch(x=self.x[idx], t=self.t[idx], m=self.m[idx], y=self.y[idx])


@dataclass(frozen=True)
class PosteriorDraw:
    z: torch.Tensor
    t: torch.Tensor
    m: torch.Tensor
    y: torch.Tensor


@dataclass(frozen=True)
class PosteriorDraws:
    """``L`` stacked posterior draws; leading axis is the draw index."""

    z: torch.Tensor
    t: torch.Tensor
    m: torch.Tensor
    y: torch.Tensor

    def __len__(self) -> int:
        return self.z.shape[0]

    def __getitem__(self, i: int) -> PosteriorDraw:
        return PosteriorDraw(z=self.z[i], t=self.t[i], m=self.m[i], y=self.y[i])


@dataclass(frozen=True)
class AuxPrediction:
    treatment_prob: torch.Tensor
    mediator_treated: Distribution
    mediator_control: Distribution
    outcome_treated: Distribution
    outcome_control: Distribution


def _distribution(kind: Kind, out: torch.Tensor, variance: float) -> Distribution:
    if kind == "binary":
        return Bernoulli(logits=out)
    return Normal(out, variance**0.5)


def _log_density(kind: Kind, value: torch.Tensor, out: torch.Tensor, variance: float) -> torch.Tensor:
    if kind == "binary":
        return -F.binary_cross_entropy_with_logits(out, value, reduction="none")
    return Normal(out, variance**0.5).log_prob(value)


def _mean(kind: Kind, out: torch.Tensor) -> torch.Tensor:
    if kind == "binary":
        return torch.sigmoid(out).clamp(PROB_EPS, 1.0 - PROB_EPS)
    return out


def _sample(
    kind: Kind, out: torch.Tensor, variance: float, generator: torch.Generator | None
) -> torch.Tensor:
    if kind == "binary":
        return torch.bernoulli(_mean(kind, out), generator=generator)
    noise = torch.randn(out.shape, generator=generator, dtype=out.dtype)
    return out + variance**0.5 * noise


def _check_finite(term: str, value: torch.Tensor) -> torch.Tensor:
    if not torch.isfinite(value).all():
        raise ObjectiveError(term)
    return value


class MediationVAE(nn.Module):
    def __init__(self, config: ModelConfig, *, seed: int = 0) -> None:
        super().__init__()
        self.config = config
        c = config
        hidden, width = c.hidden_layers, c.layer_size

        # decoder
        self.x_decoder = FullyConnected(mlp_sizes(c.z_dim, hidden, width, c.x_dim))
        self.treatment_decoder = FullyConnected(
            mlp_sizes(c.z_dim, c.treatment_hidden_layers, width, 1)
        )
        self.mediator_decoder = TwinNet(mlp_sizes(c.z_dim, hidden, width, 1))
        self.outcome_decoder = TwinNet(mlp_sizes(c.z_dim + 1, hidden, width, 1))

        # encoder and auxiliary predictors
        self.encoder = TwinNet(mlp_sizes(c.x_dim + 2, hidden, width, 2 * c.z_dim))
        self.aux_treatment = FullyConnected(
            mlp_sizes(c.x_dim, c.treatment_hidden_layers, width, 1)
        )
        self.aux_mediator = TwinNet(mlp_sizes(c.x_dim, hidden, width, 1))
        self.aux_outcome = TwinNet(mlp_sizes(c.x_dim + 1, hidden, width, 1))

        self.register_buffer(
            "continuous_x",
            torch.tensor([k == "continuous" for k in c.x_kinds], dtype=torch.bool),
        )
        # mediator, outcome
        self.register_buffer("target_loc", torch.zeros(2))
        self.register_buffer("target_scale", torch.ones(2))
        init_parameters(self, torch.Generator().manual_seed(seed))
        self.to(c.torch_dtype)

        self.fitted = False
        self.training_steps = 0
        self.objective_trace: list[float] = []

    @property
    def dtype(self) -> torch.dtype:
        return self.config.torch_dtype

    # -- Target scaling ------------------------------------------------

    def fit_target_scaling(self, dataset: Dataset) -> None:
        """Standardize a continuous mediator and outcome for fitting.

        Every network then works in these units: observed values pass
        through :meth:`scale_targets`, and outcome contrasts are mapped
        back with :attr:`outcome_scale`. Binary targets stay on 0/1.
        """
        loc, scale = [0.0, 0.0], [1.0, 1.0]
        for i, (kind, values) in enumerate(
            [(dataset.mediator_kind, dataset.m), (dataset.outcome_kind, dataset.y)]
        ):
            if kind == "continuous":
                loc[i] = float(values.mean())
                std = float(values.std())
                scale[i] = std if std > 0 else 1.0
        with torch.no_grad():
            self.target_loc.copy_(torch.tensor(loc))
            self.target_scale.copy_(torch.tensor(scale))

    def scale_targets(self, batch: Batch) -> Batch:
        loc, scale = self.target_loc, self.target_scale
        return Batch(
            x=batch.x,
            t=batch.t,
            m=(batch.m - loc[0]) / scale[0],
            y=(batch.y - loc[1]) / scale[1],
        )

    @property
    def outcome_scale(self) -> float:
        return float(self.target_scale[1])

    # -- Decoder -------------------------------------------------------

    def decode_treatment_prob(self, z: torch.Tensor) -> torch.Tensor:
        logits = self.treatment_decoder(z).squeeze(-1)
        return torch.sigmoid(logits).clamp(PROB_EPS, 1.0 - PROB_EPS)

    def _mediator_out(self, z: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return self.mediator_decoder(z, t).squeeze(-1)

    def _outcome_out(self, z: torch.Tensor, m: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return self.outcome_decoder(torch.cat([z, m.unsqueeze(-1)], dim=-1), t).squeeze(-1)

    def decode_mediator(self, z: torch.Tensor, t: torch.Tensor) -> Distribution:
        c = self.config
        return _distribution(c.mediator_kind, self._mediator_out(z, t), c.mediator_variance)

    def decode_outcome(self, z: torch.Tensor, m: torch.Tensor, t: torch.Tensor) -> Distribution:
        c = self.config
        return _distribution(c.outcome_kind, self._outcome_out(z, m, t), c.outcome_variance)

    def mediator_mean(self, z: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return _mean(self.config.mediator_kind, self._mediator_out(z, t))

    def outcome_mean(self, z: torch.Tensor, m: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return _mean(self.config.outcome_kind, self._outcome_out(z, m, t))

    def sample_mediator(
        self, z: torch.Tensor, t: torch.Tensor, generator: torch.Generator | None = None
    ) -> torch.Tensor:
        c = self.config
        return _sample(c.mediator_kind, self._mediator_out(z, t), c.mediator_variance, generator)

    def x_log_prob(self, x: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """Per-row ``log p(x | z)``: unit-variance Normal or Bernoulli per slot."""
        out = self.x_decoder(z)
        continuous = Normal(out, 1.0).log_prob(x)
        binary = -F.binary_cross_entropy_with_logits(out, x, reduction="none")
        return torch.where(self.continuous_x, continuous, binary).sum(-1)

    # -- Encoder -------------------------------------------------------

    def encode_posterior(
        self, x: torch.Tensor, m: torch.Tensor, y: torch.Tensor, t: torch.Tensor
    ) -> Normal:
        inputs = torch.cat([x, y.unsqueeze(-1), m.unsqueeze(-1)], dim=-1)
        loc, log_var = self.encoder(inputs, t).chunk(2, dim=-1)
        scale = _check_finite("encoder", torch.exp(0.5 * log_var))
        return Normal(_check_finite("encoder", loc), scale)

    def _aux_treatment_logit(self, x: torch.Tensor) -> torch.Tensor:
        return self.aux_treatment(x).squeeze(-1)

    def _aux_mediator_out(self, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return self.aux_mediator(x, t).squeeze(-1)

    def _aux_outcome_out(self, x: torch.Tensor, m: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        return self.aux_outcome(torch.cat([x, m.unsqueeze(-1)], dim=-1), t).squeeze(-1)

    def aux_predict(self, x: torch.Tensor, m: torch.Tensor | None = None) -> AuxPrediction:
        """Auxiliary predictions for both arms.

        Without ``m`` the outcome heads of each arm are evaluated at that
        arm's predicted mediator mean.
        """
        c = self.config
        ones = torch.ones(x.shape[0], dtype=x.dtype)
        zeros = torch.zeros_like(ones)
        out_m1 = self._aux_mediator_out(x, ones)
        out_m0 = self._aux_mediator_out(x, zeros)
        m1 = _mean(c.mediator_kind, out_m1) if m is None else m
        m0 = _mean(c.mediator_kind, out_m0) if m is None else m
        prob = torch.sigmoid(self._aux_treatment_logit(x)).clamp(PROB_EPS, 1.0 - PROB_EPS)
        return AuxPrediction(
            treatment_prob=prob,
            mediator_treated=_distribution(c.mediator_kind, out_m1, c.aux_mediator_variance),
            mediator_control=_distribution(c.mediator_kind, out_m0, c.aux_mediator_variance),
            outcome_treated=_distribution(
                c.outcome_kind, self._aux_outcome_out(x, m1, ones), c.aux_outcome_variance
            ),
            outcome_control=_distribution(
                c.outcome_kind, self._aux_outcome_out(x, m0, zeros), c.aux_outcome_variance
            ),
        )

    # -- Objectives ----------------------------------------------------

    def elbo_terms(
        self,
        batch: Batch,
        mc_samples: int = 1,
        generator: torch.Generator | None = None,
        kl: Literal["closed_form", "sampled"] = "closed_form",
    ) -> dict[str, torch.Tensor]:
        """Batch sums of the reconstruction log-densities and the KL term."""
        c = self.config
        posterior = self.encode_posterior(batch.x, batch.m, batch.y, batch.t)
        prior = Normal(torch.zeros_like(posterior.loc), torch.ones_like(posterior.scale))

        totals = {"log_px": 0.0, "log_pt": 0.0, "log_pm": 0.0, "log_py": 0.0}
        sampled_kl: torch.Tensor | float = 0.0
        for _ in range(mc_samples):
            eps = torch.randn(posterior.loc.shape, generator=generator, dtype=posterior.loc.dtype)
            z = posterior.loc + posterior.scale * eps
            t_logit = self.treatment_decoder(z).squeeze(-1)
            totals["log_px"] = totals["log_px"] + self.x_log_prob(batch.x, z).sum()
            totals["log_pt"] = totals["log_pt"] - F.binary_cross_entropy_with_logits(
                t_logit, batch.t, reduction="sum"
            )
            totals["log_pm"] = totals["log_pm"] + _log_density(
                c.mediator_kind, batch.m, self._mediator_out(z, batch.t), c.mediator_variance
            ).sum()
            totals["log_py"] = totals["log_py"] + _log_density(
                c.outcome_kind,
                batch.y,
                self._outcome_out(z, batch.m, batch.t),
                c.outcome_variance,
            ).sum()
            if kl == "sampled":
                sampled_kl = sampled_kl + (
                    posterior.log_prob(z) - prior.log_prob(z)
                ).sum()

        terms = {name: value / mc_samples for name, value in totals.items()}
        if kl == "closed_form":
            terms["kl"] = kl_divergence(posterior, prior).sum()
        else:
            terms["kl"] = sampled_kl / mc_samples
        for name, value in terms.items():
            _check_finite(name, value)  # type: ignore[arg-type]
        return terms  # type: ignore[return-value]

    def elbo(
        self,
        batch: Batch,
        mc_samples: int = 1,
        generator: torch.Generator | None = None,
        kl: Literal["closed_form", "sampled"] = "closed_form",
    ) -> torch.Tensor:
        terms = self.elbo_terms(batch, mc_samples, generator, kl)
        return terms["log_px"] + terms["log_pt"] + terms["log_pm"] + terms["log_py"] - terms["kl"]

    def aux_log_likelihood(self, batch: Batch) -> torch.Tensor:
        """``log q(t|x) + log q(m|x,t) + log q(y|x,m,t)`` at observed values, summed."""
        c = self.config
        log_qt = -F.binary_cross_entropy_with_logits(
            self._aux_treatment_logit(batch.x), batch.t, reduction="sum"
        )
        log_qm = _log_density(
            c.mediator_kind,
            batch.m,
            self._aux_mediator_out(batch.x, batch.t),
            c.aux_mediator_variance,
        ).sum()
        log_qy = _log_density(
            c.outcome_kind,
            batch.y,
            self._aux_outcome_out(batch.x, batch.m, batch.t),
            c.aux_outcome_variance,
        ).sum()
        _check_finite("log_qt", log_qt)
        _check_finite("log_qm", log_qm)
        _check_finite("log_qy", log_qy)
        return log_qt + log_qm + log_qy

    def total_objective(
        self,
        batch: Batch,
        mc_samples: int = 1,
        generator: torch.Generator | None = None,
        kl: Literal["closed_form", "sampled"] = "closed_form",
    ) -> torch.Tensor:
        return self.elbo(batch, mc_samples, generator, kl) + self.aux_log_likelihood(batch)

    def parameter_penalty(self) -> torch.Tensor:
        return sum((p.pow(2).sum() for p in self.parameters()), torch.zeros((), dtype=self.dtype))

    def loss(
        self,
        batch: Batch,
        weight_decay: float = 0.0,
        mc_samples: int = 1,
        generator: torch.Generator | None = None,
    ) -> torch.Tensor:
        """Minimized quantity: negative objective plus the squared-weight penalty."""
        loss = -self.total_objective(batch, mc_samples, generator)
        if weight_decay:
            loss = loss + weight_decay * self.parameter_penalty()
        return loss

    # -- Posterior sampling ---------------------------------------------

    @torch.no_grad()
    def sample_posterior_z(
        self, x: torch.Tensor, samples: int, generator: torch.Generator | None = None
    ) -> PosteriorDraws:
        """Draw ``t``, ``m``, ``y`` from the auxiliary chain, then ``z`` from the encoder.

        Mediator and outcome draws are in the model's fitting units.
        """
        if samples < 1:
            raise ConfigError(f"posterior sample count must be >= 1, got {samples}")
        c = self.config
        n = x.shape[0]
        xs = x.repeat(samples, 1)

        prob_t = torch.sigmoid(self._aux_treatment_logit(xs)).clamp(PROB_EPS, 1.0 - PROB_EPS)
        t = torch.bernoulli(prob_t, generator=generator)
        m = _sample(c.mediator_kind, self._aux_mediator_out(xs, t), c.aux_mediator_variance, generator)
        y = _sample(
            c.outcome_kind, self._aux_outcome_out(xs, m, t), c.aux_outcome_variance, generator
        )
        posterior = self.encode_posterior(xs, m, y, t)
        noise = torch.randn(posterior.loc.shape, generator=generator, dtype=posterior.loc.dtype)
        z = posterior.loc + posterior.scale * noise

        return PosteriorDraws(
            z=z.reshape(samples, n, c.z_dim),
            t=t.reshape(samples, n),
            m=m.reshape(samples, n),
            y=y.reshape(samples, n),
        )


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(model: MediationVAE, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "config": model.config.model_dump(mode="json"),
            "state_dict": model.state_dict(),
            "fitted": model.fitted,
            "training_steps": model.training_steps,
            "objective_trace": list(model.objective_trace),
        },
        path,
    )
    logger.debug("saved checkpoint to %s", path)
    return path


def load_checkpoint(path: str | Path) -> MediationVAE:
    try:
        payload = torch.load(Path(path), map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise ConfigError(f"no such checkpoint: {path}") from None
    model = MediationVAE(ModelConfig.model_validate(payload["config"]))
    model.load_state_dict(payload["state_dict"])
    model.fitted = bool(payload.get("fitted", False))
    model.training_steps = int(payload.get("training_steps", 0))
    model.objective_trace = [float(v) for v in payload.get("objective_trace", [])]
    model.eval()
    return model
