from __future__ import annotations

import logging
import time

import torch
from pydantic import BaseModel, ConfigDict, Field

from mediationcore.dataset import Dataset
from mediationcore.exceptions import ConfigError, ObjectiveError, TrainingError
from mediationcore.model import Batch, MediationVAE, ModelConfig
from mediationcore.models import TrainingSummary

logger = logging.getLogger("mediationcore")


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    epochs: int = Field(default=100, ge=0)
    batch_size: int = Field(default=100, ge=1)
    learning_rate: float = Field(default=1e-4, gt=0.0)
    weight_decay: float = Field(default=1e-4, ge=0.0)
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = Field(default=1e-8, gt=0.0)
    elbo_mc_samples: int = Field(default=1, ge=1)
    standardize_targets: bool = True
    seed: int = 0


def _check_kinds(dataset: Dataset, config: ModelConfig) -> None:
    if dataset.x_dim != config.x_dim:
        raise ConfigError(f"dataset has {dataset.x_dim} proxy columns, model expects {config.x_dim}")
    if dataset.mediator_kind != config.mediator_kind:
        raise ConfigError(
            f"dataset mediator is {dataset.mediator_kind}, model expects {config.mediator_kind}"
        )
    if dataset.outcome_kind != config.outcome_kind:
        raise ConfigError(
            f"dataset outcome is {dataset.outcome_kind}, model expects {config.outcome_kind}"
        )


def train(
    dataset: Dataset, model_config: ModelConfig, train_config: TrainConfig
) -> MediationVAE:
    """Fit a model with Adam on shuffled minibatches.

    Each step minimizes :meth:`MediationVAE.loss`. The per-epoch mean of
    the negative objective per unit, penalty excluded, is kept on
    ``model.objective_trace``. ``epochs=0`` returns the initialized model.
    """
    _check_kinds(dataset, model_config)
    tc = train_config
    model = MediationVAE(model_config, seed=tc.seed)
    if tc.standardize_targets:
        model.fit_target_scaling(dataset)
    data = model.scale_targets(Batch.from_dataset(dataset, model_config.torch_dtype))
    generator = torch.Generator().manual_seed(tc.seed)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=tc.learning_rate, betas=tc.betas, eps=tc.eps, weight_decay=0.0
    )

    n = len(data)
    step = 0
    started = time.monotonic()
    model.train()
    for epoch in range(tc.epochs):
        epoch_objective = 0.0
        order = torch.randperm(n, generator=generator)
        for start in range(0, n, tc.batch_size):
            batch = data.index(order[start : start + tc.batch_size])
            optimizer.zero_grad()
            try:
                loss = model.loss(batch, tc.weight_decay, tc.elbo_mc_samples, generator)
            except ObjectiveError as exc:
                raise TrainingError(step, str(exc)) from exc
            if not torch.isfinite(loss):
                raise TrainingError(step, "loss is not finite")
            loss.backward()
            penalty = 0.0
            if tc.weight_decay:
                with torch.no_grad():
                    penalty = tc.weight_decay * float(model.parameter_penalty())
            optimizer.step()
            if not all(torch.isfinite(p).all() for p in model.parameters()):
                raise TrainingError(step, "parameters became non-finite")
            epoch_objective += penalty - float(loss.detach())
            step += 1

        model.objective_trace.append(-epoch_objective / n)
        logger.debug(
            "epoch %d/%d: -F per unit %.6f", epoch + 1, tc.epochs, model.objective_trace[-1]
        )

    model.eval()
    model.fitted = True
    model.training_steps = step
    logger.debug("trained for %d steps in %.2fs", step, time.monotonic() - started)
    return model


def training_summary(model: MediationVAE, duration: float) -> TrainingSummary:
    return TrainingSummary(
        epochs=len(model.objective_trace),
        steps=model.training_steps,
        objective_trace=list(model.objective_trace),
        duration_seconds=round(duration, 3),
    )
