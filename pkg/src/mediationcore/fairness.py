"""Fairness case study: effect decomposition against a logistic classifier."""

from __future__ import annotations

import asyncio
import logging
import time
from datetime import datetime, timezone

import numpy as np

from mediationcore.baselines import demographic_disparity, fit_logistic
from mediationcore.config import ExperimentConfig
from mediationcore.dataset import Dataset, load_csv, standardize, stratified_split
from mediationcore.dgp import fairness_schema, generate_fairness_standin
from mediationcore.effects import estimate_effects
from mediationcore.exceptions import DatasetError
from mediationcore.experiment import derive_seed, package_version
from mediationcore.hooks import (
    Event,
    EventType,
    FairnessEndData,
    FairnessStartData,
    Hooks,
    TrainingEndData,
)
from mediationcore.model import ModelConfig
from mediationcore.models import FairnessReport, Provenance
from mediationcore.training import train, training_summary

logger = logging.getLogger("mediationcore")


def load_fairness_data(cfg: ExperimentConfig) -> Dataset:
    """The configured CSV, or the census-like stand-in when none is given."""
    spec = cfg.fairness
    if spec.csv is not None:
        dataset = load_csv(spec.csv, spec.schema_ or list(fairness_schema()))
    else:
        dataset = generate_fairness_standin(
            spec.n,
            seed=derive_seed(cfg.seed, "dgp"),
            mediator_effect=spec.mediator_effect,
            direct_effect=spec.direct_effect,
            mediator_outcome_effect=spec.mediator_outcome_effect,
            confounding=spec.confounding,
        )
    if dataset.outcome_kind != "binary":
        raise DatasetError(
            "fairness analysis needs a binary outcome", column=dataset.outcome_column.name
        )
    return standardize(dataset) if cfg.dgp.standardize else dataset


def classifier_features(d: Dataset) -> np.ndarray:
    """Encoded covariates followed by the sensitive attribute and the mediator."""
    return np.column_stack([d.design_matrix(drop_reference=True), d.t, d.m])


async def run_fairness_async(
    cfg: ExperimentConfig,
    hooks: Hooks | None = None,
    *,
    dataset: Dataset | None = None,
) -> FairnessReport:
    """Decompose the sensitive attribute's effect and audit a plain classifier.

    The model is fit on the training split and its effects are averaged
    over the test split. The classifier's disparity is measured on its
    test-split predictions, the observed disparity on test outcomes.
    """
    active = hooks is not None and hooks.is_active
    started = time.monotonic()
    started_at = datetime.now(timezone.utc).isoformat(timespec="seconds")

    if dataset is None:
        dataset = await asyncio.to_thread(load_fairness_data, cfg)
    pair = stratified_split(dataset, cfg.train_fraction, derive_seed(cfg.seed, "split"))
    train_data, test_data = pair.train, pair.test

    if active:
        await hooks.emit(  # type: ignore[union-attr]
            Event(
                EventType.FAIRNESS_START,
                FairnessStartData(n_train=train_data.n, n_test=test_data.n),
            )
        )

    def fit_model():
        fit_start = time.monotonic()
        model_config = ModelConfig.for_dataset(train_data, **cfg.model_overrides())
        model = train(train_data, model_config, cfg.train_config(derive_seed(cfg.seed, "train")))
        summary = training_summary(model, time.monotonic() - fit_start)
        effects = estimate_effects(
            model, test_data.X, samples=cfg.effect_samples, seed=derive_seed(cfg.seed, "effects")
        )
        return effects, summary

    effects, summary = await asyncio.to_thread(fit_model)
    if active:
        await hooks.emit(  # type: ignore[union-attr]
            Event(
                EventType.TRAINING_END,
                TrainingEndData(
                    cell=0,
                    rep=0,
                    epochs=summary.epochs,
                    steps=summary.steps,
                    final_objective=summary.final_objective,
                    duration_seconds=summary.duration_seconds,
                ),
            )
        )

    spec = cfg.fairness
    classifier = fit_logistic(
        classifier_features(train_data),
        train_data.y,
        l2=spec.classifier_l2,
        max_iter=spec.classifier_max_iter,
    )
    predictions = classifier.predict(classifier_features(test_data), threshold=spec.threshold)
    # sensitive attribute sits second to last
    coefficient = float(classifier.coefficients[-2])

    report = FairnessReport(
        effects=effects,
        classifier_treatment_coefficient=coefficient,
        classifier_dp=demographic_disparity(predictions, test_data.t),
        ground_truth_dp=demographic_disparity(test_data.y, test_data.t),
        classifier_converged=classifier.converged,
        n_train=train_data.n,
        n_test=test_data.n,
        training=summary,
        provenance=Provenance(
            config_sha256=cfg.sha256(),
            base_seed=cfg.seed,
            seeds=[cfg.seed],
            started_at=started_at,
            finished_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            version=package_version(),
            extra={"profile": cfg.profile, "source": spec.csv or "standin"},
        ),
    )
    logger.debug("fairness report: %s", report.model_dump(exclude={"training", "provenance"}))

    if active:
        await hooks.emit(  # type: ignore[union-attr]
            Event(
                EventType.FAIRNESS_END,
                FairnessEndData(
                    duration_seconds=round(time.monotonic() - started, 3),
                    ate=effects.ate,
                    classifier_dp=report.classifier_dp,
                    ground_truth_dp=report.ground_truth_dp,
                ),
            )
        )
    return report


def run_fairness(
    cfg: ExperimentConfig,
    hooks: Hooks | None = None,
    *,
    dataset: Dataset | None = None,
) -> FairnessReport:
    return asyncio.run(run_fairness_async(cfg, hooks, dataset=dataset))
