from __future__ import annotations

import sys
from typing import Any, TextIO

from pydantic import BaseModel, Field, model_validator

_DECOMPOSITION_TOL = 1e-12


def _check_decomposition(acme1: float, acde0: float, ate: float) -> None:
    if abs(ate - (acme1 + acde0)) > _DECOMPOSITION_TOL:
        raise ValueError(
            f"ate ({ate!r}) must equal acme1 + acde0 ({acme1 + acde0!r})"
        )


class TrueEffects(BaseModel):
    """Ground-truth effects of a data-generating process.

    Serialized as the ``truth.json`` sidecar ``{acme1, acde0, ate}``.
    """

    acme1: float
    acde0: float
    ate: float

    @model_validator(mode="after")
    def _decomposes(self) -> TrueEffects:
        _check_decomposition(self.acme1, self.acde0, self.ate)
        return self

    @classmethod
    def from_parts(cls, acme1: float, acde0: float) -> TrueEffects:
        return cls(acme1=acme1, acde0=acde0, ate=acme1 + acde0)

    @classmethod
    def zero(cls) -> TrueEffects:
        return cls(acme1=0.0, acde0=0.0, ate=0.0)


class EffectEstimate(BaseModel):
    """Estimated mediation effect under treatment, direct effect under control, total effect."""

    acme1: float
    acde0: float
    ate: float
    samples: int = 0
    n_eval: int = 0

    @model_validator(mode="after")
    def _decomposes(self) -> EffectEstimate:
        _check_decomposition(self.acme1, self.acde0, self.ate)
        return self

    @classmethod
    def from_parts(
        cls, acme1: float, acde0: float, *, samples: int = 0, n_eval: int = 0
    ) -> EffectEstimate:
        return cls(
            acme1=acme1,
            acde0=acde0,
            ate=acme1 + acde0,
            samples=samples,
            n_eval=n_eval,
        )

    def scaled(self, factor: float) -> EffectEstimate:
        acme1 = self.acme1 * factor
        acde0 = self.acde0 * factor
        return EffectEstimate.from_parts(
            acme1, acde0, samples=self.samples, n_eval=self.n_eval
        )


class AbsoluteErrors(BaseModel):
    abs_err_acme: float = Field(ge=0.0)
    abs_err_acde: float = Field(ge=0.0)
    abs_err_ate: float = Field(ge=0.0)

    @classmethod
    def between(cls, estimate: EffectEstimate, truth: TrueEffects) -> AbsoluteErrors:
        return cls(
            abs_err_acme=abs(estimate.acme1 - truth.acme1),
            abs_err_acde=abs(estimate.acde0 - truth.acde0),
            abs_err_ate=abs(estimate.ate - truth.ate),
        )


class ErrorReport(BaseModel):
    errors: list[AbsoluteErrors]
    acme_mean: float
    acme_std: float
    acde_mean: float
    acde_std: float
    ate_mean: float
    ate_std: float
    single_replication: bool = False

    @property
    def reps(self) -> int:
        return len(self.errors)


class TrainingSummary(BaseModel):
    epochs: int
    steps: int
    objective_trace: list[float] = Field(default_factory=list)
    duration_seconds: float = 0.0

    @property
    def final_objective(self) -> float | None:
        return self.objective_trace[-1] if self.objective_trace else None


class ReplicationRecord(BaseModel):
    cell: int
    label: str
    estimator: str
    rep: int
    seed: int
    truth: TrueEffects
    estimate: EffectEstimate
    errors: AbsoluteErrors
    training: TrainingSummary | None = None


class CellError(BaseModel):
    estimator: str
    rep: int
    message: str


class CellResult(BaseModel):
    index: int
    label: str
    params: dict[str, float | int] = Field(default_factory=dict)
    reports: dict[str, ErrorReport] = Field(default_factory=dict)
    errors: list[CellError] = Field(default_factory=list)
    duration_seconds: float = 0.0


class Provenance(BaseModel):
    config_sha256: str
    base_seed: int
    seeds: list[int] = Field(default_factory=list)
    started_at: str
    finished_at: str = ""
    version: str
    extra: dict[str, Any] = Field(default_factory=dict)


class ExperimentResult(BaseModel):
    name: str
    dgp: str
    estimators: list[str]
    cells: list[CellResult]
    records: list[ReplicationRecord] = Field(default_factory=list)
    provenance: Provenance
    duration_seconds: float = 0.0

    @property
    def error_count(self) -> int:
        return sum(len(c.errors) for c in self.cells)

    def summary_table(self, *, percent: bool = False) -> str:
        """Format mean ± std absolute errors per cell and estimator."""
        rows = [
            (cell.label, name, report)
            for cell in self.cells
            for name, report in cell.reports.items()
        ]
        if not rows:
            return ""

        scale = 100.0 if percent else 1.0
        cell_width = max(max(len(r[0]) for r in rows), 4)
        est_width = max(max(len(r[1]) for r in rows), 9)

        def fmt(mean: float, std: float) -> str:
            return f"{mean * scale:.4f} ± {std * scale:.4f}"

        lines: list[str] = []
        lines.append(
            f"  {'Cell':<{cell_width}}  {'Estimator':<{est_width}}  {'Reps':>4}  "
            f"{'ACME':>17}  {'ACDE':>17}  {'ATE':>17}"
        )
        rule = "  " + "─" * (cell_width + est_width + 66)
        lines.append(rule)
        for label, name, report in rows:
            lines.append(
                f"  {label:<{cell_width}}  {name:<{est_width}}  {report.reps:>4}  "
                f"{fmt(report.acme_mean, report.acme_std):>17}  "
                f"{fmt(report.acde_mean, report.acde_std):>17}  "
                f"{fmt(report.ate_mean, report.ate_std):>17}"
            )
        lines.append(rule)
        return "\n".join(lines)

    def error_lines(self) -> str:
        lines = [
            f"  {cell.label} rep {err.rep}: {err.message}"
            for cell in self.cells
            for err in cell.errors
        ]
        return "\n".join(lines)

    def summary(self, *, percent: bool = False) -> str:
        sections: list[str] = []
        table = self.summary_table(percent=percent)
        if table:
            unit = " (%)" if percent else ""
            sections.append(f"Absolute errors{unit}\n{table}")
        failures = self.error_lines()
        if failures:
            sections.append(f"Failures\n{failures}")
        return "\n\n".join(sections)

    def print_summary(self, *, percent: bool = False, file: TextIO | None = None) -> None:
        """Print the summary to a stream (default ``sys.stderr``)."""
        out = file or sys.stderr
        text = self.summary(percent=percent)
        if text:
            print(text, file=out)


class FairnessReport(BaseModel):
    effects: EffectEstimate
    classifier_treatment_coefficient: float
    classifier_dp: float = Field(ge=0.0, le=1.0)
    ground_truth_dp: float = Field(ge=0.0, le=1.0)
    classifier_converged: bool = True
    n_train: int
    n_test: int
    training: TrainingSummary | None = None
    provenance: Provenance | None = None

    def summary(self) -> str:
        e = self.effects
        return "\n".join(
            [
                f"  CMAVAE     ACME {e.acme1:+.4f}  ACDE {e.acde0:+.4f}  ATE {e.ate:+.4f}",
                f"  Logistic   coefficient {self.classifier_treatment_coefficient:+.4f}"
                f"  DP {self.classifier_dp:.4f}",
                f"  Observed   DP {self.ground_truth_dp:.4f}",
            ]
        )
