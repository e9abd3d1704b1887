"""Experiment configuration: YAML files, parameter profiles and grid expansion."""

from __future__ import annotations

import hashlib
import itertools
import json
import os
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from mediationcore.dataset import ColumnSpec, validate_schema
from mediationcore.exceptions import ConfigError, DatasetError
from mediationcore.model import ModelConfig
from mediationcore.training import TrainConfig

OUTPUT_DIR_ENV = "MEDIATIONCORE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"

DgpKind = Literal["synthetic", "semisynthetic", "proxy_noise", "fairness_csv"]
EstimatorName = Literal["cmavae", "lsem", "lsem_i"]
ProfileName = Literal["desk", "paper"]
Family = Literal["simulation", "jobs", "adult"]

ESTIMATORS: tuple[str, ...] = ("cmavae", "lsem", "lsem_i")

# Settings filled from the profile; explicit keys in the model or train
# sections of the config file override them.
_DATA_KEYS = {"x_dim", "x_kinds", "mediator_kind", "outcome_kind"}
MODEL_KEYS = frozenset(ModelConfig.model_fields) - _DATA_KEYS
TRAIN_KEYS = frozenset(TrainConfig.model_fields) - {"seed"}


class ProfileSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    reps: int
    epochs: int
    z_dim: int
    layer_size: int
    batch_size: int
    learning_rate: float
    hidden_layers: int
    weight_decay: float
    samples: int

    def for_desk(self) -> ProfileSettings:
        return self.model_copy(
            update={
                "epochs": min(self.epochs, 30),
                "learning_rate": max(self.learning_rate, 1e-3),
            }
        )


PAPER_SETTINGS: dict[str, ProfileSettings] = {
    "simulation": ProfileSettings(
        reps=10, epochs=100, z_dim=5, layer_size=100, batch_size=100,
        learning_rate=1e-4, hidden_layers=3, weight_decay=1e-4, samples=100,
    ),
    "jobs": ProfileSettings(
        reps=10, epochs=100, z_dim=10, layer_size=100, batch_size=32,
        learning_rate=1e-6, hidden_layers=5, weight_decay=1e-3, samples=100,
    ),
    "adult": ProfileSettings(
        reps=1, epochs=150, z_dim=10, layer_size=100, batch_size=1024,
        learning_rate=1e-5, hidden_layers=2, weight_decay=1e-3, samples=1000,
    ),
}  # fmt: skip

_FAMILY: dict[str, Family] = {
    "synthetic": "simulation",
    "semisynthetic": "jobs",
    "proxy_noise": "jobs",
    "fairness_csv": "adult",
}


def profile_settings(family: str, profile: str) -> ProfileSettings:
    try:
        settings = PAPER_SETTINGS[family]
    except KeyError:
        raise ConfigError(f"unknown dataset family '{family}'") from None
    return settings if profile == "paper" else settings.for_desk()


def _as_list(value: Any) -> Any:
    if value is None or isinstance(value, (list, tuple)):
        return value
    return [value]


class DgpSpec(BaseModel):
    """Data-generating process and its parameter grid.

    ``n``, ``eta``, ``share`` and ``p_c`` accept a scalar or a list; lists
    span the grid. Only the parameters the chosen ``kind`` uses vary.
    """

    model_config = ConfigDict(extra="forbid")

    kind: DgpKind = "synthetic"
    n: list[int] = Field(default_factory=lambda: [1000])
    # synthetic
    x_dim: int = Field(default=1, ge=1)
    c_mode: Literal["per_dataset", "per_unit"] = "per_dataset"
    # semisynthetic and proxy_noise
    eta: list[float] = Field(default_factory=lambda: [1.0])
    share: list[float] = Field(default_factory=lambda: [0.5])
    mediator_threshold: float = 3.0
    binarize_mediator: bool = False
    base_csv: str | None = None
    base_schema: list[ColumnSpec] | None = None
    base_n: int = Field(default=899, ge=2)
    standardize: bool = True
    # proxy_noise
    p_c: list[float] = Field(default_factory=lambda: [0.1])
    bins: int = Field(default=3, ge=2)
    replications: int = Field(default=3, ge=1)
    confounder: str = "depress1"

    @field_validator("n", "eta", "share", "p_c", mode="before")
    @classmethod
    def _listify(cls, v: Any) -> Any:
        return _as_list(v)

    @field_validator("n", "eta", "share", "p_c")
    @classmethod
    def _nonempty(cls, v: list[Any]) -> list[Any]:
        if not v:
            raise ValueError("parameter grid must not be empty")
        return v

    @field_validator("n")
    @classmethod
    def _positive_n(cls, v: list[int]) -> list[int]:
        if any(n < 2 for n in v):
            raise ValueError("every n must be >= 2")
        return v

    @field_validator("share")
    @classmethod
    def _share_range(cls, v: list[float]) -> list[float]:
        if any(not 0.0 < s < 1.0 for s in v):
            raise ValueError("every share must lie in (0, 1)")
        return v

    @field_validator("eta")
    @classmethod
    def _eta_range(cls, v: list[float]) -> list[float]:
        if any(e < 0.0 for e in v):
            raise ValueError("every eta must be >= 0")
        return v

    @field_validator("p_c")
    @classmethod
    def _flip_range(cls, v: list[float]) -> list[float]:
        if any(not 0.0 <= p <= 0.5 for p in v):
            raise ValueError("every p_c must lie in [0, 0.5]")
        return v

    @property
    def grid_axes(self) -> tuple[str, ...]:
        match self.kind:
            case "synthetic" | "fairness_csv":
                return ("n",)
            case "semisynthetic":
                return ("n", "eta", "share")
            case "proxy_noise":
                return ("n", "eta", "share", "p_c")
        raise ConfigError(f"unknown dgp kind '{self.kind}'")


class FairnessSpec(BaseModel):
    """Fairness case study input: a CSV with a schema, or the generated stand-in."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    csv: str | None = None
    schema_: list[ColumnSpec] | None = Field(default=None, alias="schema")
    n: int = Field(default=10_000, ge=4)
    mediator_effect: float = 0.8
    direct_effect: float = 0.6
    mediator_outcome_effect: float = 1.0
    confounding: float = 0.0
    classifier_l2: float = Field(default=1.0, ge=0.0)
    classifier_max_iter: int = Field(default=1000, ge=1)
    threshold: float = Field(default=0.5, gt=0.0, lt=1.0)


class EffectsSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    samples: int | None = Field(default=None, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    name: str = "experiment"
    seed: int = 0
    reps: int | None = Field(default=None, ge=1)
    profile: ProfileName = "desk"
    estimators: list[EstimatorName] = Field(default_factory=lambda: list(ESTIMATORS))
    train_fraction: float = Field(default=0.8, gt=0.0, lt=1.0)
    evaluate_on: Literal["test", "full"] = "test"
    percent: bool = False
    max_workers: int = Field(default=1, ge=1)
    output_dir: str | None = None
    dgp: DgpSpec = Field(default_factory=DgpSpec)
    fairness: FairnessSpec = Field(default_factory=FairnessSpec)
    model: dict[str, Any] = Field(default_factory=dict)
    train: dict[str, Any] = Field(default_factory=dict)
    effects: EffectsSpec = Field(default_factory=EffectsSpec)

    @field_validator("model")
    @classmethod
    def _known_model_keys(cls, v: dict[str, Any]) -> dict[str, Any]:
        unknown = sorted(set(v) - MODEL_KEYS)
        if unknown:
            raise ValueError(f"unknown model settings: {', '.join(unknown)}")
        return v

    @field_validator("train")
    @classmethod
    def _known_train_keys(cls, v: dict[str, Any]) -> dict[str, Any]:
        unknown = sorted(set(v) - TRAIN_KEYS)
        if unknown:
            raise ValueError(f"unknown train settings: {', '.join(unknown)}")
        return v

    @field_validator("estimators")
    @classmethod
    def _unique_estimators(cls, v: list[str]) -> list[str]:
        if len(set(v)) != len(v):
            raise ValueError("estimators must not repeat")
        return v

    # -- Resolved settings --------------------------------------------

    @property
    def settings(self) -> ProfileSettings:
        return profile_settings(_FAMILY[self.dgp.kind], self.profile)

    @property
    def resolved_reps(self) -> int:
        return self.reps if self.reps is not None else self.settings.reps

    @property
    def effect_samples(self) -> int:
        return self.effects.samples or self.settings.samples

    def model_overrides(self) -> dict[str, Any]:
        s = self.settings
        merged: dict[str, Any] = {
            "z_dim": s.z_dim,
            "hidden_layers": s.hidden_layers,
            "layer_size": s.layer_size,
        }
        merged.update(self.model)
        return merged

    def train_config(self, seed: int) -> TrainConfig:
        s = self.settings
        merged: dict[str, Any] = {
            "epochs": s.epochs,
            "batch_size": s.batch_size,
            "learning_rate": s.learning_rate,
            "weight_decay": s.weight_decay,
        }
        merged.update(self.train)
        try:
            return TrainConfig(seed=seed, **merged)
        except ValidationError as exc:
            raise ConfigError(f"invalid train settings: {exc}") from exc

    def resolved_output_dir(self, override: str | Path | None = None) -> Path:
        """CLI flag, then config file, then environment, then ``results``."""
        chosen = override or self.output_dir or os.environ.get(OUTPUT_DIR_ENV)
        return Path(chosen or DEFAULT_OUTPUT_DIR)

    def sha256(self) -> str:
        payload = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class Cell(BaseModel):
    """One point of the parameter grid."""

    model_config = ConfigDict(frozen=True)

    index: int
    params: dict[str, float | int]

    @property
    def label(self) -> str:
        return "|".join(f"{k}={v:g}" for k, v in self.params.items())


def expand_grid(cfg: ExperimentConfig) -> list[Cell]:
    """Cartesian product of the list-valued DGP parameters, first axis slowest."""
    axes = cfg.dgp.grid_axes
    values = [getattr(cfg.dgp, axis) for axis in axes]
    return [
        Cell(index=i, params=dict(zip(axes, combo)))
        for i, combo in enumerate(itertools.product(*values))
    ]


def _check_schema(schema: list[ColumnSpec] | None, where: str) -> None:
    if schema is None:
        return
    try:
        validate_schema(schema)
    except DatasetError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_config(data: dict[str, Any] | None) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(data or {})
    except ValidationError as exc:
        raise ConfigError(f"invalid experiment config: {exc}") from exc
    _check_schema(cfg.dgp.base_schema, "dgp.base_schema")
    _check_schema(cfg.fairness.schema_, "fairness.schema")
    return cfg


def _relative_to(cfg: ExperimentConfig, root: Path) -> ExperimentConfig:
    """Resolve relative CSV paths against the config file's directory."""

    def resolve(value: str | None) -> str | None:
        if value is None or Path(value).is_absolute():
            return value
        return str(root / value)

    dgp = cfg.dgp.model_copy(update={"base_csv": resolve(cfg.dgp.base_csv)})
    fairness = cfg.fairness.model_copy(update={"csv": resolve(cfg.fairness.csv)})
    return cfg.model_copy(update={"dgp": dgp, "fairness": fairness})


def load_config(path: str | Path, *, seed: int | None = None) -> ExperimentConfig:
    """Read a YAML experiment file; ``seed`` overrides the file's base seed."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at the top level")
    cfg = _relative_to(parse_config(data), path.parent)
    if seed is not None:
        cfg = cfg.model_copy(update={"seed": seed})
    return cfg
