"""Dataset representation, CSV ingestion, preprocessing and splitting.

Covariates are stored encoded: continuous and binary columns take one
slot of ``X``, categorical columns take a one-hot block of ``levels``
slots. Treatment, mediator and outcome live in their own vectors.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from mediationcore.exceptions import DatasetError

logger = logging.getLogger("mediationcore")

ColumnKind = Literal["continuous", "binary", "categorical"]
ColumnRole = Literal["covariate", "treatment", "mediator", "outcome"]
TargetKind = Literal["continuous", "binary"]


class ColumnSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    kind: ColumnKind
    role: ColumnRole = "covariate"
    levels: int | None = None

    @model_validator(mode="after")
    def _check_levels(self) -> ColumnSpec:
        if self.kind == "categorical":
            if self.levels is None or self.levels < 2:
                raise ValueError(f"categorical column '{self.name}' needs levels >= 2")
            if self.role != "covariate":
                raise ValueError(f"{self.role} column '{self.name}' cannot be categorical")
        elif self.levels is not None:
            raise ValueError(f"{self.kind} column '{self.name}' takes no levels")
        return self

    @property
    def width(self) -> int:
        """Number of encoded slots the column occupies in ``X``."""
        if self.kind == "categorical":
            assert self.levels is not None
            return self.levels
        return 1


def validate_schema(schema: Sequence[ColumnSpec]) -> None:
    """Check role and kind invariants of a schema."""
    names = [c.name for c in schema]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise DatasetError(f"duplicate column names in schema: {duplicates}")

    for role in ("treatment", "mediator", "outcome"):
        matching = [c for c in schema if c.role == role]
        if len(matching) != 1:
            raise DatasetError(
                f"schema needs exactly one {role} column, found {len(matching)}"
            )
    treatment = next(c for c in schema if c.role == "treatment")
    if treatment.kind != "binary":
        raise DatasetError("treatment column must be binary", column=treatment.name)
    if not any(c.role == "covariate" for c in schema):
        raise DatasetError("schema needs at least one covariate column")


def one_hot(values: np.ndarray | Sequence[int], k: int) -> np.ndarray:
    """Encode integer codes in ``[0, k)`` as an ``n x k`` 0/1 matrix."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DatasetError("one_hot expects a 1-d vector of codes")
    if k < 1:
        raise DatasetError(f"one_hot needs k >= 1, got {k}")
    codes = arr.astype(np.int64)
    if arr.size and (not np.array_equal(codes, arr) or codes.min() < 0 or codes.max() >= k):
        bad = arr[(codes != arr) | (codes < 0) | (codes >= k)][0]
        raise DatasetError(f"code {bad!r} outside [0, {k})")
    return np.eye(k, dtype=np.float64)[codes]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable, encoded observational dataset ``(X, t, m, y)``."""

    X: np.ndarray
    t: np.ndarray
    m: np.ndarray
    y: np.ndarray
    schema: tuple[ColumnSpec, ...]

    def __post_init__(self) -> None:
        schema = tuple(self.schema)
        validate_schema(schema)
        X = np.array(self.X, dtype=np.float64, order="C")
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        t = np.asarray(self.t)
        m = np.array(self.m, dtype=np.float64).reshape(-1)
        y = np.array(self.y, dtype=np.float64).reshape(-1)

        n = X.shape[0]
        if not (t.shape == (n,) and m.shape == (n,) and y.shape == (n,)):
            raise DatasetError("X, t, m and y must have the same number of rows")
        width = sum(c.width for c in schema if c.role == "covariate")
        if X.shape[1] != width:
            raise DatasetError(
                f"X has {X.shape[1]} columns but covariates encode to {width}"
            )
        for name, values in (("X", X), ("m", m), ("y", y)):
            if not np.all(np.isfinite(values)):
                raise DatasetError(f"{name} contains missing or non-finite values")
        if not np.all((t == 0) | (t == 1)):
            raise DatasetError("treatment must be 0/1", column=self._role_name(schema, "treatment"))
        for role, values in (("mediator", m), ("outcome", y)):
            spec = next(c for c in schema if c.role == role)
            if spec.kind == "binary" and not np.all((values == 0) | (values == 1)):
                raise DatasetError(f"binary {role} must be 0/1", column=spec.name)

        object.__setattr__(self, "X", X)
        object.__setattr__(self, "t", t.astype(np.int64))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "schema", schema)
        for arr in (self.X, self.t, self.m, self.y):
            arr.flags.writeable = False

    @staticmethod
    def _role_name(schema: Sequence[ColumnSpec], role: str) -> str:
        return next(c.name for c in schema if c.role == role)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.m, other.m)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def x_dim(self) -> int:
        return self.X.shape[1]

    @property
    def covariates(self) -> list[ColumnSpec]:
        return [c for c in self.schema if c.role == "covariate"]

    def _spec(self, role: str) -> ColumnSpec:
        return next(c for c in self.schema if c.role == role)

    @property
    def treatment_column(self) -> ColumnSpec:
        return self._spec("treatment")

    @property
    def mediator_column(self) -> ColumnSpec:
        return self._spec("mediator")

    @property
    def outcome_column(self) -> ColumnSpec:
        return self._spec("outcome")

    @property
    def mediator_kind(self) -> TargetKind:
        return self.mediator_column.kind  # type: ignore[return-value]

    @property
    def outcome_kind(self) -> TargetKind:
        return self.outcome_column.kind  # type: ignore[return-value]

    @property
    def encoded_kinds(self) -> tuple[TargetKind, ...]:
        """Per-slot kind of ``X``; one-hot slots count as binary."""
        kinds: list[TargetKind] = []
        for c in self.covariates:
            kinds.extend(["continuous" if c.kind == "continuous" else "binary"] * c.width)
        return tuple(kinds)

    def column_slice(self, name: str) -> slice:
        """Slice of ``X`` holding the encoded covariate ``name``."""
        start = 0
        for c in self.covariates:
            if c.name == name:
                return slice(start, start + c.width)
            start += c.width
        raise DatasetError("not a covariate of this dataset", column=name)

    def subset(self, indices: np.ndarray | Sequence[int]) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            X=self.X[idx], t=self.t[idx], m=self.m[idx], y=self.y[idx], schema=self.schema
        )

    def design_matrix(
        self, *, drop_reference: bool = True, drop_constant: bool = False
    ) -> np.ndarray:
        """Covariates ready for a regression with an intercept.

        With ``drop_reference`` the first level of every categorical block
        is removed. With ``drop_constant`` columns without variation are
        removed as well.
        """
        keep: list[int] = []
        start = 0
        for c in self.covariates:
            cols = list(range(start, start + c.width))
            if c.kind == "categorical" and drop_reference:
                cols = cols[1:]
            keep.extend(cols)
            start += c.width
        design = self.X[:, keep]
        if drop_constant and design.shape[1]:
            varying = np.ptp(design, axis=0) > 0
            design = design[:, varying]
        return design

    def with_targets(
        self,
        *,
        t: np.ndarray | None = None,
        m: np.ndarray | None = None,
        y: np.ndarray | None = None,
        mediator_kind: TargetKind | None = None,
    ) -> Dataset:
        schema = self.schema
        if mediator_kind is not None and mediator_kind != self.mediator_kind:
            schema = tuple(
                c.model_copy(update={"kind": mediator_kind}) if c.role == "mediator" else c
                for c in schema
            )
        return Dataset(
            X=self.X,
            t=self.t if t is None else t,
            m=self.m if m is None else m,
            y=self.y if y is None else y,
            schema=schema,
        )

    def replace_covariate(
        self, name: str, columns: Sequence[ColumnSpec], values: np.ndarray
    ) -> Dataset:
        """Swap covariate ``name`` for ``columns`` encoded as ``values``."""
        block = self.column_slice(name)
        values = np.asarray(values, dtype=np.float64).reshape(self.n, -1)
        X = np.hstack([self.X[:, : block.start], values, self.X[:, block.stop :]])
        schema: list[ColumnSpec] = []
        for c in self.schema:
            if c.name == name:
                schema.extend(columns)
            else:
                schema.append(c)
        return replace(self, X=X, schema=tuple(schema))


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------


def _parse_float(name: str, raw: np.ndarray) -> np.ndarray:
    missing = raw == ""
    if missing.any():
        row = int(np.flatnonzero(missing)[0]) + 1
        raise DatasetError(f"missing value in data row {row}", column=name)
    try:
        return raw.astype(np.float64)
    except ValueError:
        for i, cell in enumerate(raw):
            try:
                float(cell)
            except ValueError:
                raise DatasetError(
                    f"cannot parse {cell!r} in data row {i + 1}", column=name
                ) from None
        raise


def _parse_codes(spec: ColumnSpec, values: np.ndarray) -> np.ndarray:
    codes = np.rint(values)
    if spec.kind == "binary":
        bad = (values != 0) & (values != 1)
        limit = "0/1"
    else:
        assert spec.levels is not None
        bad = (values != codes) | (codes < 0) | (codes >= spec.levels)
        limit = f"integer codes in [0, {spec.levels})"
    if bad.any():
        row = int(np.flatnonzero(bad)[0]) + 1
        raise DatasetError(
            f"value {values[row - 1]!r} in data row {row} is not one of {limit}",
            column=spec.name,
        )
    return codes.astype(np.int64)


def load_csv(path: str | Path, schema: Sequence[ColumnSpec]) -> Dataset:
    """Load a UTF-8 CSV with a header row and encode it per ``schema``."""
    schema = tuple(schema)
    validate_schema(schema)
    path = Path(path)
    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8"
        )
    except FileNotFoundError:
        raise DatasetError(f"no such file: {path}") from None
    except pd.errors.EmptyDataError:
        raise DatasetError("empty dataset") from None

    for spec in schema:
        if spec.name not in frame.columns:
            raise DatasetError("missing from CSV header", column=spec.name)
    if len(frame) == 0:
        raise DatasetError("empty dataset")

    blocks: list[np.ndarray] = []
    targets: dict[str, np.ndarray] = {}
    for spec in schema:
        raw = frame[spec.name].to_numpy(dtype=str)
        values = _parse_float(spec.name, raw)
        if spec.kind != "continuous":
            codes = _parse_codes(spec, values)
            values = codes.astype(np.float64)
        if spec.role == "covariate":
            if spec.kind == "categorical":
                assert spec.levels is not None
                blocks.append(one_hot(codes, spec.levels))
            else:
                blocks.append(values.reshape(-1, 1))
        else:
            targets[spec.role] = values

    logger.debug("loaded %d rows from %s", len(frame), path)
    return Dataset(
        X=np.hstack(blocks),
        t=targets["treatment"],
        m=targets["mediator"],
        y=targets["outcome"],
        schema=schema,
    )


def to_frame(d: Dataset) -> pd.DataFrame:
    """Decode a dataset back to one column per schema entry."""
    columns: dict[str, np.ndarray] = {}
    for spec in d.schema:
        if spec.role == "covariate":
            block = d.X[:, d.column_slice(spec.name)]
            if spec.kind == "categorical":
                columns[spec.name] = block.argmax(axis=1)
            elif spec.kind == "binary":
                columns[spec.name] = block[:, 0].astype(np.int64)
            else:
                columns[spec.name] = block[:, 0]
        elif spec.role == "treatment":
            columns[spec.name] = d.t
        else:
            values = d.m if spec.role == "mediator" else d.y
            columns[spec.name] = values.astype(np.int64) if spec.kind == "binary" else values
    return pd.DataFrame(columns)


def write_csv(d: Dataset, path: str | Path) -> Path:
    """Write ``d`` so that :func:`load_csv` reads back an equal dataset."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_frame(d).to_csv(path, index=False, lineterminator="\n")
    return path


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------


def standardize(d: Dataset, *, targets: bool = False) -> Dataset:
    """Center and scale continuous covariates (population variance).

    Binary and one-hot slots are left alone. With ``targets`` a continuous
    mediator and outcome are standardized too.
    """

    def scale(name: str, values: np.ndarray) -> np.ndarray:
        if np.ptp(values) == 0:
            raise DatasetError("zero variance, cannot standardize", column=name)
        return (values - values.mean()) / values.std()

    X = d.X.copy()
    for spec in d.covariates:
        if spec.kind != "continuous":
            continue
        col = d.column_slice(spec.name).start
        X[:, col] = scale(spec.name, X[:, col])

    m, y = d.m, d.y
    if targets:
        if d.mediator_kind == "continuous":
            m = scale(d.mediator_column.name, d.m)
        if d.outcome_kind == "continuous":
            y = scale(d.outcome_column.name, d.y)
    return Dataset(X=X, t=d.t, m=m, y=y, schema=d.schema)


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    train_fraction: float
    train_index: np.ndarray
    test_index: np.ndarray


def stratified_split(d: Dataset, frac: float, seed: int) -> SplitPair:
    """Split rows into train/test keeping the treated/control ratio."""
    if not 0.0 < frac < 1.0:
        raise DatasetError(f"train fraction must be in (0, 1), got {frac}")
    rng = np.random.default_rng(seed)
    train_parts: list[np.ndarray] = []
    test_parts: list[np.ndarray] = []
    for arm in (0, 1):
        members = np.flatnonzero(d.t == arm)
        size = members.size
        n_train = math.floor(frac * size + 0.5)
        if size < 2 or not 1 <= n_train <= size - 1:
            raise DatasetError(
                f"treatment group t={arm} has {size} rows, too few to split at {frac}"
            )
        shuffled = rng.permutation(members)
        train_parts.append(shuffled[:n_train])
        test_parts.append(shuffled[n_train:])

    train_index = np.sort(np.concatenate(train_parts))
    test_index = np.sort(np.concatenate(test_parts))
    return SplitPair(
        train=d.subset(train_index),
        test=d.subset(test_index),
        train_fraction=frac,
        train_index=train_index,
        test_index=test_index,
    )
