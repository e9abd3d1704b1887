from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from mediationcore.dataset import (
    ColumnSpec,
    Dataset,
    load_csv,
    one_hot,
    standardize,
    stratified_split,
    validate_schema,
    write_csv,
)
from mediationcore.exceptions import DatasetError
from tests.conftest import mixed_schema


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------


def test_categorical_needs_levels() -> None:
    with pytest.raises(ValidationError):
        ColumnSpec(name="region", kind="categorical")


def test_levels_only_for_categorical() -> None:
    with pytest.raises(ValidationError):
        ColumnSpec(name="age", kind="continuous", levels=3)


def test_duplicate_names_rejected() -> None:
    schema = [*mixed_schema(), ColumnSpec(name="age", kind="continuous")]
    with pytest.raises(DatasetError, match="duplicate"):
        validate_schema(schema)


def test_treatment_must_be_binary() -> None:
    schema = [
        ColumnSpec(name="x", kind="continuous"),
        ColumnSpec(name="t", kind="continuous", role="treatment"),
        ColumnSpec(name="m", kind="continuous", role="mediator"),
        ColumnSpec(name="y", kind="continuous", role="outcome"),
    ]
    with pytest.raises(DatasetError) as info:
        validate_schema(schema)
    assert info.value.column == "t"


def test_schema_needs_each_role_once() -> None:
    schema = [c for c in mixed_schema() if c.role != "mediator"]
    with pytest.raises(DatasetError, match="mediator"):
        validate_schema(schema)


# ---------------------------------------------------------------------------
# one_hot
# ---------------------------------------------------------------------------


def test_one_hot_rows_sum_to_one() -> None:
    encoded = one_hot([0, 2, 1, 2], 3)
    assert encoded.shape == (4, 3)
    assert encoded.sum(axis=1).tolist() == [1.0, 1.0, 1.0, 1.0]
    assert encoded[1].tolist() == [0.0, 0.0, 1.0]


def test_one_hot_rejects_out_of_range() -> None:
    with pytest.raises(DatasetError, match="outside"):
        one_hot([0, 3], 3)


def test_one_hot_empty_vector() -> None:
    assert one_hot(np.array([], dtype=int), 2).shape == (0, 2)


# ---------------------------------------------------------------------------
# Dataset invariants
# ---------------------------------------------------------------------------


def test_row_count_mismatch(mixed_data: Dataset) -> None:
    with pytest.raises(DatasetError, match="same number of rows"):
        Dataset(X=mixed_data.X, t=mixed_data.t[:-1], m=mixed_data.m, y=mixed_data.y,
                schema=mixed_data.schema)  # fmt: skip


def test_treatment_values_checked(mixed_data: Dataset) -> None:
    t = mixed_data.t.copy()
    t[0] = 2
    with pytest.raises(DatasetError, match="0/1"):
        mixed_data.with_targets(t=t)


def test_non_finite_values_rejected(mixed_data: Dataset) -> None:
    m = mixed_data.m.copy()
    m[3] = np.nan
    with pytest.raises(DatasetError, match="non-finite"):
        mixed_data.with_targets(m=m)


def test_arrays_are_read_only(mixed_data: Dataset) -> None:
    with pytest.raises(ValueError):
        mixed_data.X[0, 0] = 1.0


def test_encoded_layout(mixed_data: Dataset) -> None:
    assert mixed_data.x_dim == 5
    assert mixed_data.column_slice("region") == slice(2, 5)
    assert mixed_data.encoded_kinds == ("continuous", "binary", "binary", "binary", "binary")
    assert mixed_data.outcome_kind == "binary"


def test_design_matrix_drops_reference_level(mixed_data: Dataset) -> None:
    design = mixed_data.design_matrix(drop_reference=True)
    assert design.shape == (12, 4)
    np.testing.assert_array_equal(design[:, 2:], mixed_data.X[:, 3:5])


def test_design_matrix_drops_constant_columns(mixed_data: Dataset) -> None:
    X = mixed_data.X.copy()
    X[:, 1] = 1.0
    d = Dataset(X=X, t=mixed_data.t, m=mixed_data.m, y=mixed_data.y, schema=mixed_data.schema)
    assert d.design_matrix(drop_constant=True).shape == (12, 3)


def test_replace_covariate(mixed_data: Dataset) -> None:
    columns = [ColumnSpec(name="age_a", kind="binary"), ColumnSpec(name="age_b", kind="binary")]
    values = np.zeros((mixed_data.n, 2))
    values[:, 0] = 1.0
    replaced = mixed_data.replace_covariate("age", columns, values)

    assert replaced.x_dim == 6
    assert [c.name for c in replaced.covariates][:2] == ["age_a", "age_b"]
    np.testing.assert_array_equal(replaced.X[:, 2:], mixed_data.X[:, 1:])


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def test_csv_round_trip(tmp_path: Path, mixed_data: Dataset) -> None:
    path = write_csv(mixed_data, tmp_path / "data.csv")
    assert load_csv(path, mixed_data.schema) == mixed_data


def test_missing_column_names_the_column(tmp_path: Path) -> None:
    path = tmp_path / "data.csv"
    path.write_text("age,smoker,region,t,m\n1,0,1,0,0.5\n", encoding="utf-8")
    with pytest.raises(DatasetError) as info:
        load_csv(path, mixed_schema())
    assert info.value.column == "y"


def test_unparseable_value_reports_row(tmp_path: Path) -> None:
    path = tmp_path / "data.csv"
    path.write_text(
        "age,smoker,region,t,m,y\n1,0,1,0,0.5,1\nold,1,2,1,0.1,0\n", encoding="utf-8"
    )
    with pytest.raises(DatasetError, match="data row 2") as info:
        load_csv(path, mixed_schema())
    assert info.value.column == "age"


def test_missing_value_rejected(tmp_path: Path) -> None:
    path = tmp_path / "data.csv"
    path.write_text("age,smoker,region,t,m,y\n1,0,1,0,,1\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="missing value"):
        load_csv(path, mixed_schema())


def test_categorical_code_out_of_range(tmp_path: Path) -> None:
    path = tmp_path / "data.csv"
    path.write_text("age,smoker,region,t,m,y\n1,0,3,0,0.5,1\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="integer codes") as info:
        load_csv(path, mixed_schema())
    assert info.value.column == "region"


def test_header_only_is_empty(tmp_path: Path) -> None:
    path = tmp_path / "data.csv"
    path.write_text("age,smoker,region,t,m,y\n", encoding="utf-8")
    with pytest.raises(DatasetError, match="empty dataset"):
        load_csv(path, mixed_schema())


def test_missing_file(tmp_path: Path) -> None:
    with pytest.raises(DatasetError, match="no such file"):
        load_csv(tmp_path / "absent.csv", mixed_schema())


# ---------------------------------------------------------------------------
# Preprocessing
# ---------------------------------------------------------------------------


def test_standardize_continuous_only(mixed_data: Dataset) -> None:
    scaled = standardize(mixed_data)
    age = scaled.X[:, 0]
    assert age.mean() == pytest.approx(0.0, abs=1e-12)
    assert age.std() == pytest.approx(1.0)
    np.testing.assert_array_equal(scaled.X[:, 1:], mixed_data.X[:, 1:])
    np.testing.assert_array_equal(scaled.m, mixed_data.m)


def test_standardize_targets(mixed_data: Dataset) -> None:
    scaled = standardize(mixed_data, targets=True)
    assert scaled.m.std() == pytest.approx(1.0)
    # binary outcome untouched
    np.testing.assert_array_equal(scaled.y, mixed_data.y)


def test_standardize_is_idempotent(mixed_data: Dataset) -> None:
    once = standardize(mixed_data, targets=True)
    twice = standardize(once, targets=True)
    np.testing.assert_allclose(twice.X, once.X, atol=1e-12)
    np.testing.assert_allclose(twice.m, once.m, atol=1e-12)
    np.testing.assert_array_equal(twice.y, once.y)


def test_standardize_zero_variance(mixed_data: Dataset) -> None:
    X = mixed_data.X.copy()
    X[:, 0] = 5.0
    d = Dataset(X=X, t=mixed_data.t, m=mixed_data.m, y=mixed_data.y, schema=mixed_data.schema)
    with pytest.raises(DatasetError, match="zero variance") as info:
        standardize(d)
    assert info.value.column == "age"


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def test_split_partitions_rows(synthetic_data: Dataset) -> None:
    pair = stratified_split(synthetic_data, 0.8, seed=1)
    combined = np.concatenate([pair.train_index, pair.test_index])
    assert sorted(combined.tolist()) == list(range(synthetic_data.n))
    assert pair.train.n + pair.test.n == synthetic_data.n


def test_split_keeps_treatment_ratio(synthetic_data: Dataset) -> None:
    treated = int(synthetic_data.t.sum())
    for seed in range(50):
        pair = stratified_split(synthetic_data, 0.8, seed=seed)
        assert abs(int(pair.train.t.sum()) - 0.8 * treated) <= 0.5


def test_split_is_deterministic(synthetic_data: Dataset) -> None:
    a = stratified_split(synthetic_data, 0.7, seed=11)
    b = stratified_split(synthetic_data, 0.7, seed=11)
    np.testing.assert_array_equal(a.train_index, b.train_index)


def test_split_rejects_bad_fraction(synthetic_data: Dataset) -> None:
    with pytest.raises(DatasetError, match="train fraction"):
        stratified_split(synthetic_data, 1.0, seed=0)


def test_split_needs_two_rows_per_arm(mixed_data: Dataset) -> None:
    t = np.zeros(mixed_data.n, dtype=int)
    t[0] = 1
    with pytest.raises(DatasetError, match="t=1"):
        stratified_split(mixed_data.with_targets(t=t), 0.8, seed=0)
