import numpy as np
import pytest

from riskbench.errors import ValidationError
from riskbench.table import (
    Column,
    DataTable,
    concat_rows,
    read_csv,
    schema_sidecar,
    tables_equal,
    write_csv,
)


@pytest.fixture
def mixed_table():
    num = Column("income", "numerical",
                 np.array([1.5, np.nan, 3.25, 4.0]),
                 np.array([False, True, False, False]))
    cat = Column("sector", "categorical",
                 np.array(["a", "b", None, "a, with comma"], dtype=object),
                 np.array([False, False, True, False]))
    targets = {"mpl_avg_safe": np.array([1.0, 2.0, 3.0, 4.5])}
    return DataTable([num, cat], targets)


def test_csv_round_trip_with_kinds(mixed_table):
    text = write_csv(mixed_table)
    back = read_csv(text, kinds={"income": "numerical", "sector": "categorical"})
    assert tables_equal(mixed_table, back)


def test_csv_round_trip_inferred(mixed_table):
    back = read_csv(write_csv(mixed_table))
    assert tables_equal(mixed_table, back)


def test_csv_quotes_commas(mixed_table):
    text = write_csv(mixed_table)
    assert '"a, with comma"' in text


def test_missing_cells_are_empty_fields(mixed_table):
    lines = write_csv(mixed_table).splitlines()
    assert lines[2].startswith(",b")  # masked income cell


def test_write_is_deterministic(mixed_table):
    assert write_csv(mixed_table) == write_csv(mixed_table)


def test_target_never_missing():
    text = "x,mpl_avg_safe\n1.0,\n"
    with pytest.raises(ValidationError):
        read_csv(text)


def test_sidecar_mirrors_kinds(mixed_table):
    import json

    doc = json.loads(schema_sidecar(mixed_table, {"income": 0.25}))
    assert doc["features"][0] == {"kind": "numerical", "missing_rate": 0.25, "name": "income"}
    assert doc["targets"] == ["mpl_avg_safe"]


def test_take_and_concat(mixed_table):
    first = mixed_table.take(np.array([0, 1]))
    second = mixed_table.take(np.array([2, 3]))
    merged = concat_rows([first, second])
    assert tables_equal(mixed_table, merged)


def test_to_matrix_requires_numeric_complete(mixed_table):
    with pytest.raises(ValidationError):
        mixed_table.to_matrix()
    clean = DataTable(
        [Column("a", "numerical", np.array([1.0, 2.0]), np.zeros(2, bool))],
        {},
    )
    assert clean.to_matrix().tolist() == [[1.0], [2.0]]


def test_ragged_table_rejected():
    with pytest.raises(ValidationError):
        DataTable(
            [Column("a", "numerical", np.array([1.0]), np.zeros(1, bool))],
            {"mpl_avg_safe": np.array([1.0, 2.0])},
        )
