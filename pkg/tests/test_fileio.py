import math
import os
import stat

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gavriflow.errors import DataError
from gavriflow.fileio import csv_text, fmt, json_text, read_csv, read_json, write_csv, write_json


@given(st.floats(allow_nan=False, allow_infinity=True))
def test_float_text_roundtrip(x):
    assert float(fmt(x)) == x


def test_nan_text():
    assert fmt(math.nan) == "nan" and fmt(-math.inf) == "-inf"


def test_csv_roundtrip(tmp_path, rng):
    a = rng.normal(size=(20, 3))
    a[3, 1] = math.nan
    path = tmp_path / "a.csv"
    write_csv(path, ["x", "y", "z"], a)
    head, back = read_csv(path, ["x", "y", "z"])
    assert head == ["x", "y", "z"]
    np.testing.assert_array_equal(back, a)
    assert stat.S_IMODE(os.stat(path).st_mode) == 0o644
    assert [p.name for p in tmp_path.iterdir()] == ["a.csv"]


def test_csv_rejects_bad_input(tmp_path):
    path = tmp_path / "b.csv"
    path.write_text("x,y\n1,2\n3\n")
    with pytest.raises(DataError):
        read_csv(path)
    path.write_text("x,y\n1,abc\n")
    with pytest.raises(DataError):
        read_csv(path)
    path.write_text("x,y\n1,2\n")
    with pytest.raises(DataError):
        read_csv(path, ["x", "z"])
    path.write_text("")
    with pytest.raises(DataError):
        read_csv(path)
    with pytest.raises(DataError):
        read_csv(tmp_path / "missing.csv")


def test_json_is_canonical(tmp_path):
    obj = {"b": np.float64(1.5), "a": [np.int64(2), math.nan, np.bool_(True)], "c": np.arange(2)}
    text = json_text(obj)
    assert text == json_text(dict(reversed(list(obj.items()))))
    path = tmp_path / "o.json"
    write_json(path, obj)
    assert read_json(path) == {"a": [2, None, True], "b": 1.5, "c": [0, 1]}
    path.write_text("{not json")
    with pytest.raises(DataError):
        read_json(path)


def test_csv_text_strings():
    assert csv_text(["a", "b"], [("x", 1.0)]) == "a,b\nx,1.0\n"
