from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from acpid.errors import ConfigurationError
from acpid.telemetry import HEADER_COMMENT, StepLog, columns, read_csv, tuner_columns


def test_columns_unique_and_complete():
    cols = columns()
    assert len(cols) == len(set(cols))
    assert cols[0] == "t"
    assert set(tuner_columns()) <= set(cols)
    for a in ("roll", "pitch", "yaw", "alt"):
        for f in ("sp", "kp_d", "u_sat", "sigma", "reward", "la", "lc"):
            assert f"{a}_{f}" in cols


def test_header_layout(tmp_path):
    log = StepLog()
    log.append([0.0] * len(columns()))
    text = log.to_csv(tmp_path / "a.csv")
    lines = text.split("\n")
    assert lines[0] == HEADER_COMMENT
    assert lines[1].split(",") == list(columns())
    assert text.endswith("\n") and "\r" not in (tmp_path / "a.csv").read_bytes().decode()


def test_row_width_checked():
    with pytest.raises(ValueError):
        StepLog().append([1.0, 2.0])


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(finite, finite, finite), min_size=1, max_size=20))
def test_csv_round_trip_bit_exact(tmp_path_factory, rows):
    path = tmp_path_factory.mktemp("rt") / "log.csv"
    log = StepLog(("t", "a", "b"))
    for r in rows:
        log.append(r)
    log.to_csv(path)
    back = read_csv(path)
    assert back.columns == log.columns
    assert back.array().tobytes() == log.array().tobytes()


def test_column_access():
    log = StepLog(("t", "v"))
    log.append([0.0, 1.5])
    log.append([0.01, -2.0])
    np.testing.assert_array_equal(log["v"], [1.5, -2.0])
    assert "v" in log and "w" not in log
    with pytest.raises(KeyError, match="'w'"):
        log["w"]


def test_signed_zero_and_tiny_values_survive(tmp_path):
    log = StepLog(("t", "v"))
    log.append([-0.0, 5e-324])
    log.to_csv(tmp_path / "z.csv")
    back = read_csv(tmp_path / "z.csv")
    assert math.copysign(1.0, back["t"][0]) == -1.0 and back["v"][0] == 5e-324


def test_missing_required_column(tmp_path):
    log = StepLog(("t", "v"))
    log.append([0.0, 1.0])
    log.to_csv(tmp_path / "m.csv")
    with pytest.raises(ConfigurationError, match="'roll_sigma'"):
        read_csv(tmp_path / "m.csv", required=("t", "roll_sigma"))


@pytest.mark.parametrize("first, msg", [("t,v", "schema line"), ("# acpid-steplog v9", "unsupported schema")])
def test_bad_schema_line(tmp_path, first, msg):
    p = tmp_path / "bad.csv"
    p.write_text(f"{first}\nt,v\n0.0,1.0\n")
    with pytest.raises(ConfigurationError, match=msg):
        read_csv(p)


def test_ragged_row_reports_line(tmp_path):
    p = tmp_path / "rag.csv"
    p.write_text(f"{HEADER_COMMENT}\nt,v\n0.0,1.0\n0.01\n")
    with pytest.raises(ConfigurationError, match="rag.csv:4"):
        read_csv(p)
