"""Per-step telemetry and its CSV form.

CSV layout: a ``# acpid-steplog v1`` comment line, a header row, then one
row per control step. Floats are written with ``repr`` so a file reads back
to bit-identical values and identical runs produce identical bytes.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

SCHEMA_NAME = "acpid-steplog"
SCHEMA_VERSION = 1
HEADER_COMMENT = f"# {SCHEMA_NAME} v{SCHEMA_VERSION}"

AXES = ("roll", "pitch", "yaw", "alt")
STATE_COLUMNS = ("x", "y", "z", "phi", "theta", "psi", "vx", "vy", "vz", "dphi", "dtheta", "dpsi")
AXIS_FIELDS = ("sp", "ep", "ei", "ed", "kp_s", "ki_s", "kd_s", "kp_d", "ki_d", "kd_d", "u_raw", "u_sat")
TUNER_FIELDS = ("mu", "sigma", "s_m", "reward", "td", "la", "lc")


def columns() -> tuple[str, ...]:
    cols = ["t", "mass", *STATE_COLUMNS, "x_ref", "y_ref"]
    for a in AXES:
        cols += [f"{a}_{f}" for f in AXIS_FIELDS]
    cols += ["u1", "u2", "u3", "u4", "w1", "w2", "w3", "w4", "d1", "d2", "d3"]
    for a in AXES:
        cols += [f"{a}_{f}" for f in TUNER_FIELDS]
    return tuple(cols)


def tuner_columns() -> tuple[str, ...]:
    return tuple(f"{a}_{f}" for a in AXES for f in TUNER_FIELDS)


class StepLog:
    """Column-addressable table built one row at a time."""

    def __init__(self, cols=None):
        self.columns = tuple(cols) if cols is not None else columns()
        self._index = {c: i for i, c in enumerate(self.columns)}
        self.rows: list[list[float]] = []
        self._cache: np.ndarray | None = None

    def append(self, row) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, schema has {len(self.columns)}")
        self.rows.append([float(x) for x in row])
        self._cache = None

    def __len__(self) -> int:
        return len(self.rows)

    def array(self) -> np.ndarray:
        if self._cache is None:
            self._cache = np.array(self.rows, dtype=np.float64).reshape(len(self.rows), len(self.columns))
        return self._cache

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.array()[:, self._index[name]]
        except KeyError:
            raise KeyError(f"log has no column {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def to_csv(self, path=None) -> str:
        buf = io.StringIO(newline="")
        buf.write(HEADER_COMMENT + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([repr(x) for x in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, newline="")
        return text


def read_csv(path, required=None) -> StepLog:
    """Read a step log, checking the schema line and (optionally) required columns."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read step log {path}: {exc}") from None
    lines = text.splitlines()
    if not lines or not lines[0].startswith(f"# {SCHEMA_NAME} "):
        raise ConfigurationError(f"{path}: missing '{HEADER_COMMENT}' schema line")
    if lines[0].strip() != HEADER_COMMENT:
        raise ConfigurationError(f"{path}: unsupported schema {lines[0][2:].strip()!r}")
    reader = csv.reader(lines[1:])
    header = next(reader)
    for col in required or ():
        if col not in header:
            raise ConfigurationError(f"{path}: missing column {col!r}")
    log = StepLog(header)
    for i, row in enumerate(reader, start=3):
        if len(row) != len(header):
            raise ConfigurationError(f"{path}:{i}: expected {len(header)} cells, found {len(row)}")
        log.rows.append([float(x) for x in row])
    return log
