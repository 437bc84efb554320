"""Binary grid snapshots and deterministic CSV output."""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import Field2D, GridSpec

MAGIC = b"PHSPGRID01".ljust(16, b"\0")
AXIS_CODES = {"zp": 0, "zr": 1, "xy": 2}
AXIS_NAMES = {v: k for k, v in AXIS_CODES.items()}
_HEADER = struct.Struct("<16sIIBB2xdd")


class GridFormatError(ValueError):
    pass


def encode_field(field: Field2D) -> bytes:
    vals = np.asarray(field.values)
    is_complex = np.iscomplexobj(vals)
    head = _HEADER.pack(MAGIC, field.grid.n_z, field.grid.n_p, AXIS_CODES[field.axes],
                        int(is_complex), field.grid.z_min, field.grid.length_z)
    if is_complex:
        body = np.ascontiguousarray(vals, dtype="<c16").view("<f8")
    else:
        body = np.ascontiguousarray(vals, dtype="<f8")
    return head + body.tobytes(order="C")


def decode_field(data: bytes) -> Field2D:
    if len(data) < _HEADER.size:
        raise GridFormatError("truncated header")
    magic, n_z, n_p, axis, cflag, z_min, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise GridFormatError("bad magic")
    if axis not in AXIS_NAMES or cflag not in (0, 1):
        raise GridFormatError("bad axis tag or complex flag")
    count = n_z * n_p * (2 if cflag else 1)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != count:
        raise GridFormatError(f"expected {count} values, found {body.size}")
    vals = body.reshape(n_z, n_p * (2 if cflag else 1))
    if cflag:
        vals = vals.view("<c16")
    grid = GridSpec(n_z, n_p, z_min, length)
    return Field2D(grid, vals.astype(complex if cflag else float), AXIS_NAMES[axis])


def write_field(path, field: Field2D) -> None:
    Path(path).write_bytes(encode_field(field))


def read_field(path) -> Field2D:
    return decode_field(Path(path).read_bytes())


def fmt(value) -> str:
    """17 significant digits, '.' decimal separator, no grouping."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    if v != v:
        return "nan"
    return format(v, ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
