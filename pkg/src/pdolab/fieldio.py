"""Binary dump format: 8-byte LE header length, UTF-8 JSON header, interleaved LE float64 (re, im)."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InputError
from .grid import Field, SpacetimeGrid


def write_array(path: str | Path, values: np.ndarray, header: dict) -> Path:
    values = np.ascontiguousarray(values, dtype=np.complex128)
    head = dict(header, shape=list(values.shape), dtype="complex128-le-interleaved")
    blob = json.dumps(head, sort_keys=True).encode("utf-8")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        fh.write(values.view(np.float64).astype("<f8").tobytes())
    return path


def read_array(path: str | Path) -> tuple[np.ndarray, dict]:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise InputError("truncated dump")
    (n,) = struct.unpack("<Q", raw[:8])
    header = json.loads(raw[8:8 + n].decode("utf-8"))
    data = np.frombuffer(raw[8 + n:], dtype="<f8")
    shape = tuple(header["shape"])
    if data.size != 2 * int(np.prod(shape)):
        raise InputError("payload size does not match header shape")
    values = data.astype(np.float64).view(np.complex128).reshape(shape)
    return values, header


def write_field(path: str | Path, field: Field, **extra) -> Path:
    return write_array(path, field.values, {"grid": field.grid.to_dict(), "layout": field.layout, **extra})


def read_field(path: str | Path) -> Field:
    values, header = read_array(path)
    return Field(SpacetimeGrid.from_dict(header["grid"]), values, header.get("layout", "spacetime"))
