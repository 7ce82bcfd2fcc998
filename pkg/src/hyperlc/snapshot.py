"""Versioned binary snapshots of a simulation state.

Layout (all integers and floats little-endian)::

    bytes 0-7     magic  b"HLCSNAP\\x00"
    byte  8       format version (currently 1)
    bytes 9-12    uint32 header length H
    next H bytes  UTF-8 JSON header: grid, coefficients, t, seed, array shapes
    then          v     complex128, shape (3, n, n, n), C order
                  Phi   complex128, shape (2, n, n, n), C order
                  mean  float64, shape (2,)
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .multipliers import Coefficients
from .spectral import Grid3
from .timestepper import SimulationState

MAGIC = b"HLCSNAP\x00"
VERSION = 1
_C128 = np.dtype("<c16")
_F64 = np.dtype("<f8")


class SnapshotError(ValueError):
    pass


def encode(state: SimulationState, c: Coefficients) -> bytes:
    g = state.grid
    header = {
        "grid": {"points_per_axis": g.points_per_axis, "box_length": g.box_length,
                 "dealias_fraction": g.dealias_fraction},
        "coefficients": c.as_dict(),
        "t": state.t,
        "seed": state.seed,
        "arrays": {"v": [3, g.n, g.n, g.n], "Phi": [2, g.n, g.n, g.n], "mean_phi": [2]},
    }
    h = json.dumps(header, sort_keys=True).encode("utf-8")
    v, Phi, mean = state.arrays()
    return b"".join([
        MAGIC, bytes([VERSION]), struct.pack("<I", len(h)), h,
        np.ascontiguousarray(v, dtype=_C128).tobytes(),
        np.ascontiguousarray(Phi, dtype=_C128).tobytes(),
        np.ascontiguousarray(mean, dtype=_F64).tobytes(),
    ])


def decode(data: bytes) -> tuple[SimulationState, Coefficients]:
    if data[:8] != MAGIC:
        raise SnapshotError("not a snapshot file (bad magic)")
    if len(data) < 13:
        raise SnapshotError("truncated snapshot")
    version = data[8]
    if version != VERSION:
        raise SnapshotError(f"snapshot format version {version} is not supported (expected {VERSION})")
    (hlen,) = struct.unpack("<I", data[9:13])
    header = json.loads(data[13:13 + hlen].decode("utf-8"))
    grid = Grid3(**header["grid"])
    c = Coefficients(**header["coefficients"])
    off = 13 + hlen
    n = grid.n
    sizes = [(3, n, n, n), (2, n, n, n)]
    arrays = []
    for shape in sizes:
        count = int(np.prod(shape))
        end = off + count * _C128.itemsize
        if end > len(data):
            raise SnapshotError("truncated snapshot")
        arrays.append(np.frombuffer(data, dtype=_C128, count=count, offset=off).reshape(shape).astype(complex))
        off = end
    if off + 2 * _F64.itemsize != len(data):
        raise SnapshotError("snapshot length does not match its header")
    mean = np.frombuffer(data, dtype=_F64, count=2, offset=off).astype(float)
    state = SimulationState.from_arrays(grid, header["t"], arrays[0], arrays[1], mean, header["seed"])
    return state, c


def save(path, state: SimulationState, c: Coefficients) -> Path:
    path = Path(path)
    path.write_bytes(encode(state, c))
    return path


def load(path) -> tuple[SimulationState, Coefficients]:
    return decode(Path(path).read_bytes())
