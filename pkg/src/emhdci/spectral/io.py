"""Field snapshot files.

Layout: one JSON header line (rank, n_space, n_time, n_pad, is_real, byte
order) terminated by a newline, followed by raw little-endian float64
coefficient pairs (re, im) in row-major (t, m1, m2, m3, component) order.
Wavevector indices are in FFT layout (0 .. n/2-1, -n/2 .. -1).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .field import SpectralField, component_shape
from .grid import Grid

MAGIC = "emhdci-field"


def write_field(path, f: SpectralField) -> None:
    path = Path(path)
    header = {
        "format": MAGIC,
        "rank": f.rank,
        "n_space": f.grid.n_space,
        "n_time": f.grid.n_time,
        "n_pad": f.grid.n_pad,
        "is_real": f.is_real,
        "byte_order": "little",
    }
    comps = component_shape(f.rank)
    data = f.coeffs
    if comps:
        # (t, c, m1, m2, m3) -> (t, m1, m2, m3, c)
        data = np.moveaxis(data, 1, -1)
    flat = np.ascontiguousarray(data).reshape(-1)
    pairs = np.empty(flat.size * 2, dtype="<f8")
    pairs[0::2] = flat.real
    pairs[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("ascii") + b"\n")
        fh.write(pairs.tobytes())


def read_field(path, workers: int = 1) -> SpectralField:
    path = Path(path)
    with open(path, "rb") as fh:
        header_line = fh.readline()
        raw = fh.read()
    header = json.loads(header_line.decode("ascii"))
    if header.get("format") != MAGIC:
        raise ValueError(f"{path}: not a field snapshot")
    if header.get("byte_order") != "little":
        raise ValueError(f"{path}: unsupported byte order {header.get('byte_order')!r}")
    grid = Grid(header["n_space"], header["n_time"], header.get("n_pad", 0), workers=workers)
    rank = header["rank"]
    comps = component_shape(rank)
    n = grid.n_space
    shape = (grid.n_slices,) + (n, n, n) + comps
    pairs = np.frombuffer(raw, dtype="<f8")
    expected = 2 * int(np.prod(shape))
    if pairs.size != expected:
        raise ValueError(f"{path}: payload has {pairs.size} floats, expected {expected}")
    coeffs = (pairs[0::2] + 1j * pairs[1::2]).reshape(shape)
    if comps:
        coeffs = np.moveaxis(coeffs, -1, 1)
    return SpectralField(grid, rank, np.ascontiguousarray(coeffs), header["is_real"])
