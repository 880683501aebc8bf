"""Binary field snapshots and CSV density export.

Format (little-endian): magic "NLSF", version u32, dim u32, N u32,
model tag u32, then L, t, sigma as f64, then N^d interleaved (re, im)
f64 pairs in C order.
"""
from __future__ import annotations

import csv
import io
import struct

import numpy as np

from .errors import VerificationError
from .grid import Model, WaveField, make_grid

MAGIC = b"NLSF"
VERSION = 1

_MODEL_TAGS = {m: i for i, m in enumerate(Model)}
_TAG_MODELS = {i: m for m, i in _MODEL_TAGS.items()}

_HEADER = struct.Struct("<4sIIII3d")


def write_snapshot(field: WaveField, path) -> None:
    g = field.grid
    header = _HEADER.pack(MAGIC, VERSION, g.dim, g.n, _MODEL_TAGS[field.model],
                          g.half_length, field.time, field.sigma)
    payload = np.ascontiguousarray(field.values, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path) -> WaveField:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise VerificationError(f"snapshot {path} truncated before header")
    magic, version, dim, n, tag, L, t, sigma = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise VerificationError(f"snapshot {path} has bad magic {magic!r}")
    if version != VERSION:
        raise VerificationError(f"snapshot {path} has unknown version {version}")
    if tag not in _TAG_MODELS:
        raise VerificationError(f"snapshot {path} has unknown model tag {tag}")
    grid = make_grid(dim, n, L)
    expected = _HEADER.size + 16 * n**dim
    if len(raw) != expected:
        raise VerificationError(
            f"snapshot {path} payload is {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).reshape(grid.shape)
    return WaveField(grid, values, time=t, sigma=sigma, model=_TAG_MODELS[tag])


def density_csv(field: WaveField) -> str:
    """|u|^2 profile as CSV text with coordinate columns then `density`."""
    g = field.grid
    rho = np.abs(field.values) ** 2
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if g.dim == 1:
        writer.writerow(["x", "density"])
        for xj, rj in zip(g.x, rho):
            writer.writerow([f"{xj:.17g}", f"{rj:.17g}"])
    else:
        writer.writerow(["x", "y", "density"])
        for i, xi in enumerate(g.x):
            for j, yj in enumerate(g.x):
                writer.writerow([f"{xi:.17g}", f"{yj:.17g}", f"{rho[i, j]:.17g}"])
    return buf.getvalue()
