"""File formats: GFD1 grids, PGM images, CSV tables and JSON metadata.

GFD1 layout: one ASCII header line ``GFD1 nx ny x0 y0 h`` followed by
``nx*ny`` little-endian float64 samples in row-major order (rows along y).
"""
from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import GridFormatError
from .grid import GridFunction

__all__ = [
    "read_grid",
    "write_grid",
    "write_image",
    "write_csv",
    "write_json",
    "jacobi_rows",
    "projection_rows",
]

MAGIC = "GFD1"
_MAX_HEADER = 512


def write_grid(g: GridFunction, path) -> None:
    """Write ``g`` in GFD1 format; floats in the header use ``repr`` so they round-trip."""
    header = f"{MAGIC} {g.nx} {g.ny} {g.x0!r} {g.y0!r} {g.h!r}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(g.values, dtype="<f8").tobytes())


def read_grid(path) -> GridFunction:
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n", 0, _MAX_HEADER)
    if nl < 0:
        raise GridFormatError(f"{path}: no GFD1 header line found")
    try:
        parts = raw[:nl].decode("ascii").split()
    except UnicodeDecodeError as exc:
        raise GridFormatError(f"{path}: header is not ASCII") from exc
    if len(parts) != 6 or parts[0] != MAGIC:
        raise GridFormatError(f"{path}: expected 'GFD1 nx ny x0 y0 h', got {raw[:nl]!r}")
    try:
        nx, ny = int(parts[1]), int(parts[2])
        x0, y0, h = (float(p) for p in parts[3:])
    except ValueError as exc:
        raise GridFormatError(f"{path}: malformed header field ({exc})") from exc
    if nx < 1 or ny < 1:
        raise GridFormatError(f"{path}: nonpositive grid size {nx}x{ny}")
    payload = raw[nl + 1 :]
    need = 8 * nx * ny
    if len(payload) != need:
        kind = "truncated" if len(payload) < need else "oversized"
        raise GridFormatError(f"{path}: {kind} payload, {len(payload)} bytes for {nx}x{ny} grid ({need} expected)")
    vals = np.frombuffer(payload, dtype="<f8").reshape(ny, nx).astype(np.float64)
    try:
        return GridFunction(nx, ny, x0, y0, h, vals)
    except ValueError as exc:
        raise GridFormatError(f"{path}: {exc}") from exc


def write_image(g: GridFunction, path, value_range=None) -> None:
    """8-bit binary PGM; ``value_range`` (default min/max) maps linearly to 0..255.

    The top image row is the largest ``y``.  A degenerate range renders as
    uniform gray 128.
    """
    v = g.values
    lo, hi = (float(v.min()), float(v.max())) if value_range is None else map(float, value_range)
    if not hi > lo:
        img = np.full(v.shape, 128, dtype=np.uint8)
    else:
        scaled = np.clip((v - lo) / (hi - lo), 0.0, 1.0)
        img = np.rint(scaled * 255.0).astype(np.uint8)
    img = img[::-1]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{g.nx} {g.ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, os.PathLike):
        return os.fspath(obj)
    return obj


def write_json(path, data) -> None:
    Path(path).write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def jacobi_rows(sol):
    """Rows ``(t, x, y, z)`` of a :class:`~lambda_xray.jacobi.JacobiSolution`."""
    return zip(sol.times, sol.x, sol.y, sol.z)


def projection_rows(pair):
    """Rows ``(t, a1, b1, W)`` of a :class:`~lambda_xray.jacobi.ProjectionPair`."""
    from .jacobi import wronskian

    return zip(pair.times, pair.a1, pair.b1, wronskian(pair))
