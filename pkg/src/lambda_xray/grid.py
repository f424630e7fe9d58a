"""Uniform rectangular grids and bilinear sampling.

A :class:`GridFunction` holds real samples ``values[iy, ix]`` at the nodes
``(x0 + ix*h, y0 + iy*h)``.  Off-node values come from bilinear interpolation
of the *zero-extended* samples: every node outside the array counts as 0.  The
interpolant is therefore a compactly supported function on the plane whose
support is the grid hull grown by one cell, and sampling at a shift ``s`` is
exactly the transpose of sampling at ``-s``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridFunction",
    "square_grid",
    "bilinear_sample",
    "shift_sample",
    "bilinear_stencil",
]


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Real scalar field sampled on a uniform isotropic grid.

    Parameters
    ----------
    nx, ny : int
        Number of samples along x and y (both >= 2).
    x0, y0 : float
        Coordinates of the lower-left node.
    h : float
        Grid spacing.
    values : ndarray, shape (ny, nx)
        Samples, row-major with rows running along increasing y.
    """

    nx: int
    ny: int
    x0: float
    y0: float
    h: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.nx < 2 or self.ny < 2:
            raise ValueError(f"grid needs nx, ny >= 2, got {self.nx}x{self.ny}")
        if not (self.h > 0 and np.isfinite(self.h)):
            raise ValueError(f"grid spacing must be positive, got {self.h}")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.ny, self.nx):
            raise ValueError(f"values shape {vals.shape} != (ny, nx) = {(self.ny, self.nx)}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, nx, ny, x0, y0, h):
        return cls(nx, ny, x0, y0, h, np.zeros((ny, nx)))

    def like(self, values) -> "GridFunction":
        """New grid with the same geometry and the given samples."""
        return GridFunction(self.nx, self.ny, self.x0, self.y0, self.h, values)

    @property
    def geometry(self):
        return (self.nx, self.ny, self.x0, self.y0, self.h)

    def same_geometry(self, other: "GridFunction") -> bool:
        return self.geometry == other.geometry

    @property
    def x(self) -> np.ndarray:
        return self.x0 + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.y0 + self.h * np.arange(self.ny)

    def coords(self):
        """Node coordinates ``(X, Y)`` as two (ny, nx) arrays."""
        return np.meshgrid(self.x, self.y)

    def radius(self, center=(0.0, 0.0)) -> np.ndarray:
        X, Y = self.coords()
        return np.hypot(X - center[0], Y - center[1])

    def norm(self) -> float:
        """Discrete L2 norm with cell weight h**2."""
        return float(np.sqrt(np.sum(self.values**2)) * self.h)

    def inner(self, other: "GridFunction") -> float:
        return float(np.sum(self.values * other.values) * self.h**2)

    def __add__(self, other):
        if isinstance(other, GridFunction):
            return self.like(self.values + other.values)
        return self.like(self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            return self.like(self.values - other.values)
        return self.like(self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            return self.like(self.values * other.values)
        return self.like(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.values)


def square_grid(N: int, L: float = 3.0, values=None) -> GridFunction:
    """Cell-centred ``2LN x 2LN`` grid on ``[-L, L]^2`` with spacing ``1/N``.

    ``N=40, L=3`` gives the 240 x 240 grid used throughout the experiments.
    """
    h = 1.0 / N
    n = int(round(2 * L * N))
    x0 = -L + 0.5 * h
    if values is None:
        values = np.zeros((n, n))
    return GridFunction(n, n, x0, x0, h, values)


def _padded(values: np.ndarray, pad: int) -> np.ndarray:
    return np.pad(values, pad, mode="constant")


def bilinear_sample(f: GridFunction, px, py) -> np.ndarray:
    """Bilinear interpolation of ``f`` at arbitrary points.

    Points farther than one cell outside the sample array evaluate to 0.
    """
    px = np.asarray(px, dtype=np.float64)
    py = np.asarray(py, dtype=np.float64)
    sx = (px - f.x0) / f.h
    sy = (py - f.y0) / f.h
    ix = np.floor(sx)
    iy = np.floor(sy)
    fx = sx - ix
    fy = sy - iy
    # one ring of zeros so that indices -1 .. n are valid
    padded = _padded(f.values, 1)
    ix = ix.astype(np.int64) + 1
    iy = iy.astype(np.int64) + 1
    inside = (ix >= 0) & (iy >= 0) & (ix <= f.nx) & (iy <= f.ny)
    ixc = np.where(inside, ix, 0)
    iyc = np.where(inside, iy, 0)
    v00 = padded[iyc, ixc]
    v10 = padded[iyc, ixc + 1]
    v01 = padded[iyc + 1, ixc]
    v11 = padded[iyc + 1, ixc + 1]
    out = (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11
    return np.where(inside, out, 0.0)


def bilinear_stencil(sx: float, sy: float):
    """Integer offsets and weights of bilinear sampling at a shift of ``(sx, sy)`` cells.

    Returns ``(ix, iy, weights)`` where sampling at node ``j + (sx, sy)`` equals
    ``sum(w * values[j_y + iy, j_x + ix])``.
    """
    ix = int(np.floor(sx))
    iy = int(np.floor(sy))
    fx = sx - ix
    fy = sy - iy
    return (
        (ix, ix + 1, ix, ix + 1),
        (iy, iy, iy + 1, iy + 1),
        ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy),
    )


def _shifted_view(padded: np.ndarray, pad: int, ny: int, nx: int, ox: int, oy: int) -> np.ndarray:
    return padded[pad + oy : pad + oy + ny, pad + ox : pad + ox + nx]


def shift_sample(f: GridFunction, dx: float, dy: float) -> np.ndarray:
    """Bilinear samples of ``f`` at every node displaced by ``(dx, dy)``.

    Equivalent to ``bilinear_sample(f, X + dx, Y + dy)`` on the node grid but
    evaluated with four shifted array slices.
    """
    sx, sy = dx / f.h, dy / f.h
    pad = int(np.ceil(max(abs(sx), abs(sy)))) + 2
    pad = min(pad, max(f.nx, f.ny) + 2)
    padded = _padded(f.values, pad)
    out = np.zeros_like(f.values)
    for ox, oy, w in zip(*bilinear_stencil(sx, sy)):
        if w == 0.0 or abs(ox) >= pad or abs(oy) >= pad:
            continue
        out += w * _shifted_view(padded, pad, f.ny, f.nx, ox, oy)
    return out
