"""Weighted X-ray transform over a curve family and its adjoint.

Discretisation: the curve integral is a trapezoid sum over ``n_quad`` nodes of
the family's reference curve (periodic for closed curves), and the image is
read off the grid by bilinear interpolation.  For the closed-form families the
data chart is the translation vector, sampled on the same grid as the image,
so with a unit weight the whole transform is a correlation of the image with a
fixed sparse stencil (the sum of the bilinear footprints of all quadrature
nodes).  The fast path applies that stencil by FFT; the direct path sums
shifted bilinear samples and also handles position-dependent weights.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.fft
from scipy.signal import fftconvolve

from .curves import CurveFamily, GeneralLambda, rk4_curve
from .grid import GridFunction, bilinear_sample, shift_sample
from .jacobi import Chart

__all__ = [
    "WeightField",
    "default_n_quad",
    "stencil",
    "points_kernel",
    "correlate",
    "forward",
    "adjoint",
    "forward_direct",
    "adjoint_direct",
    "forward_general",
    "fft_workers",
]


def fft_workers() -> int:
    """Worker count for FFTs, from ``LAMBDA_XRAY_THREADS`` (0 or unset: all cores)."""
    raw = os.environ.get("LAMBDA_XRAY_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class WeightField:
    """Weight ``w(x, y, theta)`` of the transform; ``None`` means ``w = 1``."""

    w: Callable | None = None

    @property
    def is_unit(self) -> bool:
        return self.w is None

    def __call__(self, x, y, theta):
        if self.w is None:
            return np.ones(np.broadcast(np.asarray(x), np.asarray(theta)).shape)
        val = np.asarray(self.w(x, y, theta), dtype=float)
        if not np.all(np.isfinite(val)):
            raise ValueError("weight field returned a non-finite value")
        return val


def _weight(w) -> WeightField:
    if w is None:
        return WeightField()
    if isinstance(w, WeightField):
        return w
    if callable(w):
        return WeightField(w)
    if w == 1:
        return WeightField()
    c = float(w)
    return WeightField(lambda x, y, th: np.full(np.broadcast(np.asarray(x), np.asarray(th)).shape, c))


def default_n_quad(family: CurveFamily, h: float) -> int:
    """At least one node per grid cell along the curve, never fewer than 360."""
    return max(360, int(math.ceil(family.curve_length() / h)))


def _check_n_quad(n_quad):
    if n_quad < 16:
        raise ValueError(f"n_quad must be >= 16, got {n_quad}")


def points_kernel(sx, sy, weights) -> np.ndarray:
    """Sum of bilinear footprints of weighted points given in cell units.

    Returns an odd-sized kernel ``K`` centred at ``M`` such that correlating an
    image with ``K`` evaluates ``sum_k weights_k * f(x + s_k h)`` at every node.
    """
    sx_in = np.asarray(sx, dtype=float)
    sx = sx_in.ravel()
    sy = np.asarray(sy, dtype=float).ravel()
    weights = np.broadcast_to(np.asarray(weights, dtype=float), np.shape(sx_in)).ravel()
    M = int(math.ceil(max(np.max(np.abs(sx)), np.max(np.abs(sy))))) + 1
    K = np.zeros((2 * M + 1, 2 * M + 1))
    ix = np.floor(sx).astype(np.int64)
    iy = np.floor(sy).astype(np.int64)
    fx = sx - ix
    fy = sy - iy
    for ox, oy, wt in (
        (0, 0, (1 - fx) * (1 - fy)),
        (1, 0, fx * (1 - fy)),
        (0, 1, (1 - fx) * fy),
        (1, 1, fx * fy),
    ):
        np.add.at(K, (M + iy + oy, M + ix + ox), weights * wt)
    return K


def stencil(family: CurveFamily, h: float, n_quad: int) -> np.ndarray:
    """Correlation kernel ``K`` with ``forward(f)[i] = sum_m K[M + m] f[i + m]``.

    ``K`` has odd size ``2M + 1`` and is centred at ``M``.
    """
    ex, ey, _, q = family.template(n_quad)
    return points_kernel(ex / h, ey / h, q)


def correlate(f: GridFunction, K: np.ndarray) -> GridFunction:
    """``out[i] = sum_m K[M + m] f[i + m]`` with zero extension, via FFT."""
    with scipy.fft.set_workers(fft_workers()):
        return f.like(fftconvolve(f.values, K[::-1, ::-1], mode="same"))


def _prepare(f, family, n_quad):
    if not family.closed_form:
        raise NotImplementedError(
            "grid-to-grid transforms need a translation-invariant family; "
            "use forward_general for GeneralLambda"
        )
    n_quad = default_n_quad(family, f.h) if n_quad is None else int(n_quad)
    _check_n_quad(n_quad)
    return n_quad


def _check_chart(f: GridFunction, chart):
    if chart is not None and chart.geometry != f.geometry:
        raise ValueError(
            f"chart grid {chart.geometry} does not match image grid {f.geometry}; "
            "translation charts share the image grid"
        )


def forward(f: GridFunction, family: CurveFamily, w=None, n_quad: int | None = None,
            chart: GridFunction | None = None) -> GridFunction:
    """Transform data ``I_w f`` at every translation on the image grid.

    For the unit circles this is ``sum_k f(c + (cos a_k, sin a_k)) * 2pi/n``.
    """
    _check_chart(f, chart)
    n_quad = _prepare(f, family, n_quad)
    w = _weight(w)
    if not w.is_unit:
        return forward_direct(f, family, w, n_quad)
    return correlate(f, stencil(family, f.h, n_quad))


def adjoint(g: GridFunction, family: CurveFamily, w=None, n_quad: int | None = None) -> GridFunction:
    """Backprojection ``I_w^* g(y) = sum_k w(y, theta_k) g(y - e_k) q_k``."""
    n_quad = _prepare(g, family, n_quad)
    w = _weight(w)
    if not w.is_unit:
        return adjoint_direct(g, family, w, n_quad)
    return correlate(g, stencil(family, g.h, n_quad)[::-1, ::-1])


def forward_direct(f: GridFunction, family: CurveFamily, w=None, n_quad: int | None = None) -> GridFunction:
    """Node-by-node shifted bilinear sums; reference path and weighted transforms."""
    n_quad = _prepare(f, family, n_quad)
    w = _weight(w)
    ex, ey, ang, q = family.template(n_quad)
    X, Y = f.coords()
    out = np.zeros_like(f.values)
    for exk, eyk, ak, qk in zip(ex, ey, ang, q):
        wk = qk if w.is_unit else qk * w(X + exk, Y + eyk, ak)
        out += wk * shift_sample(f, exk, eyk)
    return f.like(out)


def adjoint_direct(g: GridFunction, family: CurveFamily, w=None, n_quad: int | None = None) -> GridFunction:
    n_quad = _prepare(g, family, n_quad)
    w = _weight(w)
    ex, ey, ang, q = family.template(n_quad)
    X, Y = g.coords()
    out = np.zeros_like(g.values)
    for exk, eyk, ak, qk in zip(ex, ey, ang, q):
        wk = qk if w.is_unit else qk * w(X, Y, ak)
        out += wk * shift_sample(g, -exk, -eyk)
    return g.like(out)


def forward_general(f: GridFunction, family: GeneralLambda, ys, etas, t_span=(0.0, 2 * math.pi),
                    n_quad: int = 360, chart: Chart = Chart(), w=None) -> np.ndarray:
    """Transform over curves of a general family, charted by a transversal line.

    Each curve leaves ``chart.point(y)`` with angle ``eta`` and is integrated
    over arc length ``t_span``.  Returns data of shape ``(len(etas), len(ys))``.
    """
    _check_n_quad(n_quad)
    w = _weight(w)
    ys = np.asarray(ys, dtype=float)
    etas = np.asarray(etas, dtype=float)
    E, Yc = np.meshgrid(etas, ys, indexing="ij")
    P, d = chart.point(Yc[..., None])
    px, py = P[..., 0], P[..., 1]
    t_nodes = np.linspace(t_span[0], t_span[1], n_quad)
    dt = t_nodes[1] - t_nodes[0]
    trap = np.full(n_quad, dt)
    trap[0] *= 0.5
    trap[-1] *= 0.5
    total = np.zeros_like(px)
    # walk outwards from t = 0 in both directions so each node is reached once
    state0 = (px, py, E)
    for direction in (1, -1):
        nodes = [k for k in range(n_quad) if (t_nodes[k] >= 0) == (direction == 1)]
        if direction == -1:
            nodes = nodes[::-1]
        x, y, th = state0
        t_prev = 0.0
        for k in nodes:
            step = t_nodes[k] - t_prev
            if step != 0.0:
                x, y, th = rk4_curve(family, x, y, th, np.full_like(x, step), family.dt)
            t_prev = t_nodes[k]
            total += trap[k] * w(x, y, th) * bilinear_sample(f, x, y)
    return total
