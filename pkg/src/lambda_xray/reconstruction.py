"""Backprojection, the square-root Laplacian filter and Landweber iteration."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .curves import CurveFamily, UnitCircle
from .errors import NumericalError
from .grid import GridFunction
from .transform import adjoint, correlate, default_n_quad, fft_workers, forward, points_kernel

__all__ = [
    "LandweberConfig",
    "ReconstructionReport",
    "sqrt_laplacian_filter",
    "backproject",
    "filtered_backproject",
    "analytic_backprojection",
    "cutoff_profile",
    "smooth_cutoff",
    "estimate_operator_norm",
    "landweber",
    "relative_error",
    "normal_operators",
    "working_grid",
]

log = logging.getLogger(__name__)


def sqrt_laplacian_filter(f: GridFunction) -> GridFunction:
    """Apply ``sqrt(-Laplacian) / (4 pi)`` as a Fourier multiplier.

    The grid is zero-padded to twice its size along each axis before the
    periodic transform, which keeps compactly supported inputs from wrapping.
    """
    ny, nx = f.values.shape
    py, px = 2 * ny, 2 * nx
    with scipy.fft.set_workers(fft_workers()):
        spec = scipy.fft.rfft2(f.values, s=(py, px))
        ky = 2 * np.pi * scipy.fft.fftfreq(py, d=f.h)
        kx = 2 * np.pi * scipy.fft.rfftfreq(px, d=f.h)
        mult = np.hypot(ky[:, None], kx[None, :]) / (4 * np.pi)
        out = scipy.fft.irfft2(spec * mult, s=(py, px))
    return f.like(out[:ny, :nx])


def backproject(f: GridFunction, family: CurveFamily = UnitCircle(), w=None,
                n_quad: int | None = None) -> GridFunction:
    """Normal operator ``I^* I f``."""
    return adjoint(forward(f, family, w, n_quad), family, w, n_quad)


def filtered_backproject(f: GridFunction, family: CurveFamily = UnitCircle(), w=None,
                         n_quad: int | None = None) -> GridFunction:
    """``Lambda I^* I f`` with ``Lambda = sqrt(-Laplacian)/(4 pi)``."""
    return sqrt_laplacian_filter(backproject(f, family, w, n_quad))


def analytic_backprojection(f: GridFunction, eps: float = 0.0, n_radial: int = 64,
                            n_angular: int | None = None) -> GridFunction:
    """Closed-form normal operator of the unit-circle transform.

    Evaluates ``int_0^{2-eps} int_0^{2pi} 4/sqrt(4 - r^2) f(x + r(cos a, sin a)) da dr``
    after the substitution ``r = 2 sin(beta)``, which turns the kernel into the
    constant 4 on ``beta in [0, arcsin(1 - eps/2)]``.  Gauss-Legendre in
    ``beta``, periodic trapezoid in ``a``, bilinear interpolation of ``f``.
    """
    if not 0.0 <= eps < 2.0:
        raise ValueError("radial truncation eps must lie in [0, 2)")
    if n_angular is None:
        n_angular = max(256, int(math.ceil(4 * np.pi / f.h)))
    beta_max = math.asin(1.0 - 0.5 * eps)
    nodes, weights = np.polynomial.legendre.leggauss(n_radial)
    beta = 0.5 * beta_max * (nodes + 1.0)
    wb = 0.5 * beta_max * weights
    alpha = 2 * np.pi * np.arange(n_angular) / n_angular
    r = 2.0 * np.sin(beta)
    R, A = np.meshgrid(r, alpha, indexing="ij")
    W = np.broadcast_to((4.0 * wb * 2 * np.pi / n_angular)[:, None], R.shape)
    K = points_kernel(R * np.cos(A) / f.h, R * np.sin(A) / f.h, W)
    return correlate(f, K)


def cutoff_profile(r, R: float, delta: float) -> np.ndarray:
    """1 on ``[0, R]``, cosine taper on ``[R, R + delta]``, 0 beyond."""
    if not (R > 0 and delta > 0):
        raise ValueError("cutoff radius and taper width must be positive")
    r = np.asarray(r, dtype=float)
    s = np.clip((r - R) / delta, 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(np.pi * s))


def smooth_cutoff(f: GridFunction, R: float, delta: float, center=(0.0, 0.0)) -> GridFunction:
    """Multiply ``f`` by the radial cutoff centred at ``center``."""
    return f.like(f.values * cutoff_profile(f.radius(center), R, delta))


def estimate_operator_norm(apply, like, n_power: int = 30, seed: int = 0) -> float:
    """Largest eigenvalue of a self-adjoint positive semidefinite operator.

    Power iteration from a seeded random start; returns the final Rayleigh
    quotient.  Pass ``apply = L^* L`` to get ``||L||^2``.  ``like`` is a
    GridFunction (``apply`` maps grids to grids) or an array shape (``apply``
    maps arrays to arrays).
    """
    rng = np.random.default_rng(seed)
    grid_mode = isinstance(like, GridFunction)
    shape = like.values.shape if grid_mode else tuple(like)

    def op(v):
        if grid_mode:
            return apply(like.like(v)).values
        return np.asarray(apply(v), dtype=float)

    x = rng.standard_normal(shape)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max(1, n_power)):
        y = op(x)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # start vector fell in the null space
            x = rng.standard_normal(shape)
            x /= np.linalg.norm(x)
            continue
        lam = float(np.vdot(x, y))
        x = y / ny
    y = op(x)
    return float(np.vdot(x, y)) if np.linalg.norm(y) > 0 else lam


@dataclass
class LandweberConfig:
    """Settings of the Landweber iteration.

    ``step`` is the relaxation parameter (``None``: ``1/||L||^2`` from power
    iteration); ``norm_estimate`` is ``||L||`` if already known.
    """

    step: float | None = None
    n_iter: int = 100
    support_radius: float = 3.0
    taper: float = 0.25
    chi_margin: float = 0.25
    norm_estimate: float | None = None
    record_residuals: bool = True
    n_power: int = 30

    def __post_init__(self):
        if self.step is not None and not self.step > 0:
            raise ValueError("Landweber step must be positive")
        if self.n_iter < 0:
            raise ValueError("n_iter must be >= 0")
        if not (self.support_radius > 0 and self.taper > 0):
            raise ValueError("support radius and taper must be positive")
        if self.norm_estimate is not None:
            if not self.norm_estimate > 0:
                raise ValueError("norm_estimate must be positive")
            if self.step is not None and self.step * self.norm_estimate**2 >= 2:
                raise ValueError(
                    f"step {self.step} is not admissible: step * norm^2 = "
                    f"{self.step * self.norm_estimate**2:.3g} >= 2"
                )


@dataclass
class ReconstructionReport:
    result: GridFunction
    residual_history: list = field(default_factory=list)
    relative_error: float | None = None
    step: float | None = None
    norm_estimate: float | None = None


def _support_extent(family: CurveFamily, h: float, n_quad: int | None) -> float:
    ex, ey, _, _ = family.template(n_quad or default_n_quad(family, h))
    return float(np.max(np.hypot(ex, ey)))


def working_grid(g: GridFunction, cfg: LandweberConfig, family: CurveFamily = UnitCircle(),
                 n_quad: int | None = None) -> tuple[GridFunction, tuple[int, int, int, int]]:
    """Zero-embed ``g`` in a grid large enough for the cut-off operators.

    The square must hold the support of ``chi`` plus one curve extent, so that
    ``I^*I`` and ``Lambda`` are never truncated by the grid boundary on the
    region the cutoffs keep.  Returns the padded grid and the pads
    ``(left, right, bottom, top)`` in cells.
    """
    half = cfg.support_radius + cfg.chi_margin + cfg.taper + _support_extent(family, g.h, n_quad)
    h = g.h
    tol = 1e-9
    left = max(0, int(math.ceil((g.x0 + half) / h - tol)))
    bottom = max(0, int(math.ceil((g.y0 + half) / h - tol)))
    right = max(0, int(math.ceil((half - (g.x0 + (g.nx - 1) * h)) / h - tol)))
    top = max(0, int(math.ceil((half - (g.y0 + (g.ny - 1) * h)) / h - tol)))
    vals = np.pad(g.values, ((bottom, top), (left, right)))
    big = GridFunction(g.nx + left + right, g.ny + bottom + top,
                       g.x0 - left * h, g.y0 - bottom * h, h, vals)
    return big, (left, right, bottom, top)


def _crop(big: GridFunction, like: GridFunction, pads) -> GridFunction:
    left, _, bottom, _ = pads
    return like.like(big.values[bottom : bottom + like.ny, left : left + like.nx])


def normal_operators(like: GridFunction, cfg: LandweberConfig, family: CurveFamily = UnitCircle(),
                     w=None, n_quad: int | None = None):
    """The cut-off operators ``(L, L^*, rhs)`` used by :func:`landweber`.

    ``L = phi Lambda chi I^*I`` acting on functions supported in the disk
    ``D = {|x| <= support_radius}`` (the prior support), its adjoint
    ``L^* = 1_D I^*I chi Lambda phi``, and
    ``rhs(data) = phi Lambda chi I^* data``.  All three live on the grid of
    ``like``; see :func:`working_grid` for a grid on which they are exact.
    """
    r = like.radius()
    phi = cutoff_profile(r, cfg.support_radius, cfg.taper)
    chi = cutoff_profile(r, cfg.support_radius + cfg.chi_margin, cfg.taper)
    dom = (r <= cfg.support_radius).astype(float)

    def N(f):
        return backproject(f, family, w, n_quad)

    def L(f):
        return sqrt_laplacian_filter(N(f * dom) * chi) * phi

    def L_adj(g):
        return N(sqrt_laplacian_filter(g * phi) * chi) * dom

    def rhs(data):
        return sqrt_laplacian_filter(adjoint(data, family, w, n_quad) * chi) * phi

    return L, L_adj, rhs


def landweber(data: GridFunction, cfg: LandweberConfig = LandweberConfig(),
              family: CurveFamily = UnitCircle(), w=None, truth: GridFunction | None = None,
              n_quad: int | None = None) -> ReconstructionReport:
    """Landweber iteration for ``I f = data`` with support constraint.

    Iterates ``f <- f + step L^*(b - L f)`` from ``f0 = step L^* b``, which
    reproduces the truncated Neumann series.  ``residual_history[k]`` is
    ``||L f_k - b||`` for ``k = 0 .. n_iter``.

    The data grid is zero-extended to :func:`working_grid`, so data are
    assumed to vanish off the supplied grid (true for global data of an ``f``
    whose curves all meet the grid).  The result is cropped back.
    """
    big, pads = working_grid(data, cfg, family, n_quad)
    L, L_adj, rhs = normal_operators(big, cfg, family, w, n_quad)
    b = rhs(big)
    norm = cfg.norm_estimate
    if norm is None:
        lam = estimate_operator_norm(lambda v: L_adj(L(v)), big, cfg.n_power)
        norm = math.sqrt(max(lam, 0.0))
        if norm == 0.0:
            raise NumericalError("operator norm estimate vanished")
    step = cfg.step if cfg.step is not None else 1.0 / norm**2
    if step * norm**2 >= 2:
        raise ValueError(f"step {step} not admissible for ||L|| ~ {norm:.4g}")

    f = L_adj(b) * step
    history = []
    for k in range(cfg.n_iter + 1):
        resid = b - L(f)
        rn = resid.norm()
        if not np.isfinite(rn):
            raise NumericalError(f"non-finite residual at iteration {k}")
        history.append(rn)
        if k >= 5 and rn > 10 * history[k - 5]:
            raise NumericalError(
                f"Landweber diverging: residual grew from {history[k - 5]:.3e} to {rn:.3e} "
                f"over 5 iterations (step {step:.3e}, ||L|| ~ {norm:.3e})"
            )
        if k == cfg.n_iter:
            break
        f = f + L_adj(resid) * step
    log.info("landweber: %d iterations, final residual %.3e", cfg.n_iter, history[-1])
    result = _crop(f, data, pads)
    rel = relative_error(result, truth) if truth is not None else None
    return ReconstructionReport(
        result=result,
        residual_history=history if cfg.record_residuals else [],
        relative_error=rel,
        step=step,
        norm_estimate=norm,
    )


def relative_error(a: GridFunction, b: GridFunction) -> float:
    """``||a - b|| / ||b||`` over all samples."""
    if not a.same_geometry(b):
        raise ValueError("relative_error needs grids with identical geometry")
    nb = float(np.linalg.norm(b.values))
    if nb == 0.0:
        raise ValueError("reference grid has zero norm")
    return float(np.linalg.norm(a.values - b.values) / nb)
