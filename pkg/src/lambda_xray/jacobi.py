"""Jacobi fields along curves of a family.

The linearised flow in the moving frame ``{F, H, V}`` obeys::

    x' = lam * y
    y' = z
    z' = -(K - H(lam) + lam**2) * y + V(lam) * z

with ``K = 0`` (flat metric), ``H(lam) = v_perp . grad_x lam`` and
``V(lam) = d lam / d theta``.  ``y`` is the normal component of a Jacobi
field, so its zeros after ``t = 0`` (with ``y(0) = 0``) are conjugate points.

All integration is classical RK4 in arc length; the curve itself and the
family's native parameter ``tau`` are integrated alongside, so results can be
reported in the native parameter of each family (arc length for circles and
general fields, ellipse parameter for ellipses, polar angle for spirals).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import CurveFamily, PhasePoint
from .errors import ChartError, NumericalError

__all__ = [
    "FrameCoefficients",
    "JacobiSolution",
    "ProjectionPair",
    "Chart",
    "frame_coefficients",
    "solve_frame_ode",
    "solve_jacobi_scalar",
    "first_conjugate_time",
    "first_conjugate_times",
    "projection_pair",
    "wronskian",
]

FD_STEP = 1e-4
BISECT_TOL = 1e-10


@dataclass
class FrameCoefficients:
    K: np.ndarray
    H_lam: np.ndarray
    V_lam: np.ndarray
    lam: np.ndarray


def frame_coefficients(family: CurveFamily, x, y, theta, step: float = FD_STEP) -> FrameCoefficients:
    """Curvature and its horizontal/vertical derivatives by central differences."""
    x, y, theta = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, theta)))
    n = x.shape
    # one batched call: centre, +-x, +-y, +-theta
    X = np.stack([x, x + step, x - step, x, x, x, x])
    Y = np.stack([y, y, y, y + step, y - step, y, y])
    T = np.stack([theta, theta, theta, theta, theta, theta + step, theta - step])
    lam = np.asarray(family.curvature(X, Y, T), dtype=float)
    lam = np.broadcast_to(lam, (7,) + n)
    if not np.all(np.isfinite(lam)):
        raise NumericalError("non-finite curvature encountered along the curve")
    dx = (lam[1] - lam[2]) / (2 * step)
    dy = (lam[3] - lam[4]) / (2 * step)
    dth = (lam[5] - lam[6]) / (2 * step)
    h_lam = -np.sin(theta) * dx + np.cos(theta) * dy
    return FrameCoefficients(np.zeros(n), h_lam, dth, lam[0].copy())


def _rhs(family, s):
    X, Y, T, tau, x, y, z = s
    c = frame_coefficients(family, X, Y, T)
    rate = np.asarray(family.native_rate(X, Y, T), dtype=float)
    return (
        np.cos(T),
        np.sin(T),
        c.lam,
        np.broadcast_to(rate, X.shape),
        c.lam * y,
        z,
        -(c.K - c.H_lam + c.lam**2) * y + c.V_lam * z,
    )


def _rk4_step(family, s, h):
    k1 = _rhs(family, s)
    k2 = _rhs(family, tuple(a + 0.5 * h * k for a, k in zip(s, k1)))
    k3 = _rhs(family, tuple(a + 0.5 * h * k for a, k in zip(s, k2)))
    k4 = _rhs(family, tuple(a + h * k for a, k in zip(s, k3)))
    return tuple(a + h / 6.0 * (p + 2 * q + 2 * r + w) for a, p, q, r, w in zip(s, k1, k2, k3, k4))


def _initial_state(family, starts, init):
    X = np.array([p.x for p in starts], dtype=float)
    Y = np.array([p.y for p in starts], dtype=float)
    T = np.array([family.chart_angle(p.angle) for p in starts], dtype=float)
    init = np.broadcast_to(np.asarray(init, dtype=float), (len(starts), 3))
    return (X, Y, T, np.zeros_like(X), init[:, 0].copy(), init[:, 1].copy(), init[:, 2].copy())


@dataclass
class JacobiSolution:
    """Samples of the frame components along one curve.

    ``times`` is arc length, ``tau`` the family's native parameter; ``theta``
    and ``curve`` describe the underlying curve.
    """

    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    tau: np.ndarray
    curve: np.ndarray
    theta: np.ndarray

    def coefficients(self, family: CurveFamily) -> FrameCoefficients:
        return frame_coefficients(family, self.curve[:, 0], self.curve[:, 1], self.theta)


def _integrate(family, starts, init, t_end, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    n = int(math.ceil(t_end / dt - 1e-9))
    h = t_end / n
    s = _initial_state(family, starts, init)
    out = [s]
    for _ in range(n):
        s = _rk4_step(family, s, h)
        if not np.all(family.in_chart(s[2])):
            raise ChartError("curve left the family's angle chart during integration")
        if not all(np.all(np.isfinite(c)) for c in s):
            raise NumericalError("non-finite state in frame ODE")
        out.append(s)
    times = h * np.arange(n + 1)
    comps = [np.array([st[i] for st in out]) for i in range(7)]
    return times, comps


def solve_frame_ode(family: CurveFamily, start: PhasePoint, init=(0.0, 0.0, 1.0),
                    t_end: float = 2 * math.pi, dt: float = 1e-3) -> JacobiSolution:
    """RK4 solution of the frame ODE with initial components ``init = (x0, y0, z0)``."""
    times, c = _integrate(family, [start], [init], t_end, dt)
    X, Y, T, tau, x, y, z = (a[:, 0] for a in c)
    return JacobiSolution(times, x, y, z, tau, np.column_stack([X, Y]), T)


def solve_jacobi_scalar(family: CurveFamily, start: PhasePoint, y0: float, ydot0: float,
                        t_end: float = 2 * math.pi, dt: float = 1e-3) -> JacobiSolution:
    """Solve ``y'' - V(lam) y' + (K - H(lam) + lam^2) y = 0``; see ``.y`` and ``.z = y'``."""
    return solve_frame_ode(family, start, (0.0, y0, ydot0), t_end, dt)


def first_conjugate_times(family: CurveFamily, starts, t_max: float, dt: float = 1e-3,
                          max_steps: int = 10_000_000):
    """Vectorised :func:`first_conjugate_time` over several start points.

    Returns an array of native conjugate times with NaN where none exists in
    ``(0, t_max]`` (or the curve leaves the chart first).
    """
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    starts = list(starts)
    m = len(starts)
    s = _initial_state(family, starts, (0.0, 0.0, 1.0))
    result = np.full(m, np.nan)
    active = np.ones(m, dtype=bool)
    for _ in range(max_steps):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        cur = tuple(a[idx] for a in s)
        nxt = _rk4_step(family, cur, dt)
        # rays that leave the chart or the horizon stop without a root
        left = ~family.in_chart(nxt[2])
        crossed = (nxt[5] <= 0.0) & ~left
        for j, i in enumerate(idx):
            if crossed[j]:
                one = tuple(a[j : j + 1] for a in cur)

                def y_at(d, one=one):
                    return _rk4_step(family, one, d)[5][0]

                lo, hi = 0.0, dt
                while hi - lo > BISECT_TOL:
                    mid = 0.5 * (lo + hi)
                    if y_at(mid) > 0.0:
                        lo = mid
                    else:
                        hi = mid
                d = 0.5 * (lo + hi)
                tau_star = float(_rk4_step(family, one, d)[3][0])
                if tau_star <= t_max * (1 + 1e-12):
                    result[i] = tau_star
                active[i] = False
            elif left[j]:
                active[i] = False
        for k in range(7):
            s[k][idx] = nxt[k]
        over = active & (s[3] >= t_max)
        active &= ~over
    return result


def first_conjugate_time(family: CurveFamily, start: PhasePoint, t_max: float,
                         dt: float = 1e-3) -> float | None:
    """Smallest native time in ``(0, t_max]`` at which the Jacobi field with
    ``y(0) = 0, y'(0) = 1`` vanishes again, or ``None``."""
    t = first_conjugate_times(family, [start], t_max, dt)[0]
    return None if np.isnan(t) else float(t)


@dataclass(frozen=True)
class Chart:
    """Straight transversal used to parameterise curves: ``origin + y * direction``.

    The default is the line ``x^1 = 0``.
    """

    origin: tuple = (0.0, 0.0)
    direction: tuple = (0.0, 1.0)

    def point(self, y):
        d = np.asarray(self.direction, dtype=float)
        d = d / np.linalg.norm(d)
        return np.asarray(self.origin, dtype=float) + y * d, d


@dataclass
class ProjectionPair:
    """Normal projections ``a1`` (chart variation) and ``b1`` (angle variation)."""

    times: np.ndarray
    a1: np.ndarray
    b1: np.ndarray
    a1dot: np.ndarray | None = None
    b1dot: np.ndarray | None = None
    tau: np.ndarray | None = None
    theta: np.ndarray | None = None
    v_lam: np.ndarray | None = None


def projection_pair(family: CurveFamily, y: float, eta: float, chart: Chart = Chart(),
                    t_end: float = 2 * math.pi, dt: float = 1e-3) -> ProjectionPair:
    """Solve for ``a1, b1`` along the curve leaving ``chart.point(y)`` with angle ``eta``.

    Initial data: ``b1(0) = 0, b1'(0) = 1``; ``a1(0) = <v_perp, e>`` and
    ``a1'(0) = -lam <v, e>`` where ``e`` is the chart direction and ``v`` the
    initial tangent (the normal part of a pure translation of the start point).
    """
    p, e = chart.point(y)
    th = family.chart_angle(eta)
    v = np.array([math.cos(th), math.sin(th)])
    v_perp = np.array([-v[1], v[0]])
    a0 = float(v_perp @ e)
    if abs(a0) < 1e-12:
        raise NumericalError("curve is tangent to the chart at the start point")
    lam0 = float(np.asarray(family.curvature(p[0], p[1], th)))
    adot0 = -lam0 * float(v @ e)
    start = PhasePoint(p[0], p[1], eta)
    times, c = _integrate(family, [start, start], [(0.0, a0, adot0), (0.0, 0.0, 1.0)], t_end, dt)
    X, Y, T, tau = c[0][:, 0], c[1][:, 0], c[2][:, 0], c[3][:, 0]
    coeffs = frame_coefficients(family, X, Y, T)
    return ProjectionPair(
        times=times,
        a1=c[5][:, 0],
        b1=c[5][:, 1],
        a1dot=c[6][:, 0],
        b1dot=c[6][:, 1],
        tau=tau,
        theta=T,
        v_lam=coeffs.V_lam,
    )


def wronskian(pair: ProjectionPair) -> np.ndarray:
    """``W = a1' b1 - b1' a1``; derivatives by central differences when not stored."""
    a1dot = pair.a1dot if pair.a1dot is not None else np.gradient(pair.a1, pair.times)
    b1dot = pair.b1dot if pair.b1dot is not None else np.gradient(pair.b1, pair.times)
    return a1dot * pair.b1 - b1dot * pair.a1
