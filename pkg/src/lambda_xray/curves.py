"""Families of plane curves, the exponential map and its Jacobian.

Every family is described by its signed curvature ``lam(x, y, theta)``:
a unit-speed member solves ``x' = (cos theta, sin theta)``,
``theta' = lam(x, theta)``.  Angles are always the direction of travel.

The three closed-form families are the unit circles, translates of a fixed
ellipse and translates of an exponential spiral arc.  Their closed forms are
written in each family's *native* parameter (angle for the circle, ellipse
parameter for the ellipse, polar angle for the spiral), which is also the
parameter used by :func:`exp_map` and :func:`exp_jacobian_det`.  A family with
``orientation=-1`` is the mirror image of the positive one under
``(x, y) -> (x, -y)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ChartError, NumericalError

__all__ = [
    "PhasePoint",
    "CurveFamily",
    "UnitCircle",
    "Ellipse",
    "Spiral",
    "GeneralLambda",
    "ConjugateLocus",
    "eval_curve",
    "exp_map",
    "exp_jacobian_det",
    "conjugate_locus",
    "rk4_curve",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhasePoint:
    """A point of the unit circle bundle: position and direction angle."""

    x: float
    y: float
    angle: float

    def __post_init__(self):
        object.__setattr__(self, "angle", float(self.angle) % TWO_PI)

    @property
    def position(self):
        return np.array([self.x, self.y])


class CurveFamily:
    """Base class; subclasses provide the positive-orientation formulas."""

    orientation: int = 1
    #: default search horizon (native parameter) for conjugate points
    t_max_default: float = TWO_PI

    def _check_orientation(self):
        if self.orientation not in (1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {self.orientation}")

    # --- positive-orientation hooks -------------------------------------
    def _lam(self, x, y, theta):
        raise NotImplementedError

    def _rate(self, x, y, theta):
        """d(native parameter)/d(arc length)."""
        return np.ones_like(np.asarray(theta, dtype=float) + 0.0 * np.asarray(x, dtype=float))

    def _eval(self, px, py, theta, t):
        raise NotImplementedError

    def _det(self, theta, t):
        raise NotImplementedError

    def _chart_angle(self, theta):
        return theta % TWO_PI

    def _in_chart(self, theta):
        return np.ones_like(np.asarray(theta, dtype=bool))

    # --- public, orientation aware ----------------------------------------
    @property
    def closed_form(self) -> bool:
        return True

    def curvature(self, x, y, theta):
        """Signed curvature ``lam`` at position ``(x, y)`` heading ``theta``."""
        if self.orientation == 1:
            return self._lam(x, y, theta)
        return -self._lam(x, -np.asarray(y), -np.asarray(theta))

    def native_rate(self, x, y, theta):
        if self.orientation == 1:
            return self._rate(x, y, theta)
        return self._rate(x, -np.asarray(y), -np.asarray(theta))

    def chart_angle(self, theta):
        """Representative of ``theta`` inside the family's angle chart."""
        if self.orientation == 1:
            return self._chart_angle(theta)
        return -self._chart_angle(-theta)

    def in_chart(self, theta):
        if self.orientation == 1:
            return self._in_chart(theta)
        return self._in_chart(-np.asarray(theta))

    def evaluate(self, px, py, theta, t):
        """Closed-form position and tangent angle after native time ``t``."""
        if self.orientation == 1:
            return self._eval(px, py, theta, t)
        x, y, ang = self._eval(px, -py, -theta, t)
        return x, -y, -ang

    def jacobian_det(self, theta, t):
        if self.orientation == 1:
            return self._det(theta, t)
        return self._det(-theta, t)

    def template(self, n_quad: int):
        """Quadrature nodes of the family's reference curve.

        Returns ``(ex, ey, direction, weights)``: offsets from the chart point,
        tangent angles and arc-length quadrature weights.  The data chart of
        every closed-form family is its translation vector.
        """
        ex, ey, ang, wts = self._template(n_quad)
        if self.orientation == -1:
            ey, ang = -ey, -ang
        return ex, ey, ang, wts

    def _template(self, n_quad):
        raise NotImplementedError

    def curve_length(self) -> float:
        _, _, _, w = self.template(4096)
        return float(np.sum(w))


@dataclass(frozen=True)
class UnitCircle(CurveFamily):
    """Unit circles traversed counter-clockwise (``orientation=+1``)."""

    orientation: int = 1

    def __post_init__(self):
        self._check_orientation()

    def _lam(self, x, y, theta):
        return np.ones(np.broadcast(np.asarray(x), np.asarray(y), np.asarray(theta)).shape)

    def _eval(self, px, py, theta, t):
        x = px + np.sin(theta + t) - np.sin(theta)
        y = py - np.cos(theta + t) + np.cos(theta)
        return x, y, theta + t

    def _det(self, theta, t):
        return np.sin(t) + 0.0 * theta

    def _template(self, n_quad):
        alpha = TWO_PI * np.arange(n_quad) / n_quad
        w = np.full(n_quad, TWO_PI / n_quad)
        return np.cos(alpha), np.sin(alpha), alpha + 0.5 * math.pi, w


@dataclass(frozen=True)
class Ellipse(CurveFamily):
    """Translates of the ellipse ``(a cos s, b sin s)``, counter-clockwise."""

    a: float = 2.0
    b: float = 1.0
    orientation: int = 1

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"ellipse axes must be positive, got a={self.a}, b={self.b}")
        self._check_orientation()

    def start_parameter(self, theta):
        """Ellipse parameter ``t0`` at which the tangent points along ``theta``."""
        return np.arctan2(-self.b * np.cos(theta), self.a * np.sin(theta))

    def dt0_dtheta(self, theta):
        a, b = self.a, self.b
        return a * b / (b**2 * np.cos(theta) ** 2 + a**2 * np.sin(theta) ** 2)

    def _speed(self, theta):
        a, b = self.a, self.b
        return a * b / np.sqrt(b**2 * np.cos(theta) ** 2 + a**2 * np.sin(theta) ** 2)

    def _lam(self, x, y, theta):
        a, b = self.a, self.b
        q = b**2 * np.cos(theta) ** 2 + a**2 * np.sin(theta) ** 2
        return q**1.5 / (a * b) ** 2 + 0.0 * np.asarray(x) + 0.0 * np.asarray(y)

    def _rate(self, x, y, theta):
        return 1.0 / self._speed(theta) + 0.0 * np.asarray(x)

    def _eval(self, px, py, theta, t):
        a, b = self.a, self.b
        t0 = self.start_parameter(theta)
        x = px + a * np.cos(t + t0) - a * np.cos(t0)
        y = py + b * np.sin(t + t0) - b * np.sin(t0)
        ang = np.arctan2(b * np.cos(t + t0), -a * np.sin(t + t0))
        return x, y, ang

    def _det(self, theta, t):
        return self.dt0_dtheta(theta) * self.a * self.b * np.sin(t)

    def _template(self, n_quad):
        s = TWO_PI * np.arange(n_quad) / n_quad
        a, b = self.a, self.b
        speed = np.hypot(a * np.sin(s), b * np.cos(s))
        ang = np.arctan2(b * np.cos(s), -a * np.sin(s))
        return a * np.cos(s), b * np.sin(s), ang, speed * TWO_PI / n_quad


SPIRAL_CHART = (-0.25 * math.pi, 1.75 * math.pi)


@dataclass(frozen=True)
class Spiral(CurveFamily):
    """Translates of the exponential spiral arc ``e^{a s}(cos(s - phi), sin(s - phi))``.

    The arc is restricted to ``s`` in ``(-pi/4, 7pi/4)``; tangent angle equals
    ``s``, so both the start angle and the end angle of every evaluated
    segment must stay inside that chart.
    """

    a: float = -0.25
    orientation: int = 1
    t_max_default: float = 1.5 * math.pi

    def __post_init__(self):
        if self.a == 0 or not np.isfinite(self.a):
            raise ValueError("spiral growth rate a must be finite and nonzero")
        self._check_orientation()

    @property
    def phi(self) -> float:
        return math.atan2(1.0, self.a)

    @property
    def _root(self) -> float:
        return math.sqrt(self.a**2 + 1.0)

    def _chart_angle(self, theta):
        lo = SPIRAL_CHART[0]
        return (np.asarray(theta) - lo) % TWO_PI + lo

    def _in_chart(self, theta):
        theta = np.asarray(theta)
        return (theta > SPIRAL_CHART[0]) & (theta < SPIRAL_CHART[1])

    def _lam(self, x, y, theta):
        return np.exp(-self.a * np.asarray(theta)) / self._root + 0.0 * np.asarray(x)

    def _rate(self, x, y, theta):
        return self._lam(x, y, theta)

    def _point(self, s):
        return np.exp(self.a * s) * np.cos(s - self.phi), np.exp(self.a * s) * np.sin(s - self.phi)

    def _eval(self, px, py, theta, t):
        theta = self._chart_angle(theta)
        end = theta + t
        if not (np.all(self._in_chart(theta)) and np.all(self._in_chart(end))):
            raise ChartError(
                f"spiral segment leaves the chart (-pi/4, 7pi/4): start {theta}, end {end}"
            )
        x1, y1 = self._point(end)
        x0, y0 = self._point(theta)
        return px + x1 - x0, py + y1 - y0, end

    def _det(self, theta, t):
        theta = self._chart_angle(theta)
        return (1.0 + self.a**2) * np.exp(self.a * (t + 2.0 * theta)) * np.sin(t)

    def _template(self, n_quad):
        s = np.linspace(SPIRAL_CHART[0], SPIRAL_CHART[1], n_quad)
        ds = s[1] - s[0]
        x, y = self._point(s)
        x0, y0 = self._point(0.0)
        w = np.full(n_quad, ds) * np.exp(self.a * s) * self._root
        w[0] *= 0.5
        w[-1] *= 0.5
        return x - x0, y - y0, s, w


@dataclass(frozen=True)
class GeneralLambda(CurveFamily):
    """Curves generated by an arbitrary curvature field ``lam(x, y, theta)``.

    ``lam`` must accept numpy arrays and broadcast.  Curves are integrated with
    classical RK4 in arc length at fixed step ``dt``.
    """

    lam: Callable = field(default=None)
    orientation: int = 1
    dt: float = 1e-3
    h_fd: float = 1e-4
    t_max_default: float = TWO_PI

    def __post_init__(self):
        if self.lam is None or not callable(self.lam):
            raise ValueError("GeneralLambda needs a callable lam(x, y, theta)")
        if not self.dt > 0:
            raise ValueError("RK4 step dt must be positive")
        self._check_orientation()

    @property
    def closed_form(self) -> bool:
        return False

    def curvature(self, x, y, theta):
        val = np.asarray(self.lam(x, y, theta), dtype=float)
        if not np.all(np.isfinite(val)):
            raise NumericalError("curvature field returned a non-finite value")
        return val if self.orientation == 1 else -val

    def native_rate(self, x, y, theta):
        return np.ones(np.broadcast(np.asarray(x), np.asarray(theta)).shape)

    def chart_angle(self, theta):
        return theta % TWO_PI

    def in_chart(self, theta):
        return np.ones_like(np.asarray(theta, dtype=bool))

    def evaluate(self, px, py, theta, t):
        return rk4_curve(self, px, py, theta, t, self.dt)

    def jacobian_det(self, theta, t):
        raise NotImplementedError("use exp_jacobian_det, which needs the base point")

    def template(self, n_quad):
        raise NotImplementedError("GeneralLambda has no translation-invariant template")


def rk4_curve(family: CurveFamily, px, py, theta, t, dt=1e-3):
    """Integrate ``x' = (cos theta, sin theta), theta' = lam`` over arc length ``t``.

    Uses ``ceil(|t|/dt)`` equal RK4 steps; works elementwise on arrays.
    """
    px, py, theta, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (px, py, theta, t)))
    n = int(math.ceil(np.max(np.abs(t)) / dt)) if np.any(t != 0) else 0
    if n == 0:
        return px.copy(), py.copy(), theta.copy()
    step = t / n
    x, y, th = px.copy(), py.copy(), theta.copy()

    def rhs(x, y, th):
        return np.cos(th), np.sin(th), family.curvature(x, y, th)

    for _ in range(n):
        k1 = rhs(x, y, th)
        k2 = rhs(x + 0.5 * step * k1[0], y + 0.5 * step * k1[1], th + 0.5 * step * k1[2])
        k3 = rhs(x + 0.5 * step * k2[0], y + 0.5 * step * k2[1], th + 0.5 * step * k2[2])
        k4 = rhs(x + step * k3[0], y + step * k3[1], th + step * k3[2])
        x = x + step / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        y = y + step / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        th = th + step / 6.0 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return x, y, th


def eval_curve(family: CurveFamily, start: PhasePoint, t: float):
    """Position and tangent angle of the family member through ``start`` after time ``t``.

    Returns ``(position, angle)`` with the angle reduced to ``[0, 2pi)``.
    """
    if t == 0:
        return start.position, start.angle
    x, y, ang = family.evaluate(start.x, start.y, start.angle, t)
    return np.array([float(x), float(y)]), float(ang) % TWO_PI


def exp_map(family: CurveFamily, p, theta: float, t: float) -> np.ndarray:
    """``exp_p(t, theta)``: position reached from ``p`` heading ``theta`` after time ``t``."""
    if t == 0:
        return np.array([float(p[0]), float(p[1])])
    x, y, _ = family.evaluate(p[0], p[1], theta, t)
    return np.array([float(x), float(y)])


def exp_jacobian_det(family: CurveFamily, p, theta: float, t: float, h_fd: float | None = None) -> float:
    """Determinant of ``d exp_p / d(t, theta)``; its zeros are conjugate times.

    Closed form for the built-in families, central differences of
    :func:`exp_map` with step ``h_fd`` (default ``family.h_fd``) otherwise.
    """
    if family.closed_form and h_fd is None:
        return float(family.jacobian_det(theta, t))
    h = h_fd if h_fd is not None else getattr(family, "h_fd", 1e-4)
    if not h > 1e-12 * max(1.0, abs(t), abs(theta)):
        raise NumericalError(f"finite-difference step {h} underflows at t={t}, theta={theta}")
    d_t = (exp_map(family, p, theta, t + h) - exp_map(family, p, theta, t - h)) / (2 * h)
    d_th = (exp_map(family, p, theta + h, t) - exp_map(family, p, theta - h, t)) / (2 * h)
    return float(d_t[0] * d_th[1] - d_t[1] * d_th[0])


@dataclass
class ConjugateLocus:
    """First conjugate point along each sampled ray; NaN where none was found."""

    thetas: np.ndarray
    times: np.ndarray
    points: np.ndarray

    @property
    def found(self) -> np.ndarray:
        return np.isfinite(self.times)


def _bisect(fun, lo, hi, tol=1e-12):
    flo = fun(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _sample_angles(family: CurveFamily, n_angles: int) -> np.ndarray:
    offset = 0.0
    if isinstance(family, Spiral):
        offset = SPIRAL_CHART[0] if family.orientation == 1 else -SPIRAL_CHART[1]
    return offset + TWO_PI * (np.arange(n_angles) + 0.5) / n_angles


def conjugate_locus(family: CurveFamily, p, n_angles: int = 64, t_max: float | None = None,
                    n_scan: int = 256) -> ConjugateLocus:
    """Sample the conjugate locus of ``p``.

    For each of ``n_angles`` directions the first positive zero of the
    exponential-map Jacobian in ``(0, t_max]`` is bracketed on a scan grid and
    refined by bisection, then mapped through :func:`exp_map`.  Families
    without closed forms use the Jacobi-field route.
    """
    if n_angles < 8:
        raise ValueError("conjugate_locus needs n_angles >= 8")
    t_max = family.t_max_default if t_max is None else t_max
    thetas = _sample_angles(family, n_angles)
    times = np.full(n_angles, np.nan)
    points = np.full((n_angles, 2), np.nan)

    if not family.closed_form:
        from .jacobi import first_conjugate_time

        for i, th in enumerate(thetas):
            ts = first_conjugate_time(family, PhasePoint(p[0], p[1], th), t_max)
            if ts is not None:
                times[i] = ts
                points[i] = exp_map(family, p, th, ts)
        return ConjugateLocus(thetas, times, points)

    for i, th in enumerate(thetas):
        th_c = family.chart_angle(th)
        horizon = t_max
        if isinstance(family, Spiral):
            # the end angle must stay inside the chart
            room = (SPIRAL_CHART[1] - th_c) if family.orientation == 1 else (th_c + SPIRAL_CHART[1])
            horizon = min(t_max, room - 1e-9)
        if horizon <= 0:
            continue
        grid = np.linspace(horizon / n_scan, horizon, n_scan)
        vals = family.jacobian_det(th_c, grid)
        sign_change = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
        if vals[0] == 0.0:
            root = grid[0]
        elif sign_change.size:
            k = sign_change[0]
            root = _bisect(lambda s: float(family.jacobian_det(th_c, s)), grid[k], grid[k + 1])
        else:
            continue
        times[i] = root
        points[i] = exp_map(family, p, th_c, root)
    return ConjugateLocus(thetas, times, points)
