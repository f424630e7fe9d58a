"""Conjugate covectors, conjugate chains and artifact masks.

A covector ``(x, xi)`` is stored as a base point, a direction angle ``eta``
with ``xi = mu (cos eta, sin eta)``, and the scale ``mu``.  Two covectors are
conjugate when they sit at conjugate points ``p1 = gamma(t1)``,
``p2 = gamma(t2)`` of one curve and::

    xi1 = mu a1(t2) gamma'_perp(t1),   xi2 = mu a1(t1) gamma'_perp(t2)

where ``a1`` is the normal part of the Jacobi field of a chart variation.  The
ratio ``a1(t1)/a1(t2)`` does not depend on the chart, because any two such
fields differ by a multiple of the field vanishing at both points.

Singularities of ``f`` at one of the covectors produce backprojection
artifacts at the other; for unit circles the partner of ``(p, xi)`` is
``(p +- 2 xi/|xi|, xi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curves import CurveFamily, PhasePoint, Spiral, UnitCircle, exp_map
from .errors import ChartError, NumericalError
from .grid import GridFunction

__all__ = [
    "Covector",
    "ConjugateChain",
    "conjugate_covectors",
    "conjugate_bases",
    "conjugate_chain",
    "artifact_mask",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Covector:
    """``mu (cos eta, sin eta)`` at ``base``; ``mu`` must be nonzero."""

    base: tuple
    eta: float
    mu: float = 1.0

    def __post_init__(self):
        b = tuple(float(v) for v in self.base)
        if len(b) != 2 or not all(np.isfinite(b)):
            raise ValueError(f"covector base must be a finite 2-vector, got {self.base}")
        if not (np.isfinite(self.mu) and self.mu != 0.0):
            raise ValueError("covector scale mu must be finite and nonzero")
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "eta", float(self.eta) % TWO_PI)
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def direction(self) -> np.ndarray:
        return np.array([math.cos(self.eta), math.sin(self.eta)])

    @property
    def vector(self) -> np.ndarray:
        return self.mu * self.direction


def _from_vector(base, v, sign_like: float) -> Covector:
    # keep the sign of mu of the input covector
    s = 1.0 if sign_like > 0 else -1.0
    w = s * np.asarray(v, dtype=float)
    return Covector(tuple(base), math.atan2(w[1], w[0]), s * float(np.hypot(*w)))


def _start_angle(c: Covector, branch: int) -> float:
    """Heading whose normal ``(-sin, cos)`` is ``branch * (cos eta, sin eta)``."""
    return c.eta - branch * 0.5 * math.pi


def _circle_partner(family: UnitCircle, c: Covector, branch: int) -> Covector:
    # orientation -1 circles have their centres on the other side
    step = 2.0 * branch * family.orientation
    base = (c.base[0] + step * math.cos(c.eta), c.base[1] + step * math.sin(c.eta))
    return Covector(base, c.eta, c.mu)


def _conjugate_time(family: CurveFamily, p, theta: float) -> float | None:
    from .jacobi import first_conjugate_time

    if family.closed_form:
        # every built-in family has det proportional to sin t in native time
        th = family.chart_angle(theta)
        if isinstance(family, Spiral):
            end = th + math.pi if family.orientation == 1 else th - math.pi
            if not bool(family.in_chart(end)):
                return None
        return math.pi
    return first_conjugate_time(family, PhasePoint(p[0], p[1], theta), t_max=family.t_max_default)


def _normal(theta: float) -> np.ndarray:
    return np.array([-math.sin(theta), math.cos(theta)])


def _partner(family: CurveFamily, c: Covector, branch: int, a1_route: str):
    if isinstance(family, UnitCircle):
        return _circle_partner(family, c, branch)
    theta1 = _start_angle(c, branch)
    tau = _conjugate_time(family, c.base, theta1)
    if tau is None:
        return None
    try:
        if family.closed_form:
            x, y, theta2 = family.evaluate(c.base[0], c.base[1], family.chart_angle(theta1), tau)
            base2 = (float(x), float(y))
            theta2 = float(theta2)
        else:
            base2, theta2 = None, None
        n1 = _normal(theta1)
        if a1_route == "closed" and family.closed_form:
            # translation charts: a1(t) = <gamma'_perp(t), e> with e = gamma'_perp(t1)
            a1_t1, a1_t2 = 1.0, float(_normal(theta2) @ n1)
        else:
            a1_t1, a1_t2, base2_j, theta2_j = _a1_from_jacobi(family, c.base, theta1, tau)
            if base2 is None:
                base2, theta2 = base2_j, theta2_j
    except ChartError:
        return None
    if abs(a1_t2) < 1e-12:
        raise NumericalError("a1 vanishes at the conjugate point; scale undefined")
    # xi1 = mu a1(t2) n(t1) fixes mu; then xi2 = mu a1(t1) n(t2)
    mu = c.mu * branch / a1_t2
    xi2 = mu * a1_t1 * _normal(theta2)
    return _from_vector(base2, xi2, c.mu)


def _a1_from_jacobi(family, p, theta1, tau, dt=1e-3):
    from .jacobi import Chart, projection_pair

    n1 = _normal(theta1)
    chart = Chart(origin=(float(p[0]), float(p[1])), direction=(float(n1[0]), float(n1[1])))
    if family.closed_form:
        # arc length to the conjugate point from a fine polyline of the closed form
        ts = np.linspace(0.0, tau, 4001)
        x, y, _ = family.evaluate(p[0], p[1], family.chart_angle(theta1), ts)
        t_end = float(np.sum(np.hypot(np.diff(x), np.diff(y)))) * (1 + 1e-5)
    else:
        t_end = float(tau)
    pair = projection_pair(family, 0.0, theta1, chart, t_end=t_end, dt=dt)
    k = int(np.searchsorted(pair.tau, tau))
    k = min(max(k, 1), len(pair.tau) - 1)
    w = (tau - pair.tau[k - 1]) / (pair.tau[k] - pair.tau[k - 1])
    a1_t2 = (1 - w) * pair.a1[k - 1] + w * pair.a1[k]
    theta2 = (1 - w) * pair.theta[k - 1] + w * pair.theta[k]
    s2 = pair.times[k - 1] + w * (pair.times[k] - pair.times[k - 1])
    base2 = tuple(float(v) for v in exp_map(family, p, theta1, s2)) if not family.closed_form else None
    return float(pair.a1[0]), float(a1_t2), base2, float(theta2)


def conjugate_covectors(family: CurveFamily, c: Covector, a1_route: str = "jacobi") -> list:
    """Covectors conjugate to ``c`` along the two curves conormal to it.

    Returns up to two covectors, ordered by branch: first the curve whose
    normal at the base is ``+xi``, then the one with normal ``-xi``.  A branch
    is dropped when its curve has no conjugate point inside the family's chart.

    ``a1_route`` selects how ``a1`` is obtained for non-circle families:
    ``"jacobi"`` integrates the projection pair, ``"closed"`` uses the exact
    translation-chart formula (closed-form families only).  Unit circles always
    use the exact map ``p -> p +- 2 xi/|xi|``.
    """
    if a1_route not in ("jacobi", "closed"):
        raise ValueError(f"unknown a1_route {a1_route!r}")
    out = []
    for branch in (1, -1):
        p = _partner(family, c, branch, a1_route)
        if p is not None:
            out.append(p)
    return out


def conjugate_bases(family: CurveFamily, c: Covector) -> list:
    """Base points of the conjugate covectors of ``c`` (no scale bookkeeping)."""
    if isinstance(family, UnitCircle):
        return [_circle_partner(family, c, b).base for b in (1, -1)]
    out = []
    for branch in (1, -1):
        theta1 = _start_angle(c, branch)
        tau = _conjugate_time(family, c.base, theta1)
        if tau is None:
            continue
        try:
            out.append(tuple(float(v) for v in exp_map(family, c.base, family.chart_angle(theta1), tau)))
        except ChartError:
            continue
    return out


@dataclass
class ConjugateChain:
    """Successive conjugate covectors ``(x_k, xi^k)`` for ``k_minus <= k <= k_plus``.

    ``entries`` maps ``k`` to a :class:`Covector`.  A run in one direction
    stops at the first base outside the disk (that entry is kept and the
    escape flag set), at ``k_max``, or when no further conjugate point exists.
    """

    entries: dict = field(default_factory=dict)
    escaped_positive: bool = False
    escaped_negative: bool = False
    radius: float = 3.0

    @property
    def k_range(self):
        ks = sorted(self.entries)
        return ks[0], ks[-1]

    def bases(self) -> np.ndarray:
        return np.array([self.entries[k].base for k in sorted(self.entries)])

    def rows(self):
        """``(k, x, y, eta, mu)`` tuples in increasing ``k``."""
        return [(k, *self.entries[k].base, self.entries[k].eta, self.entries[k].mu)
                for k in sorted(self.entries)]


def conjugate_chain(family: CurveFamily, c0: Covector, R: float = 3.0, k_max: int = 4,
                    a1_route: str = "jacobi") -> ConjugateChain:
    """Iterate conjugate covectors in both directions from ``c0``.

    Positive ``k`` follows the ``+xi`` branch, negative ``k`` the ``-xi``
    branch.  A base escapes when ``|x| > R``.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if not R > 0:
        raise ValueError("escape radius must be positive")
    chain = ConjugateChain({0: c0}, radius=R)
    for sign in (1, -1):
        cur = c0
        escaped = False
        for k in range(1, k_max + 1):
            nxt = _partner(family, cur, sign, a1_route)
            if nxt is None:
                break
            chain.entries[sign * k] = nxt
            if math.hypot(*nxt.base) > R:
                escaped = True
                break
            cur = nxt
        if sign == 1:
            chain.escaped_positive = escaped
        else:
            chain.escaped_negative = escaped
    return chain


def artifact_mask(family: CurveFamily, covectors, like: GridFunction, radius: float | None = None) -> GridFunction:
    """0/1 mask of disks (default radius ``3h``) around all conjugate bases.

    Marks where backprojection artifacts of singularities at ``covectors`` are
    expected.  Scales are ignored; only base points matter.
    """
    rad = 3.0 * like.h if radius is None else float(radius)
    X, Y = like.coords()
    mask = np.zeros_like(like.values)
    for c in covectors:
        for bx, by in conjugate_bases(family, c):
            i0 = max(0, int(math.floor((bx - rad - like.x0) / like.h)))
            i1 = min(like.nx, int(math.ceil((bx + rad - like.x0) / like.h)) + 1)
            j0 = max(0, int(math.floor((by - rad - like.y0) / like.h)))
            j1 = min(like.ny, int(math.ceil((by + rad - like.y0) / like.h)) + 1)
            if i0 >= i1 or j0 >= j1:
                continue
            sub = (X[j0:j1, i0:i1] - bx) ** 2 + (Y[j0:j1, i0:i1] - by) ** 2 <= rad**2
            mask[j0:j1, i0:i1][sub] = 1.0
    return like.like(mask)
