"""Test functions: a truncated Gaussian and a coherent state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import GridFunction, square_grid
from .reconstruction import cutoff_profile

__all__ = ["TruncatedGaussian", "CoherentState", "PhantomSpec", "generate"]


@dataclass(frozen=True)
class TruncatedGaussian:
    """``exp(-|x-c|^2 / (2 sigma^2))`` times a cosine taper from ``r_c`` to ``r_c + taper``.

    ``taper`` defaults to ``sigma``.
    """

    center: tuple = (0.0, 0.0)
    sigma: float = 0.15
    r_c: float = 0.75
    taper: float | None = None

    def __post_init__(self):
        _check_envelope(self.sigma, self.r_c, self.taper)

    @property
    def taper_width(self) -> float:
        return self.sigma if self.taper is None else self.taper

    @property
    def support_radius(self) -> float:
        return self.r_c + self.taper_width

    def envelope(self, X, Y):
        r2 = (X - self.center[0]) ** 2 + (Y - self.center[1]) ** 2
        return np.exp(-r2 / (2 * self.sigma**2)) * cutoff_profile(np.sqrt(r2), self.r_c, self.taper_width)

    def __call__(self, X, Y):
        return self.envelope(X, Y)


@dataclass(frozen=True)
class CoherentState(TruncatedGaussian):
    """Truncated Gaussian envelope times ``cos(k . (x - c))``.

    Its singularities concentrate near ``center`` in the direction of ``k``.
    """

    sigma: float = 0.25
    r_c: float = 1.0
    taper: float | None = 0.25
    k: tuple = (10.0, 0.0)

    def __post_init__(self):
        super().__post_init__()
        if not np.hypot(*self.k) > 0:
            raise ConfigError("coherent state needs a nonzero frequency vector", key="k")

    def __call__(self, X, Y):
        phase = self.k[0] * (X - self.center[0]) + self.k[1] * (Y - self.center[1])
        return self.envelope(X, Y) * np.cos(phase)


PhantomSpec = TruncatedGaussian | CoherentState


def _check_envelope(sigma, r_c, taper):
    if not sigma > 0:
        raise ConfigError(f"sigma must be positive, got {sigma}", key="sigma")
    if not r_c >= 3 * sigma:
        raise ConfigError(f"cutoff radius r_c={r_c} must be at least 3 sigma", key="r_c")
    if taper is not None and not taper > 0:
        raise ConfigError(f"taper must be positive, got {taper}", key="taper")


def generate(spec: TruncatedGaussian, like: GridFunction | None = None) -> GridFunction:
    """Sample ``spec`` on the grid of ``like`` (default: the 240 x 240 grid on [-3, 3]^2).

    Raises ``ValueError`` if the phantom support pokes out of the grid.
    """
    like = square_grid(40) if like is None else like
    rad = spec.support_radius
    cx, cy = spec.center
    xmax = like.x0 + (like.nx - 1) * like.h
    ymax = like.y0 + (like.ny - 1) * like.h
    if cx - rad < like.x0 or cx + rad > xmax or cy - rad < like.y0 or cy + rad > ymax:
        raise ValueError(
            f"phantom support (radius {rad:g} around {spec.center}) exceeds the grid "
            f"[{like.x0:g}, {xmax:g}] x [{like.y0:g}, {ymax:g}]"
        )
    X, Y = like.coords()
    return like.like(spec(X, Y))
