"""Jacobi fields, conjugate times and the Wronskian of a projection pair.

For the unit circle the scalar Jacobi field with y(0) = 0, y'(0) = 1 is sin t,
so the first conjugate time is pi.  For a field lambda with a nonzero angular
derivative the Wronskian of a projection pair is no longer constant; its log
follows the integral of that derivative along the curve.

    python3 demos/02_jacobi_conjugate_points.py
"""
import math

import numpy as np

from lambda_xray import (Chart, Ellipse, GeneralLambda, PhasePoint, UnitCircle, first_conjugate_time,
                         projection_pair, solve_jacobi_scalar, wronskian)

sol = solve_jacobi_scalar(UnitCircle(), PhasePoint(0, 0, 0), 0.0, 1.0, t_end=2 * math.pi, dt=1e-3)
print(f"circle Jacobi field vs sin t: sup error {np.max(np.abs(sol.y - np.sin(sol.times))):.2e}")

for name, fam in (("circle", UnitCircle()), ("ellipse 2x1", Ellipse(2.0, 1.0))):
    ts = [first_conjugate_time(fam, PhasePoint(0.0, 0.0, th), 2 * math.pi) for th in np.linspace(0, 2 * math.pi, 8,
                                                                                              endpoint=False)]
    print(f"{name:12s} first conjugate times - pi: max {max(abs(t - math.pi) for t in ts):.1e}")

pair = projection_pair(UnitCircle(), 0.0, 1.1, Chart(), t_end=2 * math.pi)
W = wronskian(pair)
print(f"circle Wronskian drift over one turn: {np.max(np.abs(W - W[0])):.1e}")

tilted = GeneralLambda(lam=lambda x, y, th: 1.0 + 0.3 * np.sin(th) + 0.2 * x)
pair = projection_pair(tilted, 0.2, 0.4, Chart(), t_end=3.0)
W = wronskian(pair)
integral = np.concatenate([[0.0], np.cumsum(0.5 * (pair.v_lam[1:] + pair.v_lam[:-1]) * np.diff(pair.times))])
print("tilted lambda: log W(t)/W(0) against the integral of the angular derivative")
for i in np.linspace(0, len(W) - 1, 6).astype(int):
    print(f"  t={pair.times[i]:.2f}  log ratio {math.log(abs(W[i] / W[0])):+.6f}  integral {integral[i]:+.6f}")
t_c = first_conjugate_time(tilted, PhasePoint(0.0, 0.0, 0.0), 2 * math.pi)
print(f"tilted lambda first conjugate time from heading 0: {t_c}")
