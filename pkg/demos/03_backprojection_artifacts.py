"""Backprojection of a near-delta and the artifacts on its conjugate locus.

Backprojects a narrow truncated Gaussian with the unit-circle transform,
checks it against the closed-form normal operator, and applies the
square-root Laplacian.  What survives away from the origin sits on the circle
of radius 2, the conjugate locus of the origin.  Writes PGM panels.

    python3 demos/03_backprojection_artifacts.py [out_dir]
"""
import math
import sys
import time
from pathlib import Path

import numpy as np

from lambda_xray import (Covector, TruncatedGaussian, UnitCircle, analytic_backprojection, artifact_mask,
                         backproject, filtered_backproject, generate, relative_error, square_grid)
from lambda_xray.io import write_image

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/03")
out.mkdir(parents=True, exist_ok=True)

g = square_grid(40)
f = generate(TruncatedGaussian(), g)

t0 = time.perf_counter()
bp = backproject(f)
ref = analytic_backprojection(f)
print(f"backprojection vs closed form: relative error {relative_error(bp, ref):.4f} "
      f"({time.perf_counter() - t0:.1f} s)")

fb = filtered_backproject(f)
r = g.radius()
near = r < 0.5
alpha = np.sum(fb.values[near] * f.values[near]) / np.sum(f.values[near] ** 2)
res = g.like(fb.values - alpha * f.values)
ring = (r >= 1.8) & (r <= 2.2)
print(f"near-identity scale alpha = {alpha:.3f}")
print(f"share of the residual energy in 1.8 <= |x| <= 2.2: {np.sum(res.values[ring]**2) / np.sum(res.values**2):.1%}")

# predicted artifact set: conjugate partners of every covector at the origin
fan = [Covector((0.0, 0.0), a) for a in np.linspace(0, math.pi, 180, endpoint=False)]
mask = artifact_mask(UnitCircle(), fan, g)
lit = r[mask.values > 0]
print(f"predicted artifact radii: {lit.min():.3f}..{lit.max():.3f}")

for name, grid in (("phantom", f), ("backprojection", bp), ("filtered", fb), ("residual", res),
                   ("predicted", mask)):
    write_image(grid, out / f"{name}.pgm")
print(f"wrote panels to {out}/")
