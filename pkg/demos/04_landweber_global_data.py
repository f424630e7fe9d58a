"""Landweber reconstruction of a coherent state from global circle data.

The coherent state oscillates along x, so its wavefront set is conormal to
the vertical lines through the origin; without a support constraint the
conjugate partners of those covectors are indistinguishable from the truth.
Restricting the unknown to |x| <= 3 breaks the ambiguity.

    python3 demos/04_landweber_global_data.py [out_dir]
"""
import sys
import time
from pathlib import Path

from lambda_xray import (CoherentState, LandweberConfig, UnitCircle, filtered_backproject, forward, generate,
                         landweber, relative_error, square_grid)
from lambda_xray.io import write_csv, write_image

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/04")
out.mkdir(parents=True, exist_ok=True)

g = square_grid(40)
f = generate(CoherentState(), g)
data = forward(f, UnitCircle())

print(f"one filtered backprojection: relative error {relative_error(filtered_backproject(f), f):.3f}")

t0 = time.perf_counter()
rep = landweber(data, LandweberConfig(n_iter=100, support_radius=3.0), truth=f)
print(f"100 Landweber steps: relative error {rep.relative_error:.4f}, step {rep.step:.3g}, "
      f"{time.perf_counter() - t0:.1f} s")
h = rep.residual_history
for k in (0, 1, 5, 20, 50, 100):
    print(f"  residual[{k:3d}] = {h[k]:.4e}")

write_csv(out / "residuals.csv", ["k", "residual"], enumerate(h))
write_image(f, out / "truth.pgm")
write_image(rep.result, out / "landweber.pgm")
write_image(g.like(rep.result.values - f.values), out / "error.pgm")
print(f"wrote {out}/")
