"""Curve families, their exponential maps and conjugate loci.

Prints a few curve points, checks the closed-form Jacobians of the exponential
map against finite differences, and writes the conjugate locus of each family
around the origin as CSV.

    python3 demos/01_curve_families.py [out_dir]
"""
import math
import sys
from pathlib import Path

import numpy as np

from lambda_xray import Ellipse, PhasePoint, Spiral, UnitCircle, conjugate_locus, eval_curve, exp_jacobian_det
from lambda_xray.io import write_csv

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out/01")
out.mkdir(parents=True, exist_ok=True)

families = {"circle": UnitCircle(), "ellipse": Ellipse(2.0, 1.0), "spiral": Spiral(-0.25)}

# half a turn of the unit circle that leaves the origin heading up
(x, y), heading = eval_curve(UnitCircle(), PhasePoint(0.0, 0.0, math.pi / 2), math.pi)
print(f"circle, heading pi/2, t = pi: ({x:+.3f}, {y:+.3f}), heading {heading:.3f}")

print("\nexp-map Jacobian: closed form vs central differences")
for name, fam in families.items():
    for theta, t in ((0.3, 1.0), (1.2, 2.5)):
        exact = exp_jacobian_det(fam, (0.0, 0.0), theta, t)
        fd = exp_jacobian_det(fam, (0.0, 0.0), theta, t, h_fd=1e-5)
        print(f"  {name:8s} theta={theta:.1f} t={t:.1f}  {exact:+.6f}  fd {fd:+.6f}")

print("\nconjugate loci around the origin")
for name, fam in families.items():
    loc = conjugate_locus(fam, (0.0, 0.0), n_angles=64)
    pts = loc.points[loc.found]
    r = np.hypot(pts[:, 0], pts[:, 1])
    print(f"  {name:8s} {loc.found.sum():2d}/64 directions, conjugate time "
          f"{np.nanmin(loc.times):.6f}..{np.nanmax(loc.times):.6f}, |x| in [{r.min():.3f}, {r.max():.3f}]")
    rows = [(th, t, px, py) for th, t, (px, py), ok in zip(loc.thetas, loc.times, loc.points, loc.found) if ok]
    write_csv(out / f"locus_{name}.csv", ["theta", "t", "x", "y"], rows)
print(f"\nwrote loci to {out}/")
