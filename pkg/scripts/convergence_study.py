#!/usr/bin/env python3
"""Convergence tables for the numerical building blocks.

1. Frenet ODE residual of the circular helix (a, b) = (3, 4) under grid
   halving; central differences give ratio ~4 per halving.
2. Integrator self-consistency for a W-curve in E^4: error of the positions
   at r substeps against a reference run, which falls like r**-4.
3. Sampled-curve curvature recovery for a random slant helix in E^5 as the
   sample count grows.
"""

import argparse
import sys

import numpy as np

from helixlab.curves import AnalyticCurve, UnitSpeedCurve
from helixlab.frenet import compute_apparatus, frenet_ode_residual
from helixlab.synthesis import CurvatureProfile, _magnus_solution, random_slant_helix


def frenet_table(grids):
    curve = UnitSpeedCurve(AnalyticCurve(["3*cos(t)", "3*sin(t)", "4*t"], (0.0, 20.0)))
    print("Frenet ODE residual, helix a=3 b=4")
    print(f"{'grid':>6} {'rms':>12} {'ratio':>8}")
    prev = None
    for g in grids:
        r = frenet_ode_residual(compute_apparatus(curve, grid_size=g)).overall_rms
        print(f"{g:>6} {r:12.4e} {'' if prev is None else f'{prev / r:8.3f}'}")
        prev = r


def integrator_table(substeps):
    prof = CurvatureProfile(["1", "0.7", "1.3"], (0.0, 10.0))
    grid = 129
    F0, x0 = np.eye(4), np.zeros(4)
    ref = _magnus_solution(prof, 0.0, 10.0, 4 * substeps[-1] * (grid - 1), F0, x0)[1][:: 4 * substeps[-1]]
    print("\nMagnus integrator, W-curve (1, 0.7, 1.3) on [0, 10]")
    print(f"{'substeps':>8} {'max |x - x_ref|':>16} {'ratio':>8}")
    prev = None
    for r in substeps:
        x = _magnus_solution(prof, 0.0, 10.0, r * (grid - 1), F0, x0)[1][::r]
        e = float(np.abs(x - ref).max())
        print(f"{r:>8} {e:16.4e} {'' if prev is None else f'{prev / e:8.2f}'}")
        prev = e


def sampled_table(grids, seed):
    print(f"\nSampled recovery, random slant helix n=5 seed {seed} (relative RMS per curvature)")
    for g in grids:
        rec = random_slant_helix(5, seed, grid_size=g)
        app = compute_apparatus(UnitSpeedCurve(rec.curve.fit()), grid_size=512, trim=0.02)
        kt = rec.profile.values(app.s + rec.apparatus.s[0])
        err = np.sqrt(np.mean((app.kappa - kt) ** 2, axis=0)) / np.sqrt(np.mean(kt**2, axis=0))
        print(f"{g:>6} " + " ".join(f"{e:9.2e}" for e in err))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seed", type=int, default=2)
    args = p.parse_args(argv)
    frenet_table([32, 64, 128, 256, 512])
    integrator_table([1, 2, 4, 8])
    sampled_table([256, 512, 1024, 2048], args.seed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
