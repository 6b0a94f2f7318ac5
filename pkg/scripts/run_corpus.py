#!/usr/bin/env python3
"""Build the slant, W-curve and negative corpora and tabulate detector results.

    python scripts/run_corpus.py --count 20 --json corpus.json
    python scripts/run_corpus.py --sampled     # re-fit each sampled curve first
"""

import argparse
import json
import logging
import sys
import time
from collections import Counter

import numpy as np

from helixlab.curves import UnitSpeedCurve
from helixlab.frenet import compute_apparatus
from helixlab.slant import SLANT, detect_slant_helix
from helixlab.synthesis import negative_corpus, slant_corpus, w_curve_corpus

log = logging.getLogger("run_corpus")


def apparatus(rec, sampled, grid_size):
    if not sampled:
        return rec.apparatus
    return compute_apparatus(UnitSpeedCurve(rec.curve.fit()), grid_size=grid_size, trim=0.02)


def summarize(name, recs, sampled, grid_size):
    rows = []
    for rec in recs:
        rep = detect_slant_helix(apparatus(rec, sampled, grid_size))
        row = {
            "family": rec.family,
            "n": rec.apparatus.n,
            "verdict": rep.verdict,
            "defect": rep.defect,
            "C": rep.C,
            "C_true": rec.C,
            **{k: float(v) for k, v in rep.residuals.items()},
            "oracle_found": bool(rep.oracle["found"]),
        }
        if rec.C is not None and rep.verdict == SLANT:
            row["C_rel_err"] = abs(rep.C - rec.C) / rec.C
            d = float(np.dot(rep.axis, rec.axis))
            row["axis_angle"] = float(np.arctan2(np.linalg.norm(rep.axis - d * rec.axis), d))
        rows.append(row)
    verdicts = dict(Counter(r["verdict"] for r in rows))

    def worst(key):
        return max((r[key] for r in rows if key in r), default=float("nan"))

    print(
        f"{name:<14} {len(rows):>4}  {verdicts}  defect [{min(r['defect'] for r in rows):.2e}, "
        f"{worst('defect'):.2e}]  telescoping {worst('telescoping'):.1e}  "
        f"C err {worst('C_rel_err'):.1e}  axis {worst('axis_angle'):.1e}"
    )
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--count", type=int, default=20, help="slant helices per dimension")
    p.add_argument("--w-count", type=int, default=10)
    p.add_argument("--negatives", type=int, default=100)
    p.add_argument("--grid-size", type=int, default=512)
    p.add_argument("--sampled", action="store_true", help="analyze spline fits of the sampled curves")
    p.add_argument("--json", help="write per-curve rows here")
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    t0 = time.perf_counter()
    out = {}
    for n in (3, 4, 5):
        recs = slant_corpus(n, args.count, seed=100 * n, grid_size=args.grid_size)
        out[f"slant{n}"] = summarize(f"slant n={n}", recs, args.sampled, args.grid_size)
    for n in (3, 4, 5):
        recs = w_curve_corpus(n, args.w_count, seed=7 + n, grid_size=args.grid_size)
        out[f"w{n}"] = summarize(f"w-curve n={n}", recs, args.sampled, args.grid_size)
    recs = negative_corpus((3, 4, 5), args.negatives, seed=1000, grid_size=args.grid_size)
    out["negative"] = summarize("negative", recs, args.sampled, args.grid_size)
    print(f"{time.perf_counter() - t0:.1f} s")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(out, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
