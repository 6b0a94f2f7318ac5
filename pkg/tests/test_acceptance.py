"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the criterion lines
are printed in the terminal summary (and immediately with ``-s``).
"""

import math

import numpy as np
import pytest

from helixlab.cli import main
from helixlab.curves import AnalyticCurve, UnitSpeedCurve, apply_rigid_motion, scale_curve
from helixlab.frenet import compute_apparatus, frame_completeness_check, frenet_ode_residual
from helixlab.slant import (
    DEFECT_TOL,
    DEGENERATE,
    NOT_SLANT,
    SLANT,
    check_sigma_equivalence,
    detect_slant_helix,
    oracle_axis_svd,
    sigma_from_apparatus,
    verify_integral_characterization,
)
from helixlab.synthesis import constant_precession_curve

from conftest import ACCEPTANCE, helix_coords, salkowski_coords


def report(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    print(line)
    ACCEPTANCE.append(line)
    assert ok, line


def angle(u, v):
    u = np.asarray(u) / np.linalg.norm(u)
    v = np.asarray(v) / np.linalg.norm(v)
    return math.atan2(np.linalg.norm(u - np.dot(u, v) * v), float(np.dot(u, v)))


def analytic_apparatus(coords, interval, grid_size=512):
    return compute_apparatus(UnitSpeedCurve(AnalyticCurve(coords, interval)), grid_size=grid_size)


@pytest.fixture(scope="module")
def slant_reports(slant_records):
    return {n: [detect_slant_helix(r.apparatus) for r in recs] for n, recs in slant_records.items()}


@pytest.fixture(scope="module")
def w_reports(w_records):
    return {n: [detect_slant_helix(r.apparatus) for r in recs] for n, recs in w_records.items()}


@pytest.fixture(scope="module")
def negative_reports(negative_records):
    return [detect_slant_helix(r.apparatus) for r in negative_records]


def test_criterion_1_constant_precession():
    worst_C = worst_sigma = 0.0
    verdicts = []
    for omega, mu in [(2.0, 1.0), (1.0, 1.0), (3.0, 2.0)]:
        # (0.2/mu, 1.4/mu) keeps both sin(mu s) and cos(mu s) away from zero
        rec = constant_precession_curve(omega, mu, interval=(0.2 / mu, 1.4 / mu))
        rep = detect_slant_helix(rec.apparatus)
        verdicts.append(rep.verdict)
        C_true = 1 + omega**2 / mu**2
        worst_C = max(worst_C, abs(rep.C - C_true) / rep.C)
        worst_sigma = max(worst_sigma, check_sigma_equivalence(rep.C, sigma_from_apparatus(rec.apparatus)))
    ok = all(v == SLANT for v in verdicts) and worst_C < 1e-2 and worst_sigma < 1e-4
    report(1, ok, f"verdicts {verdicts}, max rel C error {worst_C:.2e}, max sigma gap {worst_sigma:.2e}")


def test_criterion_2_slant_round_trip(slant_records, slant_reports):
    bad = 0
    worst = dict(C=0.0, axis=0.0, v2=0.0, oracle=0.0)
    for n, recs in slant_records.items():
        for rec, rep in zip(recs, slant_reports[n]):
            if rep.verdict != SLANT:
                bad += 1
                continue
            worst["C"] = max(worst["C"], abs(rep.C - rec.C) / rec.C)
            worst["axis"] = max(worst["axis"], angle(rep.axis, rec.axis))
            a = rec.apparatus.components(rep.axis)[:, 1]
            worst["v2"] = max(worst["v2"], float(np.abs(a - a.mean()).max() / abs(a.mean())))
            # independent route: nullspace of the V_2' field
            U = oracle_axis_svd(rec.apparatus).axis
            worst["oracle"] = max(worst["oracle"], min(angle(U, rec.axis), angle(-U, rec.axis)))
    count = sum(len(r) for r in slant_records.values())
    limits = dict(C=1e-2, axis=1e-2, v2=1e-3, oracle=1e-2)
    ok = bad == 0 and count == 60 and all(worst[k] < v for k, v in limits.items())
    report(
        2,
        ok,
        f"{count - bad}/{count} slant, max rel C error {worst['C']:.2e}, "
        f"max axis angle {worst['axis']:.2e} rad (oracle {worst['oracle']:.2e}), "
        f"max <V2,U> variation {worst['v2']:.2e}",
    )


def test_criterion_3_w_curve_rejection(w_records, w_reports):
    bad = []
    min_defect = np.inf
    for n, reps in w_reports.items():
        for rep in reps:
            min_defect = min(min_defect, rep.defect)
            if rep.verdict == SLANT or rep.defect <= 10 * DEFECT_TOL:
                bad.append((n, rep.verdict))
            # the oracle may only find the orthogonal (theta = pi/2) axis
            if rep.oracle["found"]:
                cos_max = math.cos(min(rep.oracle["angle_min"], math.pi - rep.oracle["angle_max"]))
                if rep.verdict != DEGENERATE or abs(cos_max) > 1e-6:
                    bad.append((n, "oracle"))
            elif rep.verdict != NOT_SLANT:
                bad.append((n, rep.verdict))
    tally = {n: sorted({r.verdict for r in reps}) for n, reps in w_reports.items()}
    report(3, not bad, f"verdicts by n {tally}, min defect {min_defect:.3e}, violations {bad}")


def test_criterion_4_characterizations(slant_reports, w_reports):
    worst = dict(diff=0.0, integ=0.0, m=0.0, n=0.0)
    for reps in slant_reports.values():
        for rep in reps:
            ic = verify_integral_characterization(rep.g)
            worst["diff"] = max(worst["diff"], rep.residuals["differential"])
            worst["integ"] = max(worst["integ"], ic.residual)
            worst["m"] = max(worst["m"], ic.std_m / abs(ic.A))
            worst["n"] = max(worst["n"], ic.std_n / abs(ic.B))
    w_min = min(min(rep.residuals["differential"], rep.residuals["integral"]) for r in w_reports.values() for rep in r)
    ok = max(worst.values()) < 1e-3 and w_min > 0.1
    report(
        4,
        ok,
        f"slant max differential {worst['diff']:.2e}, integral {worst['integ']:.2e}, "
        f"std(m)/|A| {worst['m']:.2e}, std(n)/|B| {worst['n']:.2e}; W-curve min residual {w_min:.3g}",
    )


def test_criterion_5_telescoping(slant_reports, w_reports, negative_reports):
    reps = [r for rs in slant_reports.values() for r in rs]
    reps += [r for rs in w_reports.values() for r in rs] + negative_reports
    worst = max(r.residuals["telescoping"] for r in reps)
    report(5, worst < 1e-4, f"max telescoping residual {worst:.2e} over {len(reps)} curves")


def test_criterion_6_frenet_soundness():
    cases = [
        (helix_coords(3.0, 4.0), (0.0, 20.0)),
        (salkowski_coords(1.0), (0.2, 1.7)),
        (["t", "t^2/2", "t^3/6", "t^4/24"], (0.2, 1.5)),
        (["cos(t)", "sin(t)", "cos(2*t)/2", "sin(2*t)/2", "t"], (0.0, 3.0)),
    ]
    orth = 0.0
    comp = 0.0
    rng = np.random.default_rng(6)
    for coords, interval in cases:
        app = analytic_apparatus(coords, interval)
        orth = max(orth, app.orthonormality_defect())
        for _ in range(100):
            U = rng.normal(size=app.n)
            comp = max(comp, frame_completeness_check(app, U / np.linalg.norm(U)))
    r64 = frenet_ode_residual(analytic_apparatus(helix_coords(3.0, 4.0), (0.0, 20.0), 64)).overall_rms
    r128 = frenet_ode_residual(analytic_apparatus(helix_coords(3.0, 4.0), (0.0, 20.0), 128)).overall_rms
    ratio = r64 / r128

    # invariance under R x + c and x -> lam x
    Q, _ = np.linalg.qr(np.random.default_rng(3).normal(size=(3, 3)))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    inv = 0.0
    same = True
    for coords, interval in [(salkowski_coords(1.0), (0.2, 1.7)), (salkowski_coords(2.0), (0.2, 1.4))]:
        base = AnalyticCurve(coords, interval)
        ref = detect_slant_helix(compute_apparatus(UnitSpeedCurve(base), grid_size=512))
        for moved in (apply_rigid_motion(base, Q, [1.0, -2.0, 0.5]), scale_curve(base, 2.5)):
            rep = detect_slant_helix(compute_apparatus(UnitSpeedCurve(moved), grid_size=512))
            same &= rep.verdict == ref.verdict == SLANT
            inv = max(inv, abs(rep.C - ref.C) / ref.C)
    base = AnalyticCurve(cases[2][0], cases[2][1])
    ref = detect_slant_helix(compute_apparatus(UnitSpeedCurve(base), grid_size=512))
    Q4, _ = np.linalg.qr(np.random.default_rng(4).normal(size=(4, 4)))
    if np.linalg.det(Q4) < 0:
        Q4[:, 0] = -Q4[:, 0]
    for moved in (apply_rigid_motion(base, Q4, [0.3, 0.0, -1.0, 2.0]), scale_curve(base, 0.4)):
        same &= detect_slant_helix(compute_apparatus(UnitSpeedCurve(moved), grid_size=512)).verdict == ref.verdict
    ok = orth < 1e-8 and comp < 1e-6 and abs(ratio - 4.0) < 0.8 and same and inv < 1e-6
    report(
        6,
        ok,
        f"orthonormality {orth:.1e}, completeness {comp:.1e}, ODE ratio {ratio:.3f}, "
        f"verdicts invariant {same}, max rel C change {inv:.1e}",
    )


def test_criterion_7_negative_controls(negative_records, negative_reports):
    slant = sum(r.verdict == SLANT for r in negative_reports)
    # detector and oracle agree: an oracle axis with a nonzero angle would mean a slant helix
    disagree = 0
    for rep in negative_reports:
        oracle_slant = rep.oracle["found"] and not (
            abs(math.cos(rep.oracle["angle_min"])) < 1e-6 and abs(math.cos(rep.oracle["angle_max"])) < 1e-6
        )
        disagree += oracle_slant != (rep.verdict == SLANT)
    dims = sorted({r.apparatus.n for r in negative_records})
    ok = len(negative_reports) == 100 and slant == 0 and disagree == 0
    report(7, ok, f"{len(negative_reports)} curves in E^{dims}, {slant} slant verdicts, {disagree} disagreements")


def test_criterion_8_determinism(tmp_path):
    fixtures = [
        ("slant", ["--family", "slant", "--n", "4", "--C", "30"]),
        ("precession", ["--family", "constant_precession"]),
        ("random", ["--family", "random", "--n", "5", "--seed", "11"]),
    ]
    identical = True
    for name, args in fixtures:
        assert main(["synthesize", *args, "-o", str(tmp_path / f"{name}.csv")]) == 0
        outs = []
        for k in range(3):
            out = tmp_path / f"{name}.{k}.json"
            assert main(["analyze", str(tmp_path / f"{name}.csv"), "-o", str(out)]) == 0
            outs.append(out.read_bytes())
        identical &= len(set(outs)) == 1
    batch = []
    for k in range(2):
        outdir = tmp_path / f"batch{k}"
        outdir.mkdir()
        main(["analyze", str(tmp_path), "-o", str(outdir)])
        batch.append({p.name: p.read_bytes() for p in sorted(outdir.iterdir())})
    identical &= batch[0] == batch[1] and len(batch[0]) >= 3
    report(8, identical, f"{len(fixtures)} fixtures x 3 runs plus 2 batch runs, byte-identical {identical}")
