import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import helix_coords, rotation
from helixlab.curves import AnalyticCurve, UnitSpeedCurve, apply_rigid_motion, scale_curve
from helixlab.errors import DegenerateJet, PreconditionError
from helixlab.numerics import differentiate
from helixlab.frenet import (
    FrenetApparatus,
    apparatus_columns,
    compute_apparatus,
    frame_completeness_check,
    frenet_ode_residual,
    gram_schmidt_frame,
    write_apparatus_csv,
)

# exact Gram determinants (symbolic oracle) for (2 cos t, 2 sin t, cos 2t, sin 2t)
W4_KAPPA = [np.sqrt(5) / 4, 3 * np.sqrt(5) / 20, np.sqrt(5) / 5]


def apparatus(coords, interval, grid_size=256):
    return compute_apparatus(UnitSpeedCurve(AnalyticCurve(coords, interval)), grid_size=grid_size)


def test_circular_helix_curvatures():
    app = apparatus(helix_coords(3.0, 4.0), (0, 6))
    np.testing.assert_allclose(app.kappa[:, 0], 3 / 25, rtol=1e-12)
    np.testing.assert_allclose(app.kappa[:, 1], 4 / 25, rtol=1e-12)
    assert app.orthonormality_defect() < 1e-8
    np.testing.assert_allclose(app.orientation(), 1.0, atol=1e-12)


def test_left_handed_helix_has_negative_torsion():
    app = apparatus(["3*cos(t)", "-3*sin(t)", "4*t"], (0, 6))
    np.testing.assert_allclose(app.kappa[:, 1], -4 / 25, rtol=1e-12)
    np.testing.assert_allclose(app.orientation(), 1.0, atol=1e-12)


def test_w_curve_in_e4_matches_symbolic():
    app = apparatus(["2*cos(t)", "2*sin(t)", "cos(2*t)", "sin(2*t)"], (0, 5))
    for i, k in enumerate(W4_KAPPA):
        np.testing.assert_allclose(app.kappa[:, i], k, rtol=1e-11)
    assert app.orthonormality_defect() < 1e-8


def test_kappa_series_carries_derivatives():
    # curvatures of a twisted cubic vary along the curve; compare with differences
    app = apparatus(["t", "t^2/2", "t^3/6"], (0, 1.5), grid_size=400)
    for i in range(2):
        fd = differentiate(app.kappa[:, i], app.s)
        np.testing.assert_allclose(app.kappa_series[1, :, i], fd, atol=1e-7)


def test_gram_schmidt_single_point():
    frame, kappa = gram_schmidt_frame([[0, 0.6, 0.8], [-0.12, 0, 0], [0, -0.024, 0]])
    np.testing.assert_allclose(kappa, [0.12, 0.16], rtol=1e-12)
    np.testing.assert_allclose(frame[1], [-1, 0, 0], atol=1e-14)
    np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-14)


def test_planar_circle_in_e3_is_degenerate():
    with pytest.raises(DegenerateJet, match="kappa_2") as exc:
        apparatus(["cos(t)", "sin(t)", "0"], (0, 6))
    assert exc.value.index == 2 and exc.value.s is not None


def test_straight_line_is_degenerate():
    with pytest.raises(DegenerateJet) as exc:
        apparatus(["t", "2*t", "3*t"], (0, 1))
    assert exc.value.index == 1


def test_ode_residual_second_order_convergence():
    apps = [apparatus(helix_coords(3.0, 4.0), (0, 6), grid_size=g) for g in (64, 128)]
    res = [frenet_ode_residual(a).overall_rms for a in apps]
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.2)
    a = apps[0]
    tiny = FrenetApparatus(a.s[:4], a.frames[:4], a.kappa[:4])
    with pytest.raises(PreconditionError):
        frenet_ode_residual(tiny)


@given(seed=st.integers(0, 2**31))
def test_completeness_for_random_unit_vectors(seed):
    app = _W4
    U = np.random.default_rng(seed).normal(size=4)
    assert frame_completeness_check(app, U / np.linalg.norm(U)) < 1e-12


_W4 = apparatus(["2*cos(t)", "2*sin(t)", "cos(2*t)", "sin(2*t)"], (0, 3), grid_size=64)


@given(seed=st.integers(0, 10**6))
def test_rigid_motion_equivariance(seed):
    R = rotation(3, seed)
    c = AnalyticCurve(["2*cos(t)", "sin(t)", "t^2/2"], (0.5, 2.5))
    app = compute_apparatus(UnitSpeedCurve(c), grid_size=64)
    moved = compute_apparatus(UnitSpeedCurve(apply_rigid_motion(c, R, [1.0, -2.0, 0.5])), grid_size=64)
    np.testing.assert_allclose(moved.kappa, app.kappa, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(moved.frames, app.transformed(R).frames, atol=1e-10)


@given(lam=st.floats(0.1, 10.0))
def test_scaling_divides_curvatures(lam):
    c = AnalyticCurve(["2*cos(t)", "sin(t)", "t^2/2"], (0.5, 2.5))
    app = compute_apparatus(UnitSpeedCurve(c), grid_size=64)
    big = compute_apparatus(UnitSpeedCurve(scale_curve(c, lam)), grid_size=64)
    np.testing.assert_allclose(big.kappa * lam, app.kappa, rtol=1e-9)
    np.testing.assert_allclose(big.s / lam, app.s, rtol=1e-12, atol=1e-14)


def test_export_columns(tmp_path):
    app = apparatus(helix_coords(3.0, 4.0), (0, 1), grid_size=32)
    p = tmp_path / "a.csv"
    write_apparatus_csv(p, app)
    lines = p.read_text().splitlines()
    assert lines[0].split(",") == apparatus_columns(3)
    assert len(lines) == 33
    row = np.array(lines[1].split(","), dtype=float)
    np.testing.assert_allclose(row[-2:], [0.12, 0.16], rtol=1e-12)
