import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from conftest import helix_coords, salkowski_coords
from helixlab.curves import AnalyticCurve, UnitSpeedCurve
from helixlab.errors import AmbiguousNullspace, AxisUnstable, CExcluded, CurvatureVanishes, PreconditionError
from helixlab.frenet import FrenetApparatus, compute_apparatus
from helixlab.slant import (
    C_MAX,
    DEGENERATE,
    NOT_SLANT,
    SLANT,
    check_sigma_equivalence,
    compute_G_basis,
    detect_slant_helix,
    oracle_axis_svd,
    recover_axis_from_G,
    recursion_residual,
    sigma_from_apparatus,
    sigma_izumiya_takeuchi,
    solve_integration_constant,
    telescoping_identity_residual,
    verify_differential_characterization,
    verify_integral_characterization,
)
from helixlab.synthesis import constant_precession_curve, random_curvature_curve, random_slant_helix


def analytic_apparatus(coords, interval, grid_size=256):
    return compute_apparatus(UnitSpeedCurve(AnalyticCurve(coords, interval)), grid_size=grid_size)


def grid_only(app):
    return FrenetApparatus(app.s, app.frames, app.kappa)


@pytest.fixture(scope="module")
def helix():
    return analytic_apparatus(helix_coords(3.0, 4.0), (0, 6))


@pytest.fixture(scope="module")
def random_curve():
    return random_curvature_curve(4, 11).apparatus


def test_G_basis_of_circular_helix(helix):
    g = compute_G_basis(helix)
    s = helix.s
    # G_1 = 0.12 s + c0, G_2 = 1, G_3 = (0.12 / 0.16) G_1
    np.testing.assert_allclose(g.P[:, 0], 0.12 * s, atol=1e-12)
    np.testing.assert_allclose(g.P[:, 2], 0.75 * 0.12 * s, atol=1e-12)
    np.testing.assert_allclose(g.Q, np.tile([1.0, 0.0, 0.75], (s.size, 1)), atol=1e-14)
    np.testing.assert_allclose(g.dP[:, 0], 0.12, rtol=1e-12)
    assert g.method == "series"


def test_circular_helix_is_orthogonal_degenerate(helix):
    rep = detect_slant_helix(helix)
    assert rep.verdict == DEGENERATE
    assert rep.defect > 1e-2
    assert abs(abs(rep.axis[2]) - 1) < 1e-10
    assert rep.theta == pytest.approx(math.pi / 2)
    # c0 search stays inside the bracket fixed by C_MAX
    assert abs(rep.c0) <= 0.12 * helix.s[-1] + math.sqrt(C_MAX) + 1e-9


@pytest.mark.parametrize("m", [1.0, 2.0, 0.6])
def test_salkowski_curves_are_slant(m):
    # V_2 makes the angle arccos(m / sqrt(1 + m^2)) with e_3, so C = (1 + m^2) / m^2
    # the parameterization has a cusp at t = pi / (2 n), n = m / sqrt(1 + m^2)
    t_cusp = math.pi / 2 * math.sqrt(1 + m * m) / m
    app = analytic_apparatus(salkowski_coords(m), (0.2, 0.8 * t_cusp))
    rep = detect_slant_helix(app)
    assert rep.verdict == SLANT
    assert rep.C == pytest.approx((1 + m * m) / (m * m), rel=1e-8)
    assert abs(abs(rep.axis[2]) - 1) < 1e-8
    assert rep.oracle["found"]
    assert abs(rep.oracle["angle_min"] - rep.theta) < 1e-7
    sigma = sigma_from_apparatus(app)
    assert check_sigma_equivalence(rep.g, sigma) < 1e-6


def test_sigma_matches_symbolic_oracle():
    s = sympy.symbols("s")
    k, t = 2 * sympy.sin(s), 2 * sympy.cos(s)
    expr = k**2 / (k**2 + t**2) ** sympy.Rational(3, 2) * sympy.diff(t / k, s)
    f = sympy.lambdify(s, sympy.simplify(expr), "numpy")
    grid = np.linspace(0.3, 1.4, 200)
    ref = np.broadcast_to(f(grid), grid.shape)
    got = sigma_izumiya_takeuchi(2 * np.sin(grid), 2 * np.cos(grid), grid)
    np.testing.assert_allclose(got, ref, atol=5e-6)
    np.testing.assert_allclose(ref, -0.5, atol=1e-14)


def test_sigma_series_and_grid_routes_agree():
    app = constant_precession_curve(3.0, 2.0, (0.1, 0.7)).apparatus
    a = sigma_from_apparatus(app)
    b = sigma_from_apparatus(grid_only(app))
    np.testing.assert_allclose(a, -2 / 3, atol=1e-12)
    np.testing.assert_allclose(b, -2 / 3, atol=1e-6)


def test_sigma_equivalence_rejects_excluded_constant():
    with pytest.raises(CExcluded):
        check_sigma_equivalence(1.0005, np.array([1.0]))


@given(c0=st.floats(-20, 20))
def test_G_is_linear_in_c0(random_curve, c0):
    g = compute_G_basis(random_curve)
    G = g.G(c0)
    np.testing.assert_allclose(G, g.G(0.0) + c0 * (g.G(1.0) - g.G(0.0)), atol=1e-9 * max(1, abs(c0)))
    # the defining recursion holds for every integration constant
    assert recursion_residual(g, c0) < 1e-8 * max(1.0, np.abs(G).max())


@given(c0=st.floats(-10, 10), seed=st.integers(0, 50))
def test_telescoping_identity_is_universal(c0, seed):
    app = random_curvature_curve(3 + seed % 3, seed, grid_size=128).apparatus
    g = compute_G_basis(app).with_c0(c0)
    assert telescoping_identity_residual(g) < 1e-10


def test_solver_recovers_construction_constant():
    rec = random_slant_helix(4, 3)
    g = compute_G_basis(rec.apparatus)
    c0 = solve_integration_constant(g)
    assert c0 == pytest.approx(rec.c0_start, rel=1e-10, abs=1e-12)
    assert g.defect(c0) < 1e-10


def test_grid_route_agrees_with_series_route():
    rec = random_slant_helix(3, 8)
    a = detect_slant_helix(rec.apparatus)
    b = detect_slant_helix(grid_only(rec.apparatus))
    assert b.g.method == "grid"
    assert a.verdict == b.verdict == SLANT
    assert b.C == pytest.approx(a.C, rel=1e-6)


def test_characterization_residuals_on_slant_helix():
    rec = random_slant_helix(5, 2)
    g = compute_G_basis(rec.apparatus)
    g = g.with_c0(solve_integration_constant(g))
    assert verify_differential_characterization(g) < 1e-8
    ic = verify_integral_characterization(g)
    assert ic.residual < 1e-8
    n = rec.apparatus.n
    # constants of the integral form equal G_n and -G_{n-1} at the grid start
    G0 = g.G()[0]
    assert ic.A == pytest.approx(G0[n - 1], rel=1e-6)
    assert ic.B == pytest.approx(-G0[n - 2], rel=1e-6, abs=1e-9)
    assert ic.std_m / abs(ic.A) < 1e-8 and ic.std_n / abs(ic.B) < 1e-8


def test_characterization_fails_on_generic_curve(random_curve):
    rep = detect_slant_helix(random_curve)
    assert rep.verdict == NOT_SLANT
    assert rep.residuals["differential"] > 0.1 and rep.residuals["integral"] > 0.1
    assert not rep.oracle["found"]


def test_oracle_ambiguous_for_constant_frame():
    m = 40
    frames = np.tile(np.eye(3), (m, 1, 1))
    app = FrenetApparatus(np.linspace(0, 1, m), frames, np.ones((m, 2)))
    with pytest.raises(AmbiguousNullspace):
        oracle_axis_svd(app)


def test_oracle_precondition():
    app = FrenetApparatus(np.linspace(0, 1, 4), np.tile(np.eye(3), (4, 1, 1)), np.ones((4, 2)))
    with pytest.raises(PreconditionError):
        oracle_axis_svd(app)


def test_axis_recovery_detects_wrong_angle():
    rec = random_slant_helix(3, 4)
    g = compute_G_basis(rec.apparatus)
    g = g.with_c0(solve_integration_constant(g))
    U, spread = recover_axis_from_G(g, rec.apparatus, rec.theta)
    assert spread < 1e-8 and abs(abs(U @ rec.axis) - 1) < 1e-10
    with pytest.raises(AxisUnstable):
        recover_axis_from_G(g, rec.apparatus, rec.theta / 2)


def test_vanishing_curvature_is_rejected():
    m = 40
    k = np.ones((m, 2))
    k[7, 1] = 0.0
    app = FrenetApparatus(np.linspace(0, 1, m), np.tile(np.eye(3), (m, 1, 1)), k)
    with pytest.raises(CurvatureVanishes) as exc:
        compute_G_basis(app)
    assert exc.value.index == 2


def test_report_schema(helix):
    out = detect_slant_helix(helix).to_json()
    assert out["schema"] == 1
    assert set(out) >= {"verdict", "C", "theta_rad", "axis", "defect", "c0", "residuals", "oracle"}
    assert set(out["residuals"]) == {"differential", "integral", "telescoping"}
