"""
Slant-helix analysis: the G-sequence, its constancy test, axis recovery and
the differential / integral characterizations.

For a unit-speed curve with nonvanishing curvatures define

    G_1 = c0 + int kappa_1,   G_2 = 1,   G_3 = (kappa_1 / kappa_2) G_1,
    G_i = (kappa_{i-2} G_{i-2} + G_{i-1}') / kappa_{i-1},   4 <= i <= n.

The curve is a slant helix (V_2 at a constant angle theta to a fixed unit U)
exactly when ``sum_i G_i**2`` is a constant ``C > 1`` for some c0; then
``C = sec(theta)**2`` and ``U = cos(theta) * sum_i G_i V_i``.

Every G_i is affine in the free constant c0, so the sequence is stored as
``G = P + c0 * Q``.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq, minimize_scalar

from . import taylor as T
from .errors import AmbiguousNullspace, AxisUnstable, CExcluded, CurvatureVanishes, PreconditionError
from .frenet import EPS_KAPPA
from .numerics import cumulative_integral, cumulative_integral_series, differentiate

DEFECT_TOL = 1e-3
C_MARGIN = 1e-3
ORACLE_THRESHOLD = 1e-6
ORTHOGONAL_TOL = 1e-6
# largest sum-of-squares constant the G-test searches for (theta ~ 88.19 deg);
# beyond it the defect degenerates towards the theta = pi/2 limit
C_MAX = 1000.0

SLANT = "slant_helix"
DEGENERATE = "degenerate_orthogonal_axis"
NOT_SLANT = "not_slant_helix"


@dataclass(frozen=True, eq=False)
class GSequence:
    """Basis sequences with ``G_i = P_i + c0 Q_i`` on an arc-length grid.

    ``P``, ``Q``, ``dP``, ``dQ`` have shape (m, n); column ``i - 1`` holds
    ``G_i`` or its arc-length derivative. `method` records how derivatives
    were obtained: ``"series"`` (pointwise Taylor data) or ``"grid"``
    (fourth-order differences).
    """

    s: np.ndarray
    kappa: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    dP: np.ndarray
    dQ: np.ndarray
    method: str
    c0: float = None
    # Taylor data kept for the integral check: list of (P_series, Q_series)
    series: list = field(default=None, repr=False)
    kappa_series: np.ndarray = field(default=None, repr=False)

    @property
    def n(self):
        return self.P.shape[1]

    def _c(self, c0):
        c = self.c0 if c0 is None else c0
        if c is None:
            raise ValueError("integration constant not set; call solve_integration_constant")
        return c

    def G(self, c0=None):
        return self.P + self._c(c0) * self.Q

    def dG(self, c0=None):
        return self.dP + self._c(c0) * self.dQ

    def sum_sq(self, c0=None):
        G = self.G(c0)
        return (G * G).sum(axis=1)

    def defect(self, c0=None):
        f = self.sum_sq(c0)
        return float(f.std() / f.mean())

    @property
    def C(self):
        return float(self.sum_sq().mean())

    def with_c0(self, c0):
        return replace(self, c0=float(c0))


def _check_kappa(app, eps_kappa):
    bad = np.abs(app.kappa) <= eps_kappa
    if np.any(bad):
        j, i = np.argwhere(bad)[0]
        raise CurvatureVanishes(
            f"kappa_{i + 1} vanishes at s = {app.s[j]:.6g}", s=float(app.s[j]), index=int(i + 1)
        )


def _series_basis(app):
    """G recursion in Taylor arithmetic; returns per-index (P, Q) series."""
    ks = app.kappa_series
    L, m, _ = ks.shape
    n = app.n
    k = [None] + [ks[..., i] for i in range(n - 1)]  # k[i] is kappa_i
    P1_0 = cumulative_integral_series(ks[..., 0], app.s)
    P = [None, T.integrate(k[1], P1_0), T.as_series(np.ones(m), L + 1)]
    Q = [None, T.as_series(np.ones(m), L + 1), np.zeros((L + 1, m))]
    for seq in (P, Q):
        if n >= 3:
            seq.append(T.div(T.mul(k[1], seq[1]), k[2]))
        for i in range(4, n + 1):
            num = T.mul(k[i - 2], seq[i - 2])
            d = T.deriv(seq[i - 1])
            kk = min(num.shape[0], d.shape[0])
            seq.append(T.div(num[:kk] + d[:kk], k[i - 1]))
    return P[1:], Q[1:]


def compute_G_basis(app, eps_kappa=EPS_KAPPA):
    """Basis sequences P, Q of the G recursion on the apparatus grid.

    Uses the apparatus' curvature Taylor data when it carries enough terms,
    otherwise fourth-order grid differences.
    """
    _check_kappa(app, eps_kappa)
    n, m = app.n, app.m
    if n < 3:
        raise PreconditionError("the G-sequence needs n >= 3")
    ks = app.kappa_series
    if ks is not None and ks.shape[0] >= n - 1:
        Ps, Qs = _series_basis(app)
        P = np.stack([p[0] for p in Ps], axis=1)
        Q = np.stack([q[0] for q in Qs], axis=1)
        dP = np.stack([p[1] for p in Ps], axis=1)
        dQ = np.stack([q[1] for q in Qs], axis=1)
        return GSequence(app.s, app.kappa, P, Q, dP, dQ, "series", series=list(zip(Ps, Qs)), kappa_series=ks)

    s, k = app.s, app.kappa
    kap = [None] + [k[:, i] for i in range(n - 1)]
    out = []
    for g1, dg1, g2 in ((cumulative_integral(kap[1], s), kap[1], 1.0), (np.ones(m), np.zeros(m), 0.0)):
        G = [None, g1, np.full(m, g2)]
        dG = [None, dg1, np.zeros(m)]
        G.append(kap[1] * G[1] / kap[2])
        dG.append(differentiate(G[3], s))
        for i in range(4, n + 1):
            G.append((kap[i - 2] * G[i - 2] + dG[i - 1]) / kap[i - 1])
            dG.append(differentiate(G[i], s))
        out.append((np.stack(G[1:], axis=1), np.stack(dG[1:], axis=1)))
    (P, dP), (Q, dQ) = out
    return GSequence(s, k, P, Q, dP, dQ, "grid")


def _defect_polys(g):
    """Numerator var(f) and mean(f) of the defect as polynomials in c0."""
    a = (g.P * g.P).sum(axis=1)
    b = (g.P * g.Q).sum(axis=1)
    q = (g.Q * g.Q).sum(axis=1)
    da, db, dq = a - a.mean(), b - b.mean(), q - q.mean()
    var = Polynomial(
        [
            np.mean(da * da),
            4 * np.mean(da * db),
            4 * np.mean(db * db) + 2 * np.mean(da * dq),
            4 * np.mean(db * dq),
            np.mean(dq * dq),
        ]
    )
    mean = Polynomial([a.mean(), 2 * b.mean(), q.mean()])
    return var, mean


def _stationarity(g):
    """``c0 -> var'(c0) mean(c0) - 2 var(c0) mean'(c0)``, evaluated from the data."""
    a = (g.P * g.P).sum(axis=1)
    b = (g.P * g.Q).sum(axis=1)
    q = (g.Q * g.Q).sum(axis=1)

    def h(c):
        f = a + 2 * c * b + c * c * q
        df = 2 * b + 2 * c * q
        dev, ddev = f - f.mean(), df - df.mean()
        return 2 * np.mean(dev * ddev) * f.mean() - 2 * np.mean(dev * dev) * df.mean()

    return h


def solve_integration_constant(g, bracket=None, n_coarse=401, rtol=1e-10, c_max=C_MAX):
    """The c0 minimizing the constancy defect of ``sum_i (P_i + c0 Q_i)**2``.

    The defect is evaluated on a coarse bracket and at the real stationary
    points of ``var / mean**2`` (a degree-6 polynomial condition) inside it;
    the best candidate is refined by bounded Brent iteration. A flat
    objective returns the bracket midpoint.

    The default bracket ``|c0| <= max|P_1| + sqrt(c_max)`` covers every
    slant helix with ``C <= c_max``: since ``G_1**2 <= C``, the value
    ``c0 = G_1(s_0)`` cannot be larger.
    """
    if bracket is None:
        half = float(np.abs(g.P[:, 0]).max()) + math.sqrt(c_max)
        bracket = (-half, half)
    lo, hi = bracket
    grid = np.linspace(lo, hi, n_coarse)

    def defect(c):
        return g.defect(c)

    vals = np.array([defect(c) for c in grid])
    if np.ptp(vals) < 1e-12:
        return 0.5 * (lo + hi)
    var, mean = _defect_polys(g)
    D = mean * mean
    stat = var.deriv() * D - var * D.deriv()
    cands = list(grid[np.argsort(vals)[:3]])
    if stat.degree() > 0:
        r = stat.roots()
        cands += [
            float(x.real) for x in r if abs(x.imag) <= 1e-8 * max(1.0, abs(x)) and lo <= x.real <= hi
        ]
    scored = sorted((defect(c), c) for c in cands if np.isfinite(c))
    best = scored[0][1]
    h = _stationarity(g)
    # a root of d(var / mean**2)/dc0 is resolved to full precision, whereas
    # the flat minimum of the defect itself is only located to about
    # sqrt(eps); the bracket grows from a tight window so that the polish
    # lands on the root nearest the candidate
    coarse = (hi - lo) / (n_coarse - 1)
    w = 1e-9 * max(1.0, abs(best))
    while w <= coarse:
        a_lo, a_hi = max(lo, best - w), min(hi, best + w)
        if h(a_lo) * h(a_hi) < 0:
            c = float(brentq(h, a_lo, a_hi, xtol=1e-15 * max(1.0, abs(best)), rtol=4 * np.finfo(float).eps))
            if defect(c) <= scored[0][0] * (1 + 1e-6) + 1e-15:
                return c
            break
        w *= 10.0
    res = minimize_scalar(
        defect,
        bounds=(max(lo, best - coarse), min(hi, best + coarse)),
        method="bounded",
        options={"xatol": rtol * max(1.0, abs(best))},
    )
    if res.success and res.fun <= scored[0][0]:
        best = float(res.x)
    return float(best)


@dataclass
class OracleResult:
    axis: np.ndarray
    angles: np.ndarray
    ratio: float
    singular_values: np.ndarray

    @property
    def found(self):
        return self.axis is not None


def _normal_derivative(app):
    F, k = app.frames, app.kappa
    W = -k[:, 0, None] * F[:, 0]
    if app.n >= 3:
        W = W + k[:, 1, None] * F[:, 2]
    return W


def oracle_axis_svd(app, threshold=ORACLE_THRESHOLD):
    """Axis making a constant angle with V_2, found without the G-sequence.

    A constant ``<V_2, U>`` means ``U`` is orthogonal to every
    ``V_2' = -kappa_1 V_1 + kappa_2 V_3``; the axis is the right singular
    vector of the stacked ``V_2'`` samples with the smallest singular value,
    accepted when ``sigma_min / sigma_max < threshold``.
    """
    if app.m < app.n + 2:
        raise PreconditionError(f"need at least n + 2 = {app.n + 2} grid points")
    W = _normal_derivative(app)
    _, sv, vt = np.linalg.svd(W, full_matrices=False)
    ratio = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if ratio >= threshold:
        return OracleResult(None, None, ratio, sv)
    # a second null direction, either close to the first or itself below threshold
    if sv.size > 1 and (sv[-2] <= 10.0 * sv[-1] or sv[-2] / sv[0] < threshold):
        raise AmbiguousNullspace(
            f"two near-null singular values ({sv[-2]:.3e}, {sv[-1]:.3e}); axis not unique"
        )
    U = vt[-1]
    cosang = app.frames[:, 1] @ U
    if cosang.mean() < 0:
        U, cosang = -U, -cosang
    return OracleResult(U, np.arccos(np.clip(cosang, -1.0, 1.0)), ratio, sv)


def recover_axis_from_G(g, app, theta, c0=None, max_spread=1e-2):
    """Axis ``U = cos(theta) sum_i G_i V_i`` averaged over the grid.

    Returns ``(U, spread)``; `spread` is the largest distance of a pointwise
    estimate from the mean.
    """
    G = g.G(c0)
    Uj = math.cos(theta) * np.einsum("ji,jik->jk", G, app.frames)
    U = Uj.mean(axis=0)
    spread = float(np.linalg.norm(Uj - U, axis=1).max())
    if spread > max_spread:
        raise AxisUnstable(f"pointwise axis estimates spread by {spread:.3e}")
    norm = float(np.linalg.norm(U))
    if abs(norm - 1.0) > 1e-3:
        raise AxisUnstable(f"axis norm {norm:.6f} deviates from 1")
    return U / norm, spread


def _ratio_derivative(k1, k2, s, series=None):
    if series is not None:
        r = T.div(series[..., 1], series[..., 0])
        return r[0], r[1]
    r = k2 / k1
    return r, differentiate(r, s)


def sigma_izumiya_takeuchi(kappa1, kappa2, s=None, eps_kappa=EPS_KAPPA):
    """``kappa^2 / (kappa^2 + tau^2)^(3/2) * (tau / kappa)'`` in E^3.

    `kappa1`, `kappa2` are either grid samples (then `s` is required and the
    derivative uses fourth-order differences) or Taylor coefficient arrays of
    shape (L, m) with ``L >= 2``.
    """
    kappa1 = np.asarray(kappa1, dtype=float)
    kappa2 = np.asarray(kappa2, dtype=float)
    if kappa1.ndim == 2:
        series = np.stack([kappa1, kappa2], axis=-1)
        k1, k2 = kappa1[0], kappa2[0]
    else:
        if s is None:
            raise ValueError("grid samples need the arc-length grid s")
        series = None
        k1, k2 = kappa1, kappa2
    if np.any(np.abs(k1) <= eps_kappa):
        j = int(np.flatnonzero(np.abs(k1) <= eps_kappa)[0])
        raise CurvatureVanishes("kappa_1 vanishes", s=None if s is None else float(s[j]), index=1)
    _, dr = _ratio_derivative(k1, k2, s, series)
    return k1**2 / (k1**2 + k2**2) ** 1.5 * dr


def sigma_from_apparatus(app):
    if app.n != 3:
        raise PreconditionError("sigma is defined for n = 3")
    ks = app.kappa_series
    if ks is not None and ks.shape[0] >= 2:
        return sigma_izumiya_takeuchi(ks[..., 0], ks[..., 1])
    return sigma_izumiya_takeuchi(app.kappa[:, 0], app.kappa[:, 1], app.s)


def check_sigma_equivalence(g, sigma, margin=C_MARGIN):
    """``max | |sigma| - 1 / sqrt(C - 1) |`` for an n = 3 slant helix."""
    C = g if isinstance(g, (int, float)) else g.C
    if C <= 1.0 + margin:
        raise CExcluded(f"C = {C:.6g} is within the excluded neighbourhood of 1")
    return float(np.abs(np.abs(sigma) - 1.0 / math.sqrt(C - 1.0)).max())


def verify_differential_characterization(g, app=None):
    """Relative residual of ``G_n' + kappa_{n-1} G_{n-1} = 0``."""
    if g.s.size < 5:
        raise PreconditionError("need at least 5 grid points")
    G, dG = g.G(), g.dG()
    rhs = g.kappa[:, -1] * G[:, -2]
    scale = float(np.abs(rhs).max())
    return float(np.abs(dG[:, -1] + rhs).max() / scale)


def telescoping_identity_residual(g, app=None):
    """Relative residual of ``sum_{i<=n-2} G_i G_i' = kappa_{n-2} G_{n-2} G_{n-1}``."""
    if g.n < 3:
        raise PreconditionError("need n >= 3")
    G, dG = g.G(), g.dG()
    n = g.n
    lhs = (G[:, : n - 2] * dG[:, : n - 2]).sum(axis=1)
    rhs = g.kappa[:, n - 3] * G[:, n - 3] * G[:, n - 2]
    return float(np.abs(lhs - rhs).max() / np.abs(rhs).max())


def recursion_residual(g, c0=None):
    """Max of ``|kappa_{i-1} G_i - kappa_{i-2} G_{i-2} - G_{i-1}'|`` over 4 <= i <= n."""
    G, dG, k = g.G(c0), g.dG(c0), g.kappa
    worst = 0.0
    for i in range(4, g.n + 1):
        r = k[:, i - 2] * G[:, i - 1] - k[:, i - 3] * G[:, i - 3] - dG[:, i - 2]
        worst = max(worst, float(np.abs(r).max()))
    return worst


@dataclass
class IntegralCheck:
    phi: np.ndarray
    A: float
    B: float
    m: np.ndarray
    n: np.ndarray
    std_m: float
    std_n: float
    residual: float


def verify_integral_characterization(g, app=None):
    """Integral form of the slant-helix condition.

    With ``phi = int kappa_{n-1}``, ``f = kappa_{n-2} G_{n-2}``,
    ``I_s = int f sin(phi)`` and ``I_c = int f cos(phi)`` (all from the grid
    start), fits ``G_{n-1} = (A - I_s) sin(phi) - (B + I_c) cos(phi)`` by least
    squares and evaluates

        m(s) = G_n cos(phi) + G_{n-1} sin(phi) + I_s,
        n(s) = G_n sin(phi) - G_{n-1} cos(phi) - I_c,

    which are constant (equal to A and B) exactly for a slant helix.
    """
    s = g.s
    n = g.n
    G = g.G()
    if g.method == "series":
        ks = g.kappa_series
        c0 = g.c0
        Gs = [p + c0 * q for p, q in g.series]
        phi0 = cumulative_integral_series(ks[..., n - 2], s)
        phis = T.integrate(ks[..., n - 2], phi0)
        sin_s, cos_s = T.sincos(phis)
        f = T.mul(ks[..., n - 3], Gs[n - 3])
        Is = cumulative_integral_series(T.mul(f, sin_s), s)
        Ic = cumulative_integral_series(T.mul(f, cos_s), s)
        phi = phi0
    else:
        phi = cumulative_integral(g.kappa[:, n - 2], s)
        f = g.kappa[:, n - 3] * G[:, n - 3]
        Is = cumulative_integral(f * np.sin(phi), s)
        Ic = cumulative_integral(f * np.cos(phi), s)
    sp, cp = np.sin(phi), np.cos(phi)
    y = G[:, n - 2] + Is * sp + Ic * cp
    M = np.column_stack([sp, -cp])
    (A, B), *_ = np.linalg.lstsq(M, y, rcond=None)
    recon = (A - Is) * sp - (B + Ic) * cp
    residual = float(np.abs(G[:, n - 2] - recon).max() / np.abs(G[:, n - 2]).max())
    mm = G[:, n - 1] * cp + G[:, n - 2] * sp + Is
    nn = G[:, n - 1] * sp - G[:, n - 2] * cp - Ic
    return IntegralCheck(phi, float(A), float(B), mm, nn, float(mm.std()), float(nn.std()), residual)


@dataclass
class DetectionReport:
    verdict: str
    C: float
    theta: float
    axis: np.ndarray
    defect: float
    c0: float
    residuals: dict
    oracle: dict
    axis_spread: float = float("nan")
    g: GSequence = field(default=None, repr=False)

    def to_json(self):
        return {
            "schema": 1,
            "verdict": self.verdict,
            "C": self.C,
            "theta_rad": self.theta,
            "axis": [] if self.axis is None else [float(x) for x in self.axis],
            "defect": self.defect,
            "c0": self.c0,
            "residuals": dict(self.residuals),
            "oracle": dict(self.oracle),
        }


def detect_slant_helix(
    app,
    tol=DEFECT_TOL,
    margin=C_MARGIN,
    eps_kappa=EPS_KAPPA,
    oracle_threshold=ORACLE_THRESHOLD,
    orthogonal_tol=ORTHOGONAL_TOL,
    c_max=C_MAX,
):
    """Classify an apparatus as slant helix, orthogonal-axis degenerate, or neither.

    Slant iff the constancy defect of ``sum G_i**2`` (at the optimal c0) is
    below `tol` and its mean exceeds ``1 + margin``. Otherwise the SVD oracle
    decides whether V_2 is everywhere orthogonal to a fixed axis (the
    ``theta = pi / 2`` family the G-test cannot see).
    """
    g = compute_G_basis(app, eps_kappa)
    c0 = solve_integration_constant(g, c_max=c_max)
    g = g.with_c0(c0)
    defect = g.defect()
    C = g.C
    residuals = {
        "differential": verify_differential_characterization(g),
        "integral": verify_integral_characterization(g).residual,
        "telescoping": telescoping_identity_residual(g),
    }
    oracle = {"found": False, "angle_min": None, "angle_max": None, "ratio": None, "ambiguous": False}
    res = None
    try:
        res = oracle_axis_svd(app, oracle_threshold)
        oracle["ratio"] = res.ratio
    except AmbiguousNullspace:
        oracle["ambiguous"] = True
    if res is not None and res.found:
        oracle.update(found=True, angle_min=float(res.angles.min()), angle_max=float(res.angles.max()))

    if defect < tol and C > 1.0 + margin:
        theta = math.acos(1.0 / math.sqrt(C))
        U, spread = recover_axis_from_G(g, app, theta)
        return DetectionReport(SLANT, C, theta, U, defect, c0, residuals, oracle, spread, g)
    if res is not None and res.found:
        cosang = np.cos(res.angles)
        if np.abs(cosang).max() < orthogonal_tol:
            return DetectionReport(DEGENERATE, C, math.pi / 2, res.axis, defect, c0, residuals, oracle, g=g)
    return DetectionReport(NOT_SLANT, C, float("nan"), None, defect, c0, residuals, oracle, g=g)
