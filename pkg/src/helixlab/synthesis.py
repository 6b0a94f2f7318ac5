"""
Curve synthesis from curvature profiles.

Curvature profiles are realized by integrating the Frenet system
``F' = K(s) F`` (rows of ``F`` are ``V_1..V_n``) together with
``alpha' = V_1``.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import taylor as T
from .curves import SampledCurve, write_curve_csv
from .errors import (
    CurvatureVanishes,
    DomainViolation,
    IntervalContainsCurvatureZero,
    NotOrthogonal,
    PreconditionError,
    StepFailure,
)
from .expr import Expression
from .frenet import EPS_KAPPA, FrenetApparatus
from .numerics import cumulative_integral_series, simpson_richardson


class CurvatureProfile:
    """Curvatures ``kappa_1 .. kappa_{n-1}`` as functions of arc length on ``[s0, s1]``.

    Parameters
    ----------
    funcs : sequence of str or Expression
        Expressions in the variable ``s``.
    domain : (float, float)
    """

    def __init__(self, funcs, domain):
        self.funcs = [f if isinstance(f, Expression) else Expression(str(f), "s") for f in funcs]
        self.domain = (float(domain[0]), float(domain[1]))
        if not self.domain[0] < self.domain[1]:
            raise ValueError("profile domain must be a nonempty interval")

    @property
    def n(self):
        return len(self.funcs) + 1

    def series(self, s, order):
        """Taylor coefficients, shape ``(order + 1, m, n - 1)``; `s` increasing."""
        s = np.asarray(s, dtype=float)
        return np.stack([f.series(s, order) for f in self.funcs], axis=-1)

    def values(self, s):
        return self.series(s, 0)[0]

    def describe(self):
        return [f.source for f in self.funcs]


def _antiderivative_from_zero(expr, s):
    """``int_0^s expr`` on an increasing, finely spaced grid `s`."""
    c = expr.series(s, 6)
    cum = cumulative_integral_series(c, s)
    if s[0] == 0.0:
        return cum
    a, b = sorted((0.0, float(s[0])))
    off = simpson_richardson(lambda x: expr(x), a, b, rtol=1e-13)
    return cum + (off if s[0] > 0 else -off)


class SlantProfile(CurvatureProfile):
    """Curvatures of a slant helix with prescribed ``kappa_1 .. kappa_{n-2}``, C and c0.

    ``G_1 = c0 + int_0^s kappa_1`` and the recursion give ``G_1 .. G_{n-1}``;
    the last function is ``G_n = sqrt(C - sum_{i<n} G_i**2)`` and the closing
    curvature ``kappa_{n-1} = (kappa_{n-2} G_{n-2} + G_{n-1}') / G_n``.
    """

    def __init__(self, funcs, domain, C, c0, margin=None):
        super().__init__(funcs, domain)
        self.C = float(C)
        self.c0 = float(c0)
        self.margin = 1e-3 * self.C if margin is None else float(margin)

    @property
    def n(self):
        return len(self.funcs) + 2

    def g_series(self, s, order):
        """Series of ``G_1 .. G_n`` and the input curvatures about each point of `s`."""
        s = np.asarray(s, dtype=float)
        n = self.n
        need = order + 2 * n - 3
        k = [None] + [f.series(s, need) for f in self.funcs]
        m = s.size
        g1 = self.c0 + _antiderivative_from_zero(self.funcs[0], s)
        G = [None, T.integrate(k[1], g1), T.as_series(np.ones(m), need + 2)]
        for i in range(3, n):
            if i == 3:
                G.append(T.div(T.mul(k[1], G[1]), k[2]))
            else:
                num = T.mul(k[i - 2], G[i - 2])
                d = T.deriv(G[i - 1])
                kk = min(num.shape[0], d.shape[0])
                G.append(T.div(num[:kk] + d[:kk], k[i - 1]))
        L = min(g.shape[0] for g in G[1:])
        rest = -sum(T.mul(g[:L], g[:L]) for g in G[1:])
        rest[0] += self.C
        bad = rest[0] <= self.margin
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            raise DomainViolation(
                f"C - sum G_i^2 = {rest[0, j]:.3e} <= margin {self.margin:.3e} at s = {s[j]:.6g}",
                s=float(s[j]),
            )
        G.append(T.sqrt(rest))
        return G[1:], k[1:]

    def series(self, s, order):
        G, k = self.g_series(s, order)
        n = self.n
        # G, k are 0-based: G[i-1] is G_i, k[i-1] is kappa_i
        num = T.mul(k[n - 3], G[n - 3])
        d = T.deriv(G[n - 2])
        kk = min(num.shape[0], d.shape[0])
        last = T.div(num[:kk] + d[:kk], G[n - 1])
        cols = [kap[: order + 1] for kap in k] + [last[: order + 1]]
        return np.stack(cols, axis=-1)

    def describe(self):
        return super().describe() + [f"slant closure (C={self.C!r}, c0={self.c0!r})"]


@dataclass
class SynthesisRecord:
    curve: SampledCurve
    apparatus: FrenetApparatus
    profile: CurvatureProfile
    family: str
    axis: np.ndarray = None
    theta: float = None
    C: float = None
    c0: float = None
    c0_start: float = None
    drift: float = 0.0
    substeps: int = 0
    params: dict = field(default_factory=dict)

    @property
    def positions(self):
        return self.curve.points

    def ground_truth(self):
        def f(x):
            return None if x is None else float(x)

        return {
            "family": self.family,
            "n": self.apparatus.n,
            "C": f(self.C),
            "theta": f(self.theta),
            "axis": None if self.axis is None else [float(v) for v in self.axis],
            "c0": f(self.c0),
            "c0_start": f(self.c0_start),
            "interval": [float(self.apparatus.s[0]), float(self.apparatus.s[-1])],
            "params": self.params,
        }

    def write(self, csv_path, json_path=None):
        """Curve CSV plus sidecar JSON with the ground-truth fields."""
        write_curve_csv(csv_path, self.curve.points, self.curve.params)
        if json_path is not None:
            Path(json_path).write_text(json.dumps(self.ground_truth(), indent=2) + "\n", encoding="utf-8")


def _skew(kappa):
    N, n1 = kappa.shape
    n = n1 + 1
    A = np.zeros((N, n, n))
    i = np.arange(n1)
    A[:, i, i + 1] = kappa
    A[:, i + 1, i] = -kappa
    return A


_GAUSS = 0.5 * np.array([1.0 - 1.0 / math.sqrt(3.0), 1.0 + 1.0 / math.sqrt(3.0)])


def _newton_schulz(F):
    """One step of ``F <- F (3I - F^T F) / 2`` towards the nearest orthogonal matrix."""
    return 1.5 * F - 0.5 * F @ (np.swapaxes(F, -1, -2) @ F)


def _orth_defect(F):
    M = F @ np.swapaxes(F, -1, -2)
    return float(np.abs(M - np.eye(F.shape[-1])).max())


def _prefix_products(E):
    """``P[q] = E[q-1] ... E[0]`` for all q (``P[0] = I``), log-depth, reprojected per level."""
    N, n, _ = E.shape
    P = np.concatenate([np.eye(n)[None], E])
    d = 1
    while d < N + 1:
        P[d:] = _newton_schulz(P[d:] @ P[:-d])
        d *= 2
    return P


def _magnus_solution(profile, a, b, steps, F0, x0):
    """Frames and points at ``steps + 1`` equispaced nodes of ``[a, b]``."""
    h = (b - a) / steps
    left = a + h * np.arange(steps)
    nodes = (left[:, None] + h * _GAUSS).ravel()
    K = _skew(profile.values(nodes)).reshape(steps, 2, F0.shape[0], F0.shape[0])
    A1, A2 = K[:, 0], K[:, 1]
    # fourth-order Magnus expansion from the two-point Gauss rule
    Omega = 0.5 * h * (A1 + A2) + (math.sqrt(3.0) / 12.0) * h * h * (A2 @ A1 - A1 @ A2)
    E = expm(Omega)
    drift = _orth_defect(E)
    E = _newton_schulz(E)
    F = _prefix_products(E) @ F0
    drift = max(drift, _orth_defect(F))
    # alpha' = V_1 by trapezoid with end correction (V_1' = kappa_1 V_2)
    k1 = profile.values(np.linspace(a, b, steps + 1))[:, 0]
    f = F[:, 0]
    df = k1[:, None] * F[:, 1]
    seg = 0.5 * h * (f[1:] + f[:-1]) - (h * h / 12.0) * (df[1:] - df[:-1])
    x = x0 + np.concatenate([np.zeros((1, f.shape[1])), np.cumsum(seg, axis=0)])
    return F, x, drift


def integrate_frenet_system(
    profile, frame0=None, x0=None, grid_size=512, tol=1e-11, series_order=None, eps_kappa=EPS_KAPPA, max_substeps=1024
):
    """Realize a curvature profile as a sampled curve with its apparatus.

    The frame equation is integrated with a fourth-order Magnus scheme (each
    step an exact rotation, reprojected onto the orthogonal group) and the
    number of substeps per output interval is doubled until two successive
    solutions agree to `tol`. Returns a :class:`SynthesisRecord` whose
    apparatus carries the integrated frames and the exact profile
    curvatures (with Taylor data of order `series_order`, default ``n``).
    """
    n = profile.n
    a, b = profile.domain
    L = b - a
    s = np.linspace(a, b, grid_size)
    order = n if series_order is None else series_order
    kser = profile.series(s, order)
    bad = np.abs(kser[0]) <= eps_kappa
    if np.any(bad):
        j, i = np.argwhere(bad)[0]
        raise CurvatureVanishes(f"kappa_{i + 1} vanishes at s = {s[j]:.6g}", s=float(s[j]), index=int(i + 1))
    F0 = np.eye(n) if frame0 is None else np.asarray(frame0, dtype=float)
    if np.abs(F0 @ F0.T - np.eye(n)).max() > 1e-10 or np.linalg.det(F0) < 0:
        raise NotOrthogonal("initial frame must be orthonormal with determinant +1")
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)

    prev = None
    r = 1
    while True:
        h = L / ((grid_size - 1) * r)
        if h < 1e-12 * L:
            raise StepFailure(f"substep {h:.3e} below 1e-12 L")
        F, x, drift = _magnus_solution(profile, a, b, r * (grid_size - 1), F0, x0)
        frames, pts = F[::r], x[::r]
        if prev is not None:
            err = max(np.abs(frames - prev[0]).max(), np.abs(pts - prev[1]).max() / max(L, 1.0))
            if err < tol:
                break
        if 2 * r > max_substeps:
            raise StepFailure(f"no convergence to {tol:g} with {r} substeps per output interval")
        prev = (frames, pts)
        r *= 2
    app = FrenetApparatus(s, frames, kser[0], kser)
    curve = SampledCurve(pts, s)
    # drift is reported per unit arc length
    return SynthesisRecord(curve, app, profile, "profile", drift=drift / h, substeps=r)


def _axis_from_G(app, G0, C):
    cos_t = 1.0 / math.sqrt(C)
    U = cos_t * (np.asarray(G0) @ app.frames[0])
    return U


def w_curve(n, deltas, L=10.0, grid_size=512, **kw):
    """Curve with constant curvatures ``deltas`` on ``[0, L]``."""
    deltas = [float(d) for d in deltas]
    if len(deltas) != n - 1:
        raise ValueError(f"need {n - 1} curvatures for n = {n}")
    if any(d == 0 for d in deltas):
        raise CurvatureVanishes("W-curve curvatures must be nonzero")
    prof = CurvatureProfile([repr(d) for d in deltas], (0.0, float(L)))
    rec = integrate_frenet_system(prof, grid_size=grid_size, **kw)
    rec.family = "w_curve"
    rec.params = {"deltas": deltas, "L": float(L)}
    return rec


def constant_precession_curve(omega, mu, interval=(0.3, 2.8), grid_size=512, **kw):
    """``kappa_1 = omega sin(mu s)``, ``kappa_2 = omega cos(mu s)`` on `interval`.

    A slant helix with ``sigma = -mu / omega`` and ``C = 1 + omega**2 / mu**2``.
    """
    omega, mu = float(omega), float(mu)
    if omega == 0 or mu == 0:
        raise PreconditionError("omega and mu must be nonzero")
    a, b = (float(v) for v in interval)
    gap = 0.05 / abs(mu)
    # zeros of sin(mu s) sit at k pi / mu
    k_lo = math.floor((min(a, b) - gap) * abs(mu) / math.pi)
    k_hi = math.ceil((max(a, b) + gap) * abs(mu) / math.pi)
    for k in range(k_lo, k_hi + 1):
        z = k * math.pi / abs(mu)
        if a - gap <= z <= b + gap:
            raise IntervalContainsCurvatureZero(
                f"kappa_1 = omega sin(mu s) vanishes at s = {z:.6g} (within {gap:.3g} of the interval)", s=z
            )
    mid = 0.5 * (a + b)
    if omega * math.sin(mu * mid) < 0:
        raise DomainViolation("omega sin(mu s) must be positive on the interval", s=mid)
    prof = CurvatureProfile([f"{omega!r}*sin({mu!r}*s)", f"{omega!r}*cos({mu!r}*s)"], (a, b))
    rec = integrate_frenet_system(prof, grid_size=grid_size, **kw)
    C = 1.0 + omega**2 / mu**2
    G0 = [-(omega / mu) * math.cos(mu * a), 1.0, -(omega / mu) * math.sin(mu * a)]
    rec.family = "constant_precession"
    rec.C = C
    rec.theta = math.acos(1.0 / math.sqrt(C))
    rec.axis = _axis_from_G(rec.apparatus, G0, C)
    rec.c0 = -omega / mu
    rec.c0_start = G0[0]
    rec.params = {"omega": omega, "mu": mu, "sigma": -mu / omega}
    return rec


def synthesize_slant_helix(n, profiles, C, c0, interval, grid_size=512, margin=None, **kw):
    """Slant helix in E^n with prescribed ``kappa_1 .. kappa_{n-2}``, constant C and c0.

    ``c0`` is the value of ``G_1`` at arc length 0 (so ``G_1 = c0 + int_0^s kappa_1``).
    """
    if n < 3:
        raise PreconditionError("slant helices need n >= 3")
    C = float(C)
    if not C > 1.0:
        raise DomainViolation(f"C must exceed 1, got {C!r}")
    profiles = list(profiles)
    if len(profiles) != n - 2:
        raise ValueError(f"need {n - 2} curvature profiles for n = {n}")
    prof = SlantProfile(profiles, interval, C, c0, margin)
    rec = integrate_frenet_system(prof, grid_size=grid_size, **kw)
    G, _ = prof.g_series(rec.apparatus.s[:1], 0)
    G0 = [g[0, 0] for g in G]
    rec.family = "slant"
    rec.C = C
    rec.theta = math.acos(1.0 / math.sqrt(C))
    rec.axis = _axis_from_G(rec.apparatus, G0, C)
    rec.c0 = float(c0)
    rec.c0_start = float(G0[0])
    rec.params = {"profiles": prof.describe()[:-1], "interval": [float(v) for v in interval]}
    return rec


def _random_positive_expr(rng, smoothness, amp=(0.5, 1.5), wiggle=0.3, terms=3):
    a = float(rng.uniform(*amp))
    parts = []
    for k in range(1, terms + 1):
        b = float(rng.normal(0.0, wiggle / k))
        w = k / float(smoothness)
        ph = float(rng.uniform(0.0, 2 * math.pi))
        parts.append(f"({b!r})*sin({w!r}*s + {ph!r})")
    return f"({a!r})*exp(" + " + ".join(parts) + ")"


def random_curvature_curve(n, seed, smoothness=1.0, L=10.0, grid_size=512, **kw):
    """Generic negative control: positive smooth random curvatures on ``[0, L]``."""
    if n < 3:
        raise PreconditionError("need n >= 3")
    rng = np.random.default_rng(seed)
    funcs = [_random_positive_expr(rng, smoothness) for _ in range(n - 1)]
    rec = integrate_frenet_system(CurvatureProfile(funcs, (0.0, float(L))), grid_size=grid_size, **kw)
    rec.family = "random"
    rec.params = {"seed": int(seed), "smoothness": float(smoothness), "L": float(L), "profiles": funcs}
    return rec


def random_slant_helix(n, seed, C_range=(2.0, 50.0), grid_size=512, max_tries=200, **kw):
    """Slant helix with random smooth ``kappa_1 .. kappa_{n-2}`` and random C.

    Draws are rejected until the closure is admissible: the domain condition
    holds with margin and the constructed ``kappa_{n-1}`` stays away from
    zero (at least 2% of its maximum modulus).
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        C = float(rng.uniform(*C_range))
        funcs = [_random_positive_expr(rng, 1.0, wiggle=0.2) for _ in range(n - 2)]
        root = math.sqrt(C - 1.0)
        c0 = float(rng.uniform(0.15, 0.4)) * root
        # arc length for int kappa_1 to cover a random share of the admissible range
        L = float(rng.uniform(0.2, 0.45)) * root
        prof = SlantProfile(funcs, (0.0, L), C, c0)
        try:
            kap = prof.series(np.linspace(0.0, L, 257), 0)[0]
        except DomainViolation:
            continue
        last = np.abs(kap[:, -1])
        if not np.all(np.isfinite(last)) or last.min() < 0.02 * last.max():
            continue
        # keep G_{n-1}(s_0) away from zero; it fixes one of the integral-check constants
        G, _ = prof.g_series(np.zeros(1), 0)
        if abs(G[n - 2][0, 0]) < 0.05:
            continue
        try:
            rec = synthesize_slant_helix(n, funcs, C, c0, (0.0, L), grid_size=grid_size, **kw)
        except (DomainViolation, CurvatureVanishes):
            continue
        rec.params["seed"] = int(seed)
        return rec
    raise DomainViolation(f"no admissible slant helix after {max_tries} draws (seed {seed})")


def _default_slant(n, C, c0, interval):
    root = math.sqrt(C - 1.0) if C > 1.0 else 0.0
    c0 = 0.2 * root if c0 is None else c0
    interval = (0.0, 0.4 * root) if interval is None else interval
    return c0, interval


def synthesize(family, n=3, seed=0, grid_size=512, **params):
    """Dispatch on `family` (``w_curve``, ``constant_precession``, ``slant``, ``random``)."""
    if family == "w_curve":
        deltas = params.get("deltas")
        if deltas is None:
            rng = np.random.default_rng(seed)
            deltas = list(rng.uniform(0.5, 2.0, n - 1))
        return w_curve(n, deltas, L=params.get("L", 20.0), grid_size=grid_size)
    if family == "constant_precession":
        return constant_precession_curve(
            params.get("omega", 2.0), params.get("mu", 1.0), params.get("interval", (0.3, 1.4)), grid_size=grid_size
        )
    if family == "slant":
        C = float(params.get("C", 30.0))
        if not C > 1.0:
            raise DomainViolation(f"C must exceed 1, got {C!r}")
        profiles = params.get("profiles") or ["1"] * (n - 2)
        c0, interval = _default_slant(n, C, params.get("c0"), params.get("interval"))
        return synthesize_slant_helix(n, profiles, C, c0, interval, grid_size=grid_size)
    if family == "random":
        return random_curvature_curve(
            n, seed, smoothness=params.get("smoothness", 1.0), L=params.get("L", 10.0), grid_size=grid_size
        )
    raise ValueError(f"unknown family {family!r}")


def slant_corpus(n, count, seed=0, grid_size=512):
    """`count` random slant helices in E^n with seeds ``seed, seed + 1, ...``."""
    return [random_slant_helix(n, seed + k, grid_size=grid_size) for k in range(count)]


def w_curve_corpus(n, count, seed=0, L=20.0, grid_size=512):
    """W-curves with constants drawn from ``[0.5, 2]``."""
    rng = np.random.default_rng(seed)
    return [w_curve(n, list(rng.uniform(0.5, 2.0, n - 1)), L=L, grid_size=grid_size) for _ in range(count)]


def negative_corpus(dims, count, seed=0, grid_size=512):
    """`count` random-curvature curves cycling through the dimensions `dims`."""
    dims = list(dims)
    return [random_curvature_curve(dims[k % len(dims)], seed + k, grid_size=grid_size) for k in range(count)]
