"""
Frenet frames and curvatures of unit-speed curves in E^n.

The frame is obtained by modified Gram-Schmidt (with one reorthogonalization
pass) on the derivative jet, carried out in truncated Taylor arithmetic. Every
frame vector is therefore known as a local series, and the curvatures
``kappa_i = <V_i', V_{i+1}>`` come out together with their derivatives.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import taylor as T
from .errors import DegenerateJet, NumericalError, PreconditionError

log = logging.getLogger(__name__)

EPS_KAPPA = 1e-10


@dataclass(frozen=True, eq=False)
class FrenetApparatus:
    """Frames and curvatures on an arc-length grid.

    Attributes
    ----------
    s : ndarray, shape (m,)
    frames : ndarray, shape (m, n, n)
        ``frames[j, i]`` is ``V_{i+1}(s_j)``.
    kappa : ndarray, shape (m, n - 1)
    kappa_series : ndarray, shape (L, m, n - 1), optional
        Normalized Taylor coefficients of each curvature about each grid
        point; ``kappa_series[0] == kappa``. ``None`` when only pointwise
        values are known and derivatives must come from grid differences.
    """

    s: np.ndarray
    frames: np.ndarray
    kappa: np.ndarray
    kappa_series: np.ndarray = None

    @property
    def n(self):
        return self.frames.shape[1]

    @property
    def m(self):
        return self.s.size

    def components(self, U):
        """Frame components ``a_i(s) = <V_i(s), U>``, shape (m, n)."""
        return self.frames @ np.asarray(U, dtype=float)

    def orthonormality_defect(self):
        G = self.frames @ np.swapaxes(self.frames, 1, 2)
        return float(np.abs(G - np.eye(self.n)).max())

    def orientation(self):
        return np.linalg.det(self.frames)

    def transformed(self, R):
        """The apparatus of the rigidly moved curve ``R x + c``."""
        R = np.asarray(R, dtype=float)
        return FrenetApparatus(self.s, self.frames @ R.T, self.kappa, self.kappa_series)


def _dot(u, v):
    return T.mul(u, v).sum(axis=-1)


def _project_out(w, basis):
    for _ in range(2):
        for v in basis:
            coef = _dot(w, v)
            p = T.mul(coef[..., None], v)
            k = min(w.shape[0], p.shape[0])
            w = w[:k] - p[:k]
    return w


def _completion(vectors):
    """Unit vector completing rows of `vectors` (m, n-1, n) to a positive frame."""
    A = np.swapaxes(vectors, 1, 2)
    Q, _ = np.linalg.qr(A, mode="complete")
    q = Q[:, :, -1]
    full = np.concatenate([vectors, q[:, None, :]], axis=1)
    sign = np.sign(np.linalg.det(full))
    sign[sign == 0] = 1.0
    return q * sign[:, None]


def frenet_series(X, s=None, eps_kappa=EPS_KAPPA, length_scale=1.0, check_last=False):
    """Frame and curvature series from a unit-speed position series.

    Parameters
    ----------
    X : ndarray, shape (K + 1, m, n)
        Normalized Taylor coefficients of ``alpha(s_j + sigma)``, ``K >= n``.
    s : ndarray, optional
        Grid values used only in error messages.
    length_scale : float
        Characteristic length fixing the absolute floor of the pivot test.

    Returns
    -------
    V : list of ndarray
        ``V[i]`` has shape ``(L_i, m, n)``.
    kappa : ndarray, shape (K - n + 1, m, n - 1)
    """
    K1, m, n = X.shape
    if K1 - 1 < n:
        raise ValueError(f"need a jet of order {n}, got {K1 - 1}")
    D = []
    cur = X
    for _ in range(n):
        cur = T.deriv(cur)
        D.append(cur)

    def pivot_floor(k):
        mag = np.linalg.norm(D[k - 1][0], axis=-1)
        return eps_kappa * np.maximum(mag, length_scale ** (-(k - 1)))

    V = []
    pivots = []
    for k in range(1, n):
        w = _project_out(D[k - 1], V)
        with np.errstate(invalid="ignore", divide="ignore"):
            r = T.sqrt(_dot(w, w))
        bad = r[0] <= pivot_floor(k)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            where = f" at s = {s[j]:.6g}" if s is not None else ""
            raise DegenerateJet(
                f"Gram-Schmidt pivot {k} vanishes{where} (kappa_{k - 1} ~ 0)",
                s=None if s is None else float(s[j]),
                index=k - 1,
            )
        pivots.append(r)
        V.append(T.div(w, r[..., None]))
    q = _completion(np.stack([v[0] for v in V], axis=1))
    w = _project_out(T.as_series(q, V[-1].shape[0]), V)
    V.append(T.div(w, T.sqrt(_dot(w, w))[..., None]))
    L = K1 - n
    kappa = np.stack([_dot(T.deriv(V[i]), V[i + 1])[:L] for i in range(n - 1)], axis=-1)
    if check_last:
        prod = np.abs(kappa[0, :, -1]) * (pivots[-1][0] if pivots else 1.0)
        bad = prod <= pivot_floor(n)
        if np.any(bad):
            j = int(np.flatnonzero(bad)[0])
            where = f" at s = {s[j]:.6g}" if s is not None else ""
            raise DegenerateJet(
                f"kappa_{n - 1} ~ 0{where}: curve lies in a lower-dimensional subspace",
                s=None if s is None else float(s[j]),
                index=n - 1,
            )
    return V, kappa


def gram_schmidt_frame(jet, eps_kappa=EPS_KAPPA):
    """Frenet frame and curvatures at one point from ``[alpha', ..., alpha^(n)]``.

    Returns ``(frame, kappa)`` with ``frame`` of shape (n, n), rows
    ``V_1 .. V_n``, and ``kappa`` of length ``n - 1``.
    """
    jet = np.asarray(jet, dtype=float)
    n = jet.shape[1]
    if jet.shape[0] != n:
        raise ValueError(f"expected {n} derivative vectors, got {jet.shape[0]}")
    X = np.zeros((n + 1, 1, n))
    f = 1.0
    for k in range(1, n + 1):
        f *= k
        X[k, 0] = jet[k - 1] / f
    V, kappa = frenet_series(X, eps_kappa=eps_kappa)
    frame = np.stack([v[0, 0] for v in V])
    return frame, kappa[0, 0]


def compute_apparatus(curve, grid_size=256, eps_kappa=EPS_KAPPA, trim=0.0, series_order=None):
    """Frenet apparatus of a :class:`~helixlab.curves.UnitSpeedCurve` on a uniform grid.

    `trim` drops that fraction of the arc at each end (useful for spline
    fits). For representations with unlimited derivative order the jet is
    taken to order ``2n - 1`` so that curvature derivatives up to order
    ``n - 1`` are available pointwise.
    """
    if grid_size < 32:
        raise ValueError(f"grid_size must be at least 32, got {grid_size}")
    n = curve.dimension
    L = curve.length
    s = np.linspace(trim * L, (1.0 - trim) * L, grid_size)
    if series_order is None:
        series_order = 2 * n - 1 if curve.max_order is None else max(n, min(2 * n - 1, curve.max_order))
    X = curve.series(s, series_order)
    V, kappa = frenet_series(X, s=s, eps_kappa=eps_kappa, length_scale=L, check_last=True)
    frames = np.stack([v[0] for v in V], axis=1)
    app = FrenetApparatus(s, frames, kappa[0], kappa if kappa.shape[0] > 1 else None)
    check_continuity(app)
    return app


def check_continuity(app):
    """Raise if any frame vector flips sign between neighbouring grid points."""
    d = np.einsum("jik,jik->ji", app.frames[:-1], app.frames[1:])
    if np.any(d <= 0):
        j, i = np.argwhere(d <= 0)[0]
        raise NumericalError(f"V_{i + 1} flips between s = {app.s[j]:.6g} and {app.s[j + 1]:.6g}; refine the grid")
    return float(d.min())


@dataclass(frozen=True)
class ResidualStats:
    max: np.ndarray
    rms: np.ndarray

    @property
    def overall_max(self):
        return float(self.max.max())

    @property
    def overall_rms(self):
        return float(np.sqrt((self.rms**2).mean()))


def frenet_ode_residual(app):
    """Residual of ``V_i' = -kappa_{i-1} V_{i-1} + kappa_i V_{i+1}`` on the grid.

    ``V_i'`` comes from second-order central differences of the frame field,
    so the residual of an exact apparatus scales like ``h**2``.
    """
    if app.m < 5:
        raise PreconditionError("need at least 5 grid points")
    F, k, s = app.frames, app.kappa, app.s
    n = app.n
    dF = (F[2:] - F[:-2]) / (s[2:] - s[:-2])[:, None, None]
    Fi, ki = F[1:-1], k[1:-1]
    rhs = np.zeros_like(Fi)
    for i in range(n):
        if i > 0:
            rhs[:, i] -= ki[:, i - 1, None] * Fi[:, i - 1]
        if i < n - 1:
            rhs[:, i] += ki[:, i, None] * Fi[:, i + 1]
    err = np.linalg.norm(dF - rhs, axis=-1)
    return ResidualStats(err.max(axis=0), np.sqrt((err**2).mean(axis=0)))


def frame_completeness_check(app, U):
    """Max over the grid of ``|sum_i <V_i, U>^2 - 1|`` for a unit vector `U`."""
    U = np.asarray(U, dtype=float)
    if abs(np.linalg.norm(U) - 1.0) > 1e-10:
        raise PreconditionError("U must be a unit vector")
    a = app.components(U)
    return float(np.abs((a * a).sum(axis=1) - 1.0).max())


def apparatus_columns(n):
    cols = ["s"]
    cols += [f"V{i}_{k}" for i in range(1, n + 1) for k in range(1, n + 1)]
    cols += [f"kappa{i}" for i in range(1, n)]
    return cols


def apparatus_table(app):
    m, n = app.m, app.n
    return np.column_stack([app.s, app.frames.reshape(m, n * n), app.kappa])


def apparatus_csv(app):
    """CSV text with columns ``s, V1_1..V1_n, ..., Vn_n, kappa1..kappa{n-1}``."""
    lines = [",".join(apparatus_columns(app.n))]
    for row in apparatus_table(app):
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"


def write_apparatus_csv(path, app):
    Path(path).write_text(apparatus_csv(app), encoding="utf-8")
