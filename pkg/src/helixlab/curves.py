"""
Curves in E^n: analytic and sampled representations, arc-length
reparameterization and derivative jets.

A parameterized curve exposes ``taylor(t, order)`` returning the normalized
Taylor coefficients of ``x(t + h)`` with shape ``(order + 1, m, n)``.
:class:`UnitSpeedCurve` composes that expansion with the inverse arc-length
series, which gives exact (up to round-off) derivatives with respect to arc
length for analytic input.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import make_lsq_spline

from . import taylor as T
from .errors import (
    InputError,
    InsufficientSamples,
    NonRegularCurve,
    NotOrthogonal,
    OrderTooHigh,
    OutOfDomain,
)
from .expr import Expression
from .numerics import gauss_panels, simpson_richardson

log = logging.getLogger(__name__)

EPS_REG = 1e-8
RSS_FLOOR = 1e-14
EPS_UNIT = 1e-8


def _fmt(x):
    return repr(float(x))


class AnalyticCurve:
    """Curve given by closed-form coordinate expressions in ``t``.

    Parameters
    ----------
    coords : sequence of str
        One expression per coordinate (grammar in :mod:`helixlab.expr`).
    interval : (float, float)
        Parameter interval ``[t_min, t_max]``.
    eps_reg : float
        Minimum admissible speed on the validation grid.
    """

    def __init__(self, coords, interval, eps_reg=EPS_REG):
        self.coords = [str(c) for c in coords]
        if len(self.coords) < 2:
            raise InputError(f"dimension must be at least 2, got {len(self.coords)}")
        t0, t1 = (float(v) for v in interval)
        if not t0 < t1:
            raise InputError(f"interval must satisfy t_min < t_max, got [{t0}, {t1}]")
        self.interval = (t0, t1)
        self.eps_reg = eps_reg
        self._exprs = [Expression(c, "t") for c in self.coords]

    @property
    def dimension(self):
        return len(self.coords)

    max_order = None

    def position(self, t):
        t = np.asarray(t, dtype=float)
        return np.stack([e(t) for e in self._exprs], axis=-1)

    def taylor(self, t, order):
        t = np.asarray(t, dtype=float)
        return np.stack([e.series(t, order) for e in self._exprs], axis=-1)

    def speed(self, t):
        d = self.taylor(t, 1)[1]
        return np.sqrt((d * d).sum(axis=-1))

    def to_json(self):
        return {"dimension": self.dimension, "coords": list(self.coords), "interval": list(self.interval)}

    @classmethod
    def from_json(cls, data):
        try:
            coords = data["coords"]
            interval = data["interval"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"analytic curve JSON missing field {exc}") from None
        dim = data.get("dimension", len(coords))
        if dim != len(coords):
            raise InputError(f"dimension {dim} does not match {len(coords)} coordinate expressions")
        if len(interval) != 2:
            raise InputError("interval must have two entries")
        return cls(coords, interval)

    def __repr__(self):
        return f"AnalyticCurve(n={self.dimension}, interval={self.interval})"


class SampledCurve:
    """Ordered point samples of a curve, optionally with parameter values.

    Parameters
    ----------
    points : array_like, shape (m, n)
    params : array_like, shape (m,), optional
        Strictly increasing parameter values (e.g. arc length). Chord length
        is used when omitted.
    """

    def __init__(self, points, params=None):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] < 2:
            raise InputError(f"points must be an (m, n) array with n >= 2, got shape {points.shape}")
        m, n = points.shape
        if m < 2 * n + 5:
            raise InsufficientSamples(f"need at least {2 * n + 5} samples for n = {n}, got {m}")
        if not np.all(np.isfinite(points)):
            raise InputError("points contain non-finite values")
        steps = np.linalg.norm(np.diff(points, axis=0), axis=1)
        if np.any(steps == 0):
            bad = int(np.flatnonzero(steps == 0)[0])
            raise InputError(f"consecutive samples {bad} and {bad + 1} coincide")
        if params is not None:
            params = np.asarray(params, dtype=float)
            if params.shape != (m,):
                raise InputError("params must have one value per sample")
            if np.any(np.diff(params) <= 0):
                raise InputError("parameter values must be strictly increasing")
        self.points = points
        self.params = params

    @property
    def dimension(self):
        return self.points.shape[1]

    def parameter(self):
        if self.params is not None:
            return self.params
        steps = np.linalg.norm(np.diff(self.points, axis=0), axis=1)
        return np.concatenate([[0.0], np.cumsum(steps)])

    def fit(self, degree=None, n_knots=None):
        """Least-squares B-spline fit, see :class:`SplineCurve`."""
        return SplineCurve.fit(self, degree=degree, n_knots=n_knots)

    def __repr__(self):
        return f"SampledCurve(n={self.dimension}, m={self.points.shape[0]})"


def _uniform_knots(t, k, n_interior):
    inner = np.linspace(t[0], t[-1], n_interior + 2)[1:-1]
    return np.concatenate([[t[0]] * (k + 1), inner, [t[-1]] * (k + 1)])


@dataclass
class SplineCurve:
    """Smoothing-spline representation of a sampled curve.

    The number of interior knots plays the role of the smoothing parameter;
    by default it is chosen by generalized cross-validation
    ``GCV(p) = m * RSS / (m - p)**2`` with ``p`` basis functions. RSS is
    floored at the rounding level of the samples; when several knot counts
    reach that floor the data cannot separate them, and the one whose
    ``n``-th derivative changes least against the next finer candidate wins.
    """

    spline: object
    interval: tuple
    degree: int
    n_knots: int
    gcv: float = float("nan")
    dimension: int = field(init=False)

    def __post_init__(self):
        self.dimension = self.spline.c.shape[1]

    @property
    def max_order(self):
        return self.degree

    @classmethod
    def fit(cls, sampled, degree=None, n_knots=None):
        pts = sampled.points
        m, n = pts.shape
        t = sampled.parameter()
        k = n + 3 if degree is None else int(degree)
        if k < n + 1:
            raise InputError(f"spline degree must be at least n + 1 = {n + 1}")
        cap = max(1, (m - k - 1) // 3)
        if n_knots is not None:
            candidates = [int(n_knots)]
        else:
            candidates = sorted(set(np.geomspace(min(4, cap), cap, 16).astype(int).tolist()))
        # residuals this small are rounding in the samples, not misfit
        floor = m * n * (RSS_FLOOR * max(np.abs(pts).max(), 1.0)) ** 2
        fits = []
        for nk in candidates:
            try:
                spl = make_lsq_spline(t, pts, _uniform_knots(t, k, nk), k=k)
            except (ValueError, np.linalg.LinAlgError):
                continue
            rss = float(((spl(t) - pts) ** 2).sum())
            p = nk + k + 1
            fits.append((m * max(rss, floor) / (m - p) ** 2, nk, spl, rss <= floor))
        if not fits:
            raise InsufficientSamples("no admissible spline fit for these samples")
        resolved = [f for f in fits if f[3]]
        if len(resolved) < 2:
            score, nk, spl, _ = min(fits, key=lambda f: f[0])
        else:
            # GCV cannot rank fits that all reproduce the data to rounding;
            # take the one whose top derivative is most stable under refinement
            w = t[0] + (t[-1] - t[0]) * np.linspace(0.02, 0.98, 256)
            D = [f[2](w, nu=n) for f in resolved]
            change = [np.linalg.norm(D[j + 1] - D[j]) / np.linalg.norm(D[j + 1]) for j in range(len(D) - 1)]
            score, nk, spl, _ = resolved[int(np.argmin(change))]
        log.debug("spline fit: degree %d, %d interior knots, GCV %.3e", k, nk, score)
        return cls(spl, (float(t[0]), float(t[-1])), k, nk, score)

    def position(self, t):
        return self.spline(np.asarray(t, dtype=float))

    def taylor(self, t, order):
        t = np.asarray(t, dtype=float)
        order = min(order, self.degree)
        out = [self.spline(t)]
        f = 1.0
        for k in range(1, order + 1):
            f *= k
            out.append(self.spline(t, nu=k) / f)
        return np.stack(out)

    def speed(self, t):
        return np.linalg.norm(self.spline(np.asarray(t, dtype=float), nu=1), axis=-1)


class UnitSpeedCurve:
    """Arc-length reparameterization of a parameterized curve.

    The arc-length domain is ``[0, length]``. `t_of_s` inverts the
    cumulative arc length by Newton iteration against Gauss-Legendre panel
    integrals; `series` returns the Taylor expansion of ``alpha(s + sigma)``
    in ``sigma``.
    """

    def __init__(self, base, resolution=256, eps_reg=EPS_REG, eps_unit=EPS_UNIT):
        if resolution < 64:
            raise ValueError(f"resolution must be at least 64, got {resolution}")
        self.base = base
        self.eps_unit = eps_unit
        t0, t1 = base.interval
        self.t_nodes = np.linspace(t0, t1, resolution + 1)
        check = np.concatenate([self.t_nodes, 0.5 * (self.t_nodes[1:] + self.t_nodes[:-1])])
        sp = base.speed(check)
        if not np.all(sp > eps_reg):
            bad = check[np.argmin(sp)]
            raise NonRegularCurve(f"speed {sp.min():.3e} <= {eps_reg:g} at t = {bad:.6g}", s=float(bad))
        panels = gauss_panels(base.speed, self.t_nodes[:-1], self.t_nodes[1:])
        self.s_nodes = np.concatenate([[0.0], np.cumsum(panels)])
        self.length = float(simpson_richardson(base.speed, t0, t1))
        drift = abs(self.length - self.s_nodes[-1])
        if drift > 1e-8 * self.length:
            log.warning("arc-length quadratures disagree by %.3e", drift)
        # the node table defines t(s); keep its endpoint consistent with L
        self.s_nodes *= self.length / self.s_nodes[-1]

    @property
    def dimension(self):
        return self.base.dimension

    @property
    def max_order(self):
        return self.base.max_order

    def _arc(self, t, k):
        return self.s_nodes[k] + gauss_panels(self.base.speed, self.t_nodes[k], t)

    def t_of_s(self, s):
        s = np.asarray(s, dtype=float)
        L = self.length
        if np.any(s < -1e-12 * L) or np.any(s > L * (1 + 1e-12)):
            raise OutOfDomain(f"arc length outside [0, {L:.6g}]")
        s = np.clip(s, 0.0, L)
        k = np.clip(np.searchsorted(self.s_nodes, s, side="right") - 1, 0, self.t_nodes.size - 2)
        frac = (s - self.s_nodes[k]) / (self.s_nodes[k + 1] - self.s_nodes[k])
        t = self.t_nodes[k] + frac * (self.t_nodes[k + 1] - self.t_nodes[k])
        for _ in range(12):
            f = self._arc(t, k) - s
            step = f / self.base.speed(t)
            t = t - step
            if np.all(np.abs(f) <= 1e-15 * max(L, 1.0)):
                break
        return np.clip(t, *self.base.interval)

    def position(self, s):
        return self.base.position(self.t_of_s(s))

    def series(self, s, order):
        """Normalized Taylor coefficients of ``alpha(s + sigma)``, shape ``(order + 1, m, n)``."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.max_order is not None and order > self.max_order:
            raise OrderTooHigh(f"order {order} exceeds the representation limit {self.max_order}")
        t = self.t_of_s(s)
        X = self.base.taylor(t, order)
        if order == 0:
            return X
        V = T.deriv(X)
        sp = T.sqrt(T.mul(V, V).sum(axis=-1))
        S = T.integrate(sp, 0.0)
        h = T.revert(S)
        return T.compose(X, h)

    def speed_defect(self, s):
        d = self.series(s, 1)[1]
        return np.abs(np.linalg.norm(d, axis=-1) - 1.0)

    def validate(self, n_check=257):
        s = np.linspace(0.0, self.length, n_check)
        worst = float(self.speed_defect(s).max())
        if worst >= self.eps_unit:
            raise NonRegularCurve(f"unit-speed defect {worst:.3e} exceeds {self.eps_unit:g}")
        return worst

    def __repr__(self):
        return f"UnitSpeedCurve(n={self.dimension}, L={self.length:.6g})"


def arc_length_reparameterize(curve, resolution=256, **fit_kw):
    """Reparameterize an analytic or sampled curve by arc length."""
    if isinstance(curve, UnitSpeedCurve):
        curve = curve.base
    if isinstance(curve, SampledCurve):
        curve = curve.fit(**fit_kw)
    return UnitSpeedCurve(curve, resolution=resolution)


def derivative_jet(curve, s, order):
    """Derivatives ``alpha'(s) .. alpha^(order)(s)`` of a unit-speed curve.

    Returns a list of `order` arrays, each of shape ``(n,)`` for scalar `s`
    or ``(m, n)`` for an array of arc lengths.
    """
    n = curve.dimension
    if order < 1 or order > n:
        raise OrderTooHigh(f"jet order must lie in [1, {n}], got {order}")
    scalar = np.ndim(s) == 0
    c = T.derivatives(curve.series(s, order))
    jet = [c[k] for k in range(1, order + 1)]
    if scalar:
        jet = [v[0] for v in jet]
    return jet


def check_rotation(R, tol=1e-10):
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise NotOrthogonal("rotation must be a square matrix")
    if np.abs(R.T @ R - np.eye(R.shape[0])).max() > tol:
        raise NotOrthogonal("rotation is not orthogonal within tolerance")
    if np.linalg.det(R) < 0:
        raise NotOrthogonal("rotation has determinant -1")
    return R


def apply_rigid_motion(curve, rotation, translation):
    """Image ``R x + c`` of a curve; the representation type is preserved."""
    R = check_rotation(rotation)
    c = np.asarray(translation, dtype=float)
    n = curve.dimension
    if R.shape != (n, n) or c.shape != (n,):
        raise ValueError(f"motion does not match dimension {n}")
    if isinstance(curve, UnitSpeedCurve):
        base = curve.base
        if isinstance(base, SplineCurve):
            raise TypeError("move the SampledCurve before fitting")
        return UnitSpeedCurve(apply_rigid_motion(base, R, c), resolution=curve.t_nodes.size - 1)
    if isinstance(curve, AnalyticCurve):
        coords = []
        for i in range(n):
            terms = [f"({_fmt(R[i, j])})*({curve.coords[j]})" for j in range(n) if R[i, j] != 0.0]
            coords.append(" + ".join([f"({_fmt(c[i])})"] + terms))
        return AnalyticCurve(coords, curve.interval, curve.eps_reg)
    if isinstance(curve, SampledCurve):
        return SampledCurve(curve.points @ R.T + c, curve.params)
    raise TypeError(f"cannot move {type(curve).__name__}")


def scale_curve(curve, factor):
    """Homothety ``x -> factor * x`` (parameter values scale with it)."""
    lam = float(factor)
    if lam <= 0:
        raise ValueError("scale factor must be positive")
    if isinstance(curve, AnalyticCurve):
        coords = [f"({_fmt(lam)})*({c})" for c in curve.coords]
        return AnalyticCurve(coords, curve.interval, curve.eps_reg)
    if isinstance(curve, SampledCurve):
        params = None if curve.params is None else lam * curve.params
        return SampledCurve(lam * curve.points, params)
    raise TypeError(f"cannot scale {type(curve).__name__}")


# ----------------------------------------------------------------------------
# file formats


def read_curve_csv(path, dimension=None):
    """Read the ``s,x1,...,xn`` sample format (``s`` optional)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    rows = list(csv.reader(text.splitlines()))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    has_s = bool(header) and header[0] == "s"
    xcols = header[1:] if has_s else header
    if dimension is None:
        dimension = len(xcols)
    expected = [f"x{i}" for i in range(1, dimension + 1)]
    for name in expected:
        if name not in xcols:
            raise InputError(f"{path}: missing column {name!r}")
    extra = [h for h in xcols if h not in expected]
    if extra:
        raise InputError(f"{path}: unexpected column {extra[0]!r}")
    order = [header.index(name) for name in expected]
    data = []
    for lineno, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise InputError(f"{path}: line {lineno} has {len(r)} fields, expected {len(header)}")
        try:
            data.append([float(cell) for cell in r])
        except ValueError:
            bad = next(h for h, cell in zip(header, r) if not _is_float(cell))
            raise InputError(f"{path}: line {lineno}: non-numeric value in column {bad!r}") from None
    if not data:
        raise InputError(f"{path}: no data rows")
    arr = np.array(data)
    params = arr[:, 0] if has_s else None
    return SampledCurve(arr[:, order], params)


def _is_float(cell):
    try:
        float(cell)
    except ValueError:
        return False
    return True


def write_curve_csv(path, points, params=None):
    points = np.asarray(points, dtype=float)
    n = points.shape[1]
    header = (["s"] if params is not None else []) + [f"x{i}" for i in range(1, n + 1)]
    lines = [",".join(header)]
    for j, p in enumerate(points):
        vals = ([params[j]] if params is not None else []) + list(p)
        lines.append(",".join(f"{v:.17g}" for v in vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_analytic_json(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return AnalyticCurve.from_json(data)


def load_curve(path, dimension=None):
    """Load a curve file: ``.json`` analytic description or ``.csv`` samples."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        curve = read_analytic_json(path)
        if dimension is not None and curve.dimension != dimension:
            raise InputError(f"{path}: dimension {curve.dimension} does not match override {dimension}")
        return curve
    return read_curve_csv(path, dimension)
