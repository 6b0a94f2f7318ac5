"""
Truncated Taylor-series arithmetic (univariate forward-mode AD).

A series is stored as an array ``c`` of shape ``(K + 1, *batch)`` holding the
normalized coefficients ``c[k] = f^(k)(x0) / k!`` of ``f(x0 + h)``. All
operations act elementwise over the trailing batch axes, so one call
differentiates a whole grid of expansion points at once.

The free functions (``mul``, ``div``, ``exp`` ...) work on raw coefficient
arrays; :class:`Taylor` wraps them with operator overloading so that the
expression evaluator can treat series and floats uniformly.
"""

from math import factorial

import numpy as np


def _trunc(a, b):
    k = min(a.shape[0], b.shape[0])
    return a[:k], b[:k]


def as_series(x, length):
    """Promote a constant (scalar or batch array) to a series of `length` terms."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((length,) + x.shape)
    out[0] = x
    return out


def mul(a, b):
    a, b = _trunc(a, b)
    K = a.shape[0]
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    out = np.empty((K,) + shape)
    for k in range(K):
        out[k] = (a[: k + 1] * b[k::-1]).sum(axis=0)
    return out


def div(a, b):
    a, b = _trunc(a, b)
    K = a.shape[0]
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    out = np.empty((K,) + shape)
    b0 = b[0]
    for k in range(K):
        acc = np.array(a[k], dtype=float)
        if k:
            acc = acc - (b[1 : k + 1] * out[k - 1 :: -1]).sum(axis=0)
        out[k] = acc / b0
    return out


def reciprocal(b):
    return div(as_series(np.ones(b.shape[1:]), b.shape[0]), b)


def exp(a):
    K = a.shape[0]
    out = np.empty_like(a, dtype=float)
    out[0] = np.exp(a[0])
    j = np.arange(1, K).reshape((-1,) + (1,) * (a.ndim - 1))
    for k in range(1, K):
        out[k] = (j[:k] * a[1 : k + 1] * out[k - 1 :: -1]).sum(axis=0) / k
    return out


def log(a):
    K = a.shape[0]
    out = np.empty_like(a, dtype=float)
    out[0] = np.log(a[0])
    j = np.arange(1, K).reshape((-1,) + (1,) * (a.ndim - 1))
    for k in range(1, K):
        acc = np.array(a[k], dtype=float)
        if k > 1:
            acc = acc - (j[: k - 1] * out[1:k] * a[k - 1 : 0 : -1]).sum(axis=0) / k
        out[k] = acc / a[0]
    return out


def sincos(a):
    K = a.shape[0]
    s = np.empty_like(a, dtype=float)
    c = np.empty_like(a, dtype=float)
    s[0] = np.sin(a[0])
    c[0] = np.cos(a[0])
    j = np.arange(1, K).reshape((-1,) + (1,) * (a.ndim - 1))
    for k in range(1, K):
        ja = j[:k] * a[1 : k + 1]
        s[k] = (ja * c[k - 1 :: -1]).sum(axis=0) / k
        c[k] = -(ja * s[k - 1 :: -1]).sum(axis=0) / k
    return s, c


def sqrt(a):
    K = a.shape[0]
    out = np.empty_like(a, dtype=float)
    out[0] = np.sqrt(a[0])
    for k in range(1, K):
        acc = np.array(a[k], dtype=float)
        if k > 1:
            acc = acc - (out[1:k] * out[k - 1 : 0 : -1]).sum(axis=0)
        out[k] = acc / (2.0 * out[0])
    return out


def power(a, p):
    """``a**p`` for a constant exponent `p`.

    Integer exponents use repeated multiplication, so expansions about a zero
    of `a` (``t**2`` at ``t = 0``) stay exact.
    """
    if float(p).is_integer():
        p = int(p)
        if p == 0:
            return as_series(np.ones(a.shape[1:]), a.shape[0])
        base = a if p > 0 else reciprocal(a)
        n = abs(p)
        result = None
        while n:
            if n & 1:
                result = base if result is None else mul(result, base)
            n >>= 1
            if n:
                base = mul(base, base)
        return result
    K = a.shape[0]
    out = np.empty_like(a, dtype=float)
    out[0] = a[0] ** p
    for k in range(1, K):
        j = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
        out[k] = ((p * j - (k - j)) * a[1 : k + 1] * out[k - 1 :: -1]).sum(axis=0) / (k * a[0])
    return out


def deriv(a):
    """Coefficients of ``f'(x0 + h)``; one term shorter."""
    k = np.arange(1, a.shape[0]).reshape((-1,) + (1,) * (a.ndim - 1))
    return a[1:] * k


def integrate(a, c0=0.0):
    """Antiderivative series with constant term `c0`; one term longer."""
    k = np.arange(1, a.shape[0] + 1).reshape((-1,) + (1,) * (a.ndim - 1))
    out = np.empty((a.shape[0] + 1,) + a.shape[1:])
    out[0] = c0
    out[1:] = a / k
    return out


def compose(f, g):
    """Coefficients of ``f(g(h))`` where ``g`` has zero constant term.

    `f` may carry extra trailing axes (e.g. a vector-valued series) beyond the
    batch axes of `g`; `g` is broadcast against them from the left.
    """
    K = min(f.shape[0], g.shape[0])
    extra = f.ndim - g.ndim
    g = g[:K].reshape(g[:K].shape + (1,) * extra)
    out = as_series(f[K - 1], K)
    for k in range(K - 2, -1, -1):
        out = mul(out, g)
        out[0] = out[0] + f[k]
    return out


def revert(S):
    """Compositional inverse of ``S(h) = sum_{k>=1} S_k h^k``.

    Returns the series ``h(sigma)`` with ``S(h(sigma)) = sigma``; requires
    ``S_1 != 0``. Newton iteration doubles the number of correct terms per
    pass.
    """
    K = S.shape[0]
    sigma = np.zeros_like(S)
    if K > 1:
        sigma[1] = 1.0
    h = np.zeros_like(S)
    if K > 1:
        h[1] = 1.0 / S[1]
    dS = deriv(S)
    correct = 2
    while correct < K:
        resid = compose(S, h) - sigma
        slope = compose(np.concatenate([dS, np.zeros((1,) + S.shape[1:])]), h)
        h = h - div(resid, slope)
        h[0] = 0.0
        correct = 2 * correct
    return h


def derivatives(a):
    """Convert normalized coefficients to plain derivatives ``f^(k)(x0)``."""
    f = np.array([factorial(k) for k in range(a.shape[0])], dtype=float)
    return a * f.reshape((-1,) + (1,) * (a.ndim - 1))


class Taylor:
    """Truncated Taylor series with operator overloading.

    Parameters
    ----------
    c : array_like
        Normalized coefficients, shape ``(K + 1, *batch)``.
    """

    __slots__ = ("c",)
    __array_priority__ = 100

    def __init__(self, c):
        self.c = np.asarray(c, dtype=float)

    @classmethod
    def variable(cls, x0, order):
        """The identity series ``x0 + h`` truncated at `order`."""
        x0 = np.asarray(x0, dtype=float)
        c = np.zeros((order + 1,) + x0.shape)
        c[0] = x0
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self):
        return self.c.shape[0] - 1

    @property
    def value(self):
        return self.c[0]

    def _other(self, other):
        if isinstance(other, Taylor):
            return other.c
        other = np.broadcast_to(np.asarray(other, dtype=float), self.c.shape[1:])
        return as_series(other, self.c.shape[0])

    def __add__(self, other):
        a, b = _trunc(self.c, self._other(other))
        return Taylor(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = _trunc(self.c, self._other(other))
        return Taylor(a - b)

    def __rsub__(self, other):
        a, b = _trunc(self._other(other), self.c)
        return Taylor(a - b)

    def __neg__(self):
        return Taylor(-self.c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c * np.asarray(other, dtype=float))
        return Taylor(mul(self.c, other.c))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Taylor):
            return Taylor(self.c / np.asarray(other, dtype=float))
        return Taylor(div(self.c, other.c))

    def __rtruediv__(self, other):
        return Taylor(div(self._other(other), self.c))

    def __pow__(self, p):
        if isinstance(p, Taylor):
            return (p * self.log()).exp()
        p = np.asarray(p, dtype=float)
        if p.ndim:
            raise TypeError("series exponent must be a scalar or a series")
        return Taylor(power(self.c, float(p)))

    def __rpow__(self, base):
        return (self * np.log(base)).exp()

    def exp(self):
        return Taylor(exp(self.c))

    def log(self):
        return Taylor(log(self.c))

    def sin(self):
        return Taylor(sincos(self.c)[0])

    def cos(self):
        return Taylor(sincos(self.c)[1])

    def sqrt(self):
        return Taylor(sqrt(self.c))

    def deriv(self):
        return Taylor(deriv(self.c))

    def __repr__(self):
        return f"Taylor(order={self.order}, batch={self.c.shape[1:]})"
