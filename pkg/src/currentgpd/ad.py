"""Forward-mode automatic differentiation with nestable dual numbers.

A ``Dual`` carries a value and one derivative coefficient.  Coefficients may
themselves be duals (second and higher order via nesting) or numpy arrays
(batched tangents).  Chart maps and structure maps throughout the library are
written against the dispatching math functions below, so the same code path
evaluates on floats, on ``Dual`` seeds, and on arrays of grid samples.
"""

from __future__ import annotations

import math

import numpy as np


class Dual:
    __slots__ = ("re", "ep")

    # keep numpy from absorbing us into object arrays
    __array_ufunc__ = None

    def __init__(self, re, ep=0.0):
        self.re = re
        self.ep = ep

    def __repr__(self):
        return f"Dual({self.re!r}, {self.ep!r})"

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.re + o.re, self.ep + o.ep)
        return Dual(self.re + o, self.ep)

    __radd__ = __add__

    def __sub__(self, o):
        if isinstance(o, Dual):
            return Dual(self.re - o.re, self.ep - o.ep)
        return Dual(self.re - o, self.ep)

    def __rsub__(self, o):
        return Dual(o - self.re, -self.ep)

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.re * o.re, self.re * o.ep + self.ep * o.re)
        return Dual(self.re * o, self.ep * o)

    __rmul__ = __mul__

    def __truediv__(self, o):
        if isinstance(o, Dual):
            inv = 1.0 / o.re
            return Dual(self.re * inv, (self.ep - self.re * inv * o.ep) * inv)
        return Dual(self.re / o, self.ep / o)

    def __rtruediv__(self, o):
        inv = 1.0 / self.re
        v = o * inv
        return Dual(v, -v * inv * self.ep)

    def __neg__(self):
        return Dual(-self.re, -self.ep)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise TypeError("dual powers are restricted to non-negative integers")
        out = 1.0
        base = self
        k = n
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out


def value(x):
    """Strip all dual parts, returning the underlying float or array."""
    while isinstance(x, Dual):
        x = x.re
    return x


def values(xs):
    return [value(x) for x in xs]


def _lift(f, df):
    """Build a dual-aware elementwise function from f and its derivative."""

    def g(x):
        if isinstance(x, Dual):
            return Dual(g(x.re), df(x.re) * x.ep)
        return f(x)

    return g


def _np_or_math(np_fn, math_fn):
    def f(x):
        if isinstance(x, np.ndarray):
            return np_fn(x)
        return math_fn(x)

    return f


sin = _lift(_np_or_math(np.sin, math.sin), lambda x: cos(x))
cos = _lift(_np_or_math(np.cos, math.cos), lambda x: -sin(x))
exp = _lift(_np_or_math(np.exp, math.exp), lambda x: exp(x))
log = _lift(_np_or_math(np.log, math.log), lambda x: 1.0 / x)


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.re)
        return Dual(r, x.ep / (2.0 * r))
    if isinstance(x, np.ndarray):
        return np.sqrt(x)
    return math.sqrt(x)


def atan(x):
    if isinstance(x, Dual):
        return Dual(atan(x.re), x.ep / (1.0 + x.re * x.re))
    if isinstance(x, np.ndarray):
        return np.arctan(x)
    return math.atan(x)


def atan2(y, x):
    if isinstance(y, Dual) or isinstance(x, Dual):
        yr = y.re if isinstance(y, Dual) else y
        xr = x.re if isinstance(x, Dual) else x
        ye = y.ep if isinstance(y, Dual) else 0.0
        xe = x.ep if isinstance(x, Dual) else 0.0
        den = xr * xr + yr * yr
        return Dual(atan2(yr, xr), (xr * ye - yr * xe) / den)
    if isinstance(y, np.ndarray) or isinstance(x, np.ndarray):
        return np.arctan2(y, x)
    return math.atan2(y, x)


def where(cond, a, b):
    """Select elementwise for arrays, by plain truth value otherwise.

    With dual scalars the branch is chosen by the underlying value; both
    branches must agree smoothly at the switching locus.
    """
    if isinstance(cond, np.ndarray):
        return np.where(cond, a, b)
    return a if cond else b


def is_batch(x):
    return isinstance(x, np.ndarray) and x.ndim > 0


def dot(xs, ys):
    acc = xs[0] * ys[0]
    for a, b in zip(xs[1:], ys[1:]):
        acc = acc + a * b
    return acc


def jvp(fn, xs, vs):
    """Directional derivative: returns (fn(xs), d fn(xs)[vs]) component lists."""
    seeded = [Dual(x, v) for x, v in zip(xs, vs)]
    out = fn(seeded)
    vals, eps = [], []
    for o in out:
        if isinstance(o, Dual):
            vals.append(o.re)
            eps.append(o.ep)
        else:
            vals.append(o)
            eps.append(o * 0.0 if isinstance(o, np.ndarray) else 0.0)
    return vals, eps


def jacobian(fn, xs):
    """Dense Jacobian of fn: R^k -> R^m at xs (lists of floats) as an (m, k) array."""
    k = len(xs)
    cols = []
    m = None
    for j in range(k):
        vs = [0.0] * k
        vs[j] = 1.0
        _, eps = jvp(fn, xs, vs)
        m = len(eps)
        cols.append([value(e) for e in eps])
    out = np.zeros((m or 0, k))
    for j, col in enumerate(cols):
        out[:, j] = col
    return out


def fd_jacobian(fn, xs, h):
    """Central finite-difference Jacobian, the standard cross-check for AD."""
    k = len(xs)
    cols = []
    for j in range(k):
        xp = list(xs)
        xm = list(xs)
        xp[j] = xp[j] + h
        xm[j] = xm[j] - h
        fp = [value(c) for c in fn(xp)]
        fm = [value(c) for c in fn(xm)]
        cols.append([(a - b) / (2.0 * h) for a, b in zip(fp, fm)])
    m = len(cols[0]) if cols else 0
    out = np.zeros((m, k))
    for j, col in enumerate(cols):
        out[:, j] = col
    return out
