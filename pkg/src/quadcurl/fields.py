"""Closed-form vector fields differentiated by truncated Taylor jets.

A :class:`Jet` holds, for a batch of points, the Taylor coefficients
``c[alpha] = d^alpha f / alpha!`` of a scalar function in three variables up
to total order ``order`` (35 coefficients at order 4).  Arithmetic follows
the truncated product rule, so ``curl^4 u`` of the manufactured solutions
comes out exact to rounding without hand-derived formulas.

Field expressions are plain Python callables ``expr(x, y, z) -> (u1, u2, u3)``
written with :func:`sin`, :func:`cos` from this module; the same expression
evaluates on jets, on numpy arrays and on :mod:`mpmath` scalars, the last of
which feeds the extended-precision finite-difference oracle.
"""

from fractions import Fraction
from functools import lru_cache
from math import factorial, pi

import mpmath
import numpy as np

from . import kernels
from .polynomials import monomial_basis

MAX_ORDER = 4
_CHUNK = 8192


@lru_cache(maxsize=None)
def _layout(order):
    exps = monomial_basis(3, order).exponents
    index = {tuple(e): i for i, e in enumerate(exps.tolist())}
    triples = []
    for i, a in enumerate(exps.tolist()):
        for j, b in enumerate(exps.tolist()):
            s = tuple(x + y for x, y in zip(a, b))
            if sum(s) <= order:
                triples.append((index[s], i, j))
    triples.sort()
    t = np.array(triples, dtype=np.int64).reshape(-1, 3)
    return exps, index, (np.ascontiguousarray(t[:, 0]), np.ascontiguousarray(t[:, 1]),
                         np.ascontiguousarray(t[:, 2]))


@lru_cache(maxsize=None)
def _diff_map(order, axis):
    """Source indices and factors for ``d/dx_axis`` from ``order`` to ``order - 1``."""
    _, index, _ = _layout(order)
    lower, _, _ = _layout(order - 1)
    src = np.empty(len(lower), dtype=np.int64)
    fac = np.empty(len(lower))
    for i, e in enumerate(lower.tolist()):
        up = list(e)
        up[axis] += 1
        src[i] = index[tuple(up)]
        fac[i] = up[axis]
    return src, fac


def ncoef(order):
    return (order + 1) * (order + 2) * (order + 3) // 6


class Jet:
    """Truncated Taylor expansion in (x, y, z), batched over points."""

    __slots__ = ("c", "order")
    __array_priority__ = 100

    def __init__(self, coeffs, order):
        self.c = np.ascontiguousarray(coeffs, dtype=float)
        self.order = order

    @classmethod
    def variable(cls, points, axis, order):
        points = np.atleast_2d(points)
        c = np.zeros((len(points), ncoef(order)))
        c[:, 0] = points[:, axis]
        if order >= 1:
            c[:, 1 + axis] = 1.0
        return cls(c, order)

    @classmethod
    def constant(cls, value, npts, order):
        c = np.zeros((npts, ncoef(order)))
        c[:, 0] = value
        return cls(c, order)

    @property
    def value(self):
        return self.c[:, 0]

    def truncate(self, order):
        return Jet(self.c[:, :ncoef(order)], order)

    def derivative(self, multi_index):
        _, index, _ = _layout(self.order)
        a = tuple(int(i) for i in multi_index)
        scale = factorial(a[0]) * factorial(a[1]) * factorial(a[2])
        return scale * self.c[:, index[a]]

    def diff(self, axis):
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _diff_map(self.order, axis)
        return Jet(self.c[:, src] * fac, self.order - 1)

    # arithmetic ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.order == self.order:
                return self, other
            o = min(self.order, other.order)
            return self.truncate(o), other.truncate(o)
        return None

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            c = self.c.copy()
            c[:, 0] += other
            return Jet(c, self.order)
        a, b = pair
        return Jet(a.c + b.c, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        pair = self._coerce(other)
        if pair is None:
            return Jet(self.c * np.asarray(other)[..., None] if np.ndim(other) else self.c * other,
                       self.order)
        a, b = pair
        _, _, (tg, lf, rt) = _layout(a.order)
        return Jet(kernels.jet_mul(a.c, b.c, tg, lf, rt, a.c.shape[1]), a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            raise TypeError("jet division is not supported")
        return self * (1.0 / other)

    def __pow__(self, n):
        if int(n) != n or n < 0:
            raise ValueError("only nonnegative integer powers")
        result = Jet.constant(1.0, len(self.c), self.order)
        base = self
        n = int(n)
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def compose(self, derivs):
        """``g(self)`` given ``derivs[m] = g^(m)(value)`` for ``m = 0..order``."""
        series = np.stack([d / factorial(m) for m, d in enumerate(derivs)], axis=1)
        delta = self.c.copy()
        delta[:, 0] = 0.0
        _, _, (tg, lf, rt) = _layout(self.order)
        return Jet(kernels.jet_horner(delta, np.ascontiguousarray(series), tg, lf, rt,
                                      delta.shape[1]), self.order)


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.value), np.cos(x.value)
        return x.compose([s, c, -s, -c, s][: x.order + 1])
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return mpmath.sin(x)
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.value), np.cos(x.value)
        return x.compose([c, -s, -c, s, c][: x.order + 1])
    if isinstance(x, (mpmath.mpf, mpmath.mpc)):
        return mpmath.cos(x)
    return np.cos(x)


def jet_curl(u):
    return [u[2].diff(1) - u[1].diff(2), u[0].diff(2) - u[2].diff(0), u[1].diff(0) - u[0].diff(1)]


class AnalyticField:
    """Vector field given by a jet-compatible expression ``expr(x, y, z)``."""

    def __init__(self, name, expr):
        self.name = name
        self.expr = expr

    def __repr__(self):
        return f"AnalyticField({self.name!r})"

    def jets(self, points, order):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        xyz = [Jet.variable(points, a, order) for a in range(3)]
        comps = self.expr(*xyz)
        return [c if isinstance(c, Jet) else Jet.constant(c, len(points), order) for c in comps]

    def _chunked(self, points, fn, order):
        pts = np.asarray(points, dtype=float)
        flat = pts.reshape(-1, 3)
        pieces = [fn(self.jets(flat[s:s + _CHUNK], order)) for s in range(0, len(flat), _CHUNK)]
        out = np.concatenate(pieces) if pieces else np.zeros((0, 3))
        return out.reshape(pts.shape[:-1] + out.shape[1:])

    def values(self, points):
        """``u`` at ``points`` (any leading shape, last axis 3)."""
        return self._chunked(points, lambda u: np.stack([c.value for c in u], axis=1), 0)

    def curl_power(self, m, points):
        """``(curl)^m u``; ``m = 4`` gives the quad-curl load ``f``."""
        if not 0 <= m <= MAX_ORDER:
            raise ValueError("m must lie in 0..4")

        def fn(u):
            for _ in range(m):
                u = jet_curl(u)
            return np.stack([c.value for c in u], axis=1)

        return self._chunked(points, fn, m)

    def curl(self, points):
        return self.curl_power(1, points)

    def rhs(self, points):
        return self.curl_power(4, points)

    def gradcurl(self, points):
        """``d (curl u)_i / d x_j`` as ``(..., 3, 3)``."""
        def fn(u):
            w = jet_curl(u)
            return np.stack([np.stack([wi.c[:, 1 + j] for j in range(3)], axis=1) for wi in w], axis=1)

        return self._chunked(points, fn, 2)

    def derivative(self, multi_index, points):
        order = int(sum(multi_index))
        return self._chunked(points, lambda u: np.stack([c.derivative(multi_index) for c in u],
                                                        axis=1), order)

    def divergence_of_curl_power(self, m, points):
        """``div (curl^m u)``; identically zero, used as a self-check."""
        def fn(u):
            for _ in range(m):
                u = jet_curl(u)
            return sum(u[a].diff(a).value for a in range(3))[:, None]

        return self._chunked(points, fn, m + 1)[..., 0]

    def divergence(self, points):
        return self.divergence_of_curl_power(0, points)

    def scalar(self, x, y, z):
        """Evaluate the expression on scalars (floats or mpmath numbers)."""
        return tuple(self.expr(x, y, z))


# --------------------------------------------------------------------------
# built-in fields
# --------------------------------------------------------------------------

def _example1(x, y, z):
    sx, sy, sz = sin(pi * x), sin(pi * y), sin(pi * z)
    cx, cy, cz = cos(pi * x), cos(pi * y), cos(pi * z)
    sx2, sy2, sz2 = sx * sx, sy * sy, sz * sz
    return (sx2 * sx * sy2 * sz2 * cy * cz,
            sy2 * sy * sz2 * sx2 * cz * cx,
            -2 * (sz2 * sz * sx2 * sy2 * cx * cy))


def _example2(x, y, z):
    sx, sy, sz = sin(x), sin(y), sin(z)
    return sy * sz, sz * sx, sx * sy


def example_solution(which):
    """Exact solution of example 1 (homogeneous data) or 2 (nonhomogeneous)."""
    if which == 1:
        return AnalyticField("example1", _example1)
    if which == 2:
        return AnalyticField("example2", _example2)
    raise ValueError(f"unknown example {which!r}; expected 1 or 2")


def random_trig_field(seed, n_terms=3, max_freq=2.0):
    """Smooth field ``sum a_j sin(w_j . x + phi_j)`` with seeded coefficients."""
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(n_terms, 3))
    freqs = rng.uniform(-max_freq, max_freq, size=(n_terms, 3))
    phases = rng.uniform(0, 2 * pi, size=n_terms)

    def expr(x, y, z):
        out = [0.0, 0.0, 0.0]
        for a, w, p in zip(amps, freqs, phases):
            s = sin(float(w[0]) * x + float(w[1]) * y + float(w[2]) * z + float(p))
            out = [o + float(ai) * s for o, ai in zip(out, a)]
        return tuple(out)

    return AnalyticField(f"trig(seed={seed})", expr)


def polynomial_field(coeffs, degree):
    """Vector polynomial with monomial coefficients ``(3, n)`` over :class:`MonomialBasis`."""
    coeffs = np.asarray(coeffs, dtype=float)
    exps = monomial_basis(3, degree).exponents

    def expr(x, y, z):
        out = []
        for comp in coeffs:
            acc = 0.0
            for cval, e in zip(comp, exps):
                if cval:
                    acc = acc + cval * (x ** int(e[0])) * (y ** int(e[1])) * (z ** int(e[2]))
            out.append(acc)
        return tuple(out)

    return AnalyticField(f"poly(deg={degree})", expr)


def gradient_field(phi_expr, name="grad"):
    """Exact gradient of a jet-compatible scalar expression (via a one-order-higher jet)."""
    def expr(x, y, z):
        if isinstance(x, Jet):
            order = x.order
            pts = np.stack([x.value, y.value, z.value], axis=1)
            up = [Jet.variable(pts, a, order + 1) for a in range(3)]
            phi = phi_expr(*up)
            return tuple(phi.diff(a) for a in range(3))
        raise TypeError("gradient_field only evaluates on jets")

    return AnalyticField(name, expr)


# --------------------------------------------------------------------------
# finite-difference oracle
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def fd_stencil(m):
    """Offsets and exact weights of the 4th-order central stencil for ``d^m``."""
    if m == 0:
        return (0,), (Fraction(1),)
    r = (m + 1) // 2 + 1
    offsets = list(range(-r, r + 1))
    n = len(offsets)
    # solve sum_j w_j o_j^p / p! = delta_{p m} exactly
    A = [[Fraction(o) ** p / factorial(p) for o in offsets] + [Fraction(int(p == m))]
         for p in range(n)]
    for col in range(n):
        piv = next(r_ for r_ in range(col, n) if A[r_][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        for r_ in range(n):
            if r_ != col and A[r_][col] != 0:
                f = A[r_][col] / A[col][col]
                A[r_] = [a - f * b for a, b in zip(A[r_], A[col])]
    return tuple(offsets), tuple(A[i][n] / A[i][i] for i in range(n))


def fd_oracle(field, multi_index, point, step=1e-4, dps=40):
    """Central-difference estimate of ``d^alpha u`` in extended precision.

    The tensor-product stencil is 4th-order accurate in ``step``; evaluating in
    ``dps`` decimal digits keeps rounding far below the truncation error even
    for fourth derivatives.
    """
    with mpmath.workdps(dps):
        h = mpmath.mpf(step)
        stencils = [fd_stencil(int(a)) for a in multi_index]
        base = [mpmath.mpf(float(p)) for p in point]
        total = [mpmath.mpf(0)] * 3
        for ox, wx in zip(*stencils[0]):
            for oy, wy in zip(*stencils[1]):
                for oz, wz in zip(*stencils[2]):
                    w = mpmath.mpf(wx.numerator * wy.numerator * wz.numerator) / \
                        (wx.denominator * wy.denominator * wz.denominator)
                    vals = field.scalar(base[0] + ox * h, base[1] + oy * h, base[2] + oz * h)
                    total = [t + w * mpmath.mpf(v) for t, v in zip(total, vals)]
        scale = h ** int(sum(multi_index))
        return np.array([float(t / scale) for t in total])
