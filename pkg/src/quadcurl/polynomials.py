"""Monomial bases and coefficient-level calculus for polynomials in R^3.

A scalar polynomial is a coefficient vector over a :class:`MonomialBasis`;
a vector field is an array of shape ``(..., 3, n)``.  Differentiation and
products act on coefficients, so no numerical differentiation happens here.
"""

from functools import lru_cache
from itertools import product
from math import comb

import numpy as np


def _graded_lex(dim, degree):
    out = []
    for total in range(degree + 1):
        level = [e for e in product(range(total, -1, -1), repeat=dim) if sum(e) == total]
        out.extend(sorted(level, reverse=True))
    return out


class MonomialBasis:
    """Monomials of total degree <= ``degree`` in ``dim`` variables.

    Ordering is graded lexicographic and fixed: in 3D it starts
    ``1, x, y, z, x^2, xy, xz, y^2, yz, z^2, ...``.
    """

    def __init__(self, dim, degree):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        self.dim = dim
        self.degree = degree
        self.exponents = np.array(_graded_lex(dim, degree), dtype=np.int64).reshape(-1, dim)
        self._index = {tuple(e): i for i, e in enumerate(self.exponents.tolist())}
        assert len(self.exponents) == comb(degree + dim, dim)

    def __len__(self):
        return len(self.exponents)

    def __repr__(self):
        return f"MonomialBasis(dim={self.dim}, degree={self.degree})"

    def index(self, exponent):
        return self._index[tuple(exponent)]

    def count(self, degree):
        """Number of leading monomials with total degree <= ``degree``."""
        return comb(degree + self.dim, self.dim) if degree >= 0 else 0


@lru_cache(maxsize=None)
def monomial_basis(dim, degree):
    return MonomialBasis(dim, degree)


def eval_monomials(basis, points, gradient=False):
    """Values (and optionally gradients) of every basis monomial.

    Returns ``values`` of shape ``(npts, n)`` and, with ``gradient=True``,
    also ``grads`` of shape ``(npts, n, dim)``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    e = basis.exponents
    powers = [np.stack([pts[:, j] ** p for p in range(basis.degree + 1)], axis=1)
              for j in range(basis.dim)]
    vals = np.ones((len(pts), len(basis)))
    for j in range(basis.dim):
        vals *= powers[j][:, e[:, j]]
    if not gradient:
        return vals
    grads = np.empty((len(pts), len(basis), basis.dim))
    for axis in range(basis.dim):
        g = np.ones((len(pts), len(basis)))
        for j in range(basis.dim):
            if j == axis:
                lowered = np.maximum(e[:, j] - 1, 0)
                g *= powers[j][:, lowered] * e[:, j]
            else:
                g *= powers[j][:, e[:, j]]
        grads[:, :, axis] = g
    return vals, grads


@lru_cache(maxsize=None)
def diff_matrix(degree, axis):
    """Matrix ``M`` with ``coeffs @ M.T`` the ``axis``-derivative (3D basis)."""
    basis = monomial_basis(3, degree)
    n = len(basis)
    m = np.zeros((n, n))
    for i, e in enumerate(basis.exponents):
        if e[axis] == 0:
            continue
        lower = e.copy()
        lower[axis] -= 1
        m[basis.index(lower), i] = e[axis]
    m.setflags(write=False)
    return m


def derivative(coeffs, axis, degree):
    return coeffs @ diff_matrix(degree, axis).T


def gradient(coeffs, degree):
    """Scalar ``(..., n)`` -> vector ``(..., 3, n)``."""
    return np.stack([derivative(coeffs, a, degree) for a in range(3)], axis=-2)


def curl(coeffs, degree):
    """Vector ``(..., 3, n)`` -> vector ``(..., 3, n)``."""
    d = lambda comp, axis: derivative(coeffs[..., comp, :], axis, degree)  # noqa: E731
    return np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)], axis=-2)


def divergence(coeffs, degree):
    return sum(derivative(coeffs[..., a, :], a, degree) for a in range(3))


def jacobian(coeffs, degree):
    """Vector ``(..., 3, n)`` -> ``(..., 3, 3, n)`` with ``[i, j] = d v_i / d x_j``."""
    return np.stack([derivative(coeffs, a, degree) for a in range(3)], axis=-2)


@lru_cache(maxsize=None)
def _product_table(degree):
    basis = monomial_basis(3, degree)
    e = basis.exponents
    summed = e[:, None, :] + e[None, :, :]
    table = np.full((len(e), len(e)), -1, dtype=np.int64)
    for i in range(len(e)):
        for j in range(len(e)):
            if summed[i, j].sum() <= degree:
                table[i, j] = basis.index(summed[i, j])
    return table


def multiply(a, b, degree):
    """Product of two scalar polynomials; raises if it overflows ``degree``."""
    table = _product_table(degree)
    outer = np.outer(a, b)
    mask = outer != 0
    if np.any(table[mask] < 0):
        raise ValueError(f"product exceeds degree {degree}")
    out = np.zeros(len(a))
    np.add.at(out, table[mask], outer[mask])
    return out


def affine(grad, const, degree):
    """Coefficients of ``grad . x + const``."""
    c = np.zeros(monomial_basis(3, degree).count(degree))
    c[0] = const
    c[1:4] = grad
    return c


def evaluate(coeffs, points, degree):
    """Evaluate coefficient arrays ``(..., n)`` at ``points`` -> ``(npts, ...)``."""
    m = eval_monomials(monomial_basis(3, degree), points)
    return np.tensordot(m, coeffs, axes=([1], [-1]))
