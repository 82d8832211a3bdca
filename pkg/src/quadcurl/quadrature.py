"""Conical-product (collapsed Gauss-Jacobi) quadrature on the reference simplex.

Reference simplices have vertex 0 at the origin and vertex ``i`` at the unit
vector ``e_i``; their measures are 1, 1/2 and 1/6 in dimensions 1, 2, 3.
Points are stored in barycentric coordinates ``(lam_0, ..., lam_d)`` so the
same rule maps onto any physical simplex by ``x = lam @ vertices``.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 14

REFERENCE_MEASURE = {1: 1.0, 2: 0.5, 3: 1.0 / 6.0}


@dataclass(frozen=True)
class QuadratureRule:
    dimension: int
    degree: int
    points: np.ndarray  # (npts, dimension + 1) barycentric
    weights: np.ndarray  # (npts,)

    @property
    def cartesian(self):
        """Points in reference Cartesian coordinates (drop ``lam_0``)."""
        return self.points[:, 1:]

    def __len__(self):
        return len(self.weights)

    def map_to(self, vertices):
        """Physical points and weights on the simplex spanned by ``vertices``.

        ``vertices`` has shape ``(..., dimension + 1, 3)``; leading axes are
        broadcast so many simplices can be handled at once.
        """
        vertices = np.asarray(vertices, dtype=float)
        pts = np.einsum("qi,...ic->...qc", self.points, vertices)
        measure = simplex_measure(vertices)
        scale = measure / REFERENCE_MEASURE[self.dimension]
        return pts, self.weights * np.asarray(scale)[..., None]


def simplex_measure(vertices):
    """Length / area / volume of simplices given as ``(..., d + 1, 3)``."""
    vertices = np.asarray(vertices, dtype=float)
    d = vertices.shape[-2] - 1
    edges = vertices[..., 1:, :] - vertices[..., :1, :]
    if d == 1:
        return np.linalg.norm(edges[..., 0, :], axis=-1)
    if d == 2:
        return 0.5 * np.linalg.norm(np.cross(edges[..., 0, :], edges[..., 1, :]), axis=-1)
    return np.abs(np.linalg.det(edges)) / 6.0


def _gauss_jacobi01(n, alpha):
    """Nodes/weights on [0, 1] for the weight ``(1 - t)**alpha``."""
    x, w = roots_jacobi(n, alpha, 0.0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def make_rule(dimension, degree):
    """Quadrature rule exact for polynomials of total ``degree`` on the simplex."""
    if dimension not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {dimension}")
    if not 0 <= degree <= MAX_DEGREE:
        raise ValueError(f"degree out of range: {degree} not in [0, {MAX_DEGREE}]")
    n = degree // 2 + 1
    # collapsed coordinate j carries the Jacobian factor (1 - t_j)**(d - 1 - j)
    rules = [_gauss_jacobi01(n, dimension - 1 - j) for j in range(dimension)]
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrid = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    t = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)

    lam = np.zeros((len(w), dimension + 1))
    remaining = np.ones(len(w))
    for j in range(dimension):
        lam[:, j + 1] = remaining * t[:, j]
        remaining = remaining * (1.0 - t[:, j])
    lam[:, 0] = remaining
    lam.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(dimension, degree, lam, w)


def integrate_monomial(simplex_dimension, exponents):
    """Exact integral of ``prod(lam_i ** a_i)`` over the reference simplex."""
    exponents = [int(a) for a in exponents]
    if len(exponents) != simplex_dimension + 1:
        raise ValueError("need one exponent per barycentric coordinate")
    if any(a < 0 for a in exponents):
        raise ValueError("exponents must be nonnegative")
    d = simplex_dimension
    num = 1
    for a in exponents:
        num *= factorial(a)
    return num * factorial(d) * REFERENCE_MEASURE[d] / factorial(sum(exponents) + d)
