"""Local shape spaces, DOF functionals and nodal bases on one tetrahedron.

Every polynomial lives in element-local scaled coordinates
``xi = (x - centroid) / h_K`` and is stored as monomial coefficients, so
curl and grad-curl are exact coefficient operations.

DOF functionals are attached to mesh entities rather than to elements: an
edge functional only sees the two edge endpoints (lower global id first), a
face functional only sees the sorted face triple.  Two tets sharing an
entity therefore apply byte-identical functionals to their traces.

Normalisations (all entity-intrinsic):

* edge ``e``:  ``|e|^-1 <u.t_e, s^j>_e`` with ``s in [0, 1]`` from the lower vertex;
* face tangential: ``|F|^-1 <u x n_F, t_a m_j>_F`` with ``m_j`` monomials in the
  face barycentrics of the 2nd and 3rd sorted vertices, ordered ``(j, a)``;
* face curl: the same functional applied to ``h_F curl u`` (``h_F`` = face diameter);
* face normal (V only): ``|F|^-1 <u.n_F, m_j>_F``;
* interior: ``|K|^-1 (u, rho)_K``.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import polynomials as poly
from .mesh import LOCAL_EDGES, LOCAL_FACES
from .quadrature import make_rule

RANK_TOL = 1e-10
SUPPORTED_ORDERS = (1, 2)


class UnisolvencyError(RuntimeError):
    """Raised when a DOF matrix is (numerically) singular."""


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def dof_quadrature_degree(k):
    return min(2 * k + 8, 14)


def null_space(mat, expected=None, what="null space"):
    """Orthonormal null-space basis (columns) using a relative SVD cut-off."""
    mat = np.atleast_2d(mat)
    if mat.shape[0] == 0:
        basis = np.eye(mat.shape[1])
    else:
        _, s, vt = np.linalg.svd(mat)
        cutoff = RANK_TOL * (s[0] if len(s) and s[0] > 0 else 1.0)
        rank = int(np.sum(s > cutoff))
        basis = vt[rank:].T
    if expected is not None and basis.shape[1] != expected:
        raise UnisolvencyError(f"{what}: dimension {basis.shape[1]}, expected {expected}")
    return basis


# --------------------------------------------------------------------------
# entity functionals (vectorised over entities)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EntityFunctional:
    """``dof_d = sum_{q,c} weights[..., d, q, c] * g(points[..., q, :])[c]``.

    ``source`` says which field ``g`` is: ``"value"`` or ``"curl"``.
    """
    points: np.ndarray  # (..., nq, 3)
    weights: np.ndarray  # (..., nd, nq, 3)
    source: str = "value"

    @property
    def size(self):
        return self.weights.shape[-3]

    def apply(self, values):
        """``values`` has shape ``(..., nq, 3)`` matching ``points``."""
        return np.einsum("...dqc,...qc->...d", self.weights, values)


def edge_functional(a, b, k):
    """Tangential moments against ``s^j``, ``j <= k`` on edges ``a -> b``."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    rule = make_rule(1, dof_quadrature_degree(k))
    s = rule.points[:, 1]
    pts = a[..., None, :] + s[:, None] * (b - a)[..., None, :]
    t = _unit(b - a)
    tests = rule.weights[None, :] * s[None, :] ** np.arange(k + 1)[:, None]  # (k+1, nq)
    w = tests[..., None] * t[..., None, None, :]
    return EntityFunctional(pts, w)


def _face_setup(p0, p1, p2, test_degree, k):
    p = np.stack([np.asarray(p0, float), np.asarray(p1, float), np.asarray(p2, float)], axis=-2)
    rule = make_rule(2, dof_quadrature_degree(k))
    pts = np.einsum("qi,...ic->...qc", rule.points, p)
    n = _unit(np.cross(p[..., 1, :] - p[..., 0, :], p[..., 2, :] - p[..., 0, :]))
    t1 = _unit(p[..., 1, :] - p[..., 0, :])
    t2 = np.cross(n, t1)
    tests = poly.eval_monomials(poly.monomial_basis(2, test_degree), rule.points[:, 1:]) \
        if test_degree >= 0 else np.zeros((len(rule.weights), 0))
    # weights sum to 1/2 on the reference triangle, so 2 w_q averages over F
    tests = 2.0 * rule.weights[:, None] * tests  # (nq, nm)
    return p, pts, n, t1, t2, tests


def face_tangential_functional(p0, p1, p2, test_degree, k, curl_scaled=False):
    """Moments of ``u x n_F`` against ``t_a m_j``; ``curl_scaled`` switches to ``h_F curl u``."""
    p, pts, n, t1, t2, tests = _face_setup(p0, p1, p2, test_degree, k)
    # (u x n).t1 = u.t2 and (u x n).t2 = -u.t1
    dirs = np.stack([t2, -t1], axis=-2)  # (..., 2, 3)
    w = tests.T[:, None, :, None] * dirs[..., None, :, None, :]  # (..., nm, 2, nq, 3)
    w = w.reshape(w.shape[:-4] + (-1,) + w.shape[-2:])
    if curl_scaled:
        hF = np.max(np.stack([np.linalg.norm(p[..., i, :] - p[..., j, :], axis=-1)
                              for i, j in ((0, 1), (0, 2), (1, 2))]), axis=0)
        w = w * np.asarray(hF)[..., None, None, None]
        return EntityFunctional(pts, w, "curl")
    return EntityFunctional(pts, w)


def face_normal_functional(p0, p1, p2, test_degree, k):
    _, pts, n, _, _, tests = _face_setup(p0, p1, p2, test_degree, k)
    w = tests.T[:, :, None] * n[..., None, None, :]
    return EntityFunctional(pts, w)


def interior_functional(vertices, center, scale, tests_coeffs, degree, k):
    """Moments ``|K|^-1 (u, rho)_K`` for vector tests given as coefficients in ``xi``.

    ``vertices`` may carry leading batch axes ``(..., 4, 3)`` with matching
    ``center (..., 3)`` and ``scale (...)``.
    """
    rule = make_rule(3, dof_quadrature_degree(k))
    vertices = np.asarray(vertices, float)
    pts = np.einsum("qi,...ic->...qc", rule.points, vertices)
    xi = (pts - np.asarray(center)[..., None, :]) / np.asarray(scale)[..., None, None]
    rho = poly.evaluate(tests_coeffs, xi.reshape(-1, 3), degree)  # (P, nt, 3)
    rho = rho.reshape(xi.shape[:-1] + rho.shape[1:])  # (..., nq, nt, 3)
    w = 6.0 * rule.weights[:, None, None] * rho
    return EntityFunctional(pts, np.moveaxis(w, -2, -3))


# --------------------------------------------------------------------------
# shape spaces
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ShapeBasis:
    """Vector polynomials in ``xi = (x - center) / scale`` as ``(m, 3, n)`` coefficients."""
    center: np.ndarray
    scale: float
    degree: int
    coeffs: np.ndarray

    def __len__(self):
        return len(self.coeffs)

    def rank(self):
        flat = self.coeffs.reshape(len(self.coeffs), -1)
        s = np.linalg.svd(flat, compute_uv=False)
        return int(np.sum(s > RANK_TOL * s[0])) if len(s) else 0


@dataclass(frozen=True)
class TetGeometry:
    vertices: np.ndarray  # (4, 3)
    vertex_ids: tuple

    @cached_property
    def center(self):
        return self.vertices.mean(axis=0)

    @cached_property
    def scale(self):
        return float(max(np.linalg.norm(self.vertices[i] - self.vertices[j]) for i, j in LOCAL_EDGES))

    @cached_property
    def local_vertices(self):
        return (self.vertices - self.center) / self.scale

    @cached_property
    def lambda_coeffs(self):
        """Barycentric coordinates as degree-1 polynomials in ``xi``: ``(4, 4)``."""
        T = np.concatenate([self.local_vertices, np.ones((4, 1))], axis=1)
        inv = np.linalg.inv(T)
        return np.stack([np.concatenate([[inv[3, i]], inv[:3, i]]) for i in range(4)])

    @cached_property
    def volume(self):
        v = self.vertices
        return abs(np.linalg.det(v[1:] - v[:1])) / 6.0

    def sorted_face(self, i):
        """Local vertex indices of face ``i`` sorted by global id."""
        return tuple(sorted(LOCAL_FACES[i], key=lambda j: self.vertex_ids[j]))

    def oriented_edge(self, le):
        i, j = LOCAL_EDGES[le]
        return (i, j) if self.vertex_ids[i] < self.vertex_ids[j] else (j, i)

    def face_frame(self, i):
        """Global frame ``(t1, t2, n_F)`` of face ``i`` and whether ``n_F`` is outward."""
        a, b, c = (self.vertices[j] for j in self.sorted_face(i))
        n = _unit(np.cross(b - a, c - a))
        t1 = _unit(b - a)
        outward = np.dot(n, (a + b + c) / 3.0 - self.vertices[i]) > 0
        return t1, np.cross(n, t1), n, bool(outward)


def _as_geometry(vertices, vertex_ids=None):
    if isinstance(vertices, TetGeometry):
        return vertices
    v = np.asarray(vertices, dtype=float)
    if v.shape != (4, 3):
        raise ValueError("a tetrahedron needs 4 vertices in R^3")
    if abs(np.linalg.det(v[1:] - v[:1])) < 1e-14 * np.max(np.abs(v[1:] - v[:1])) ** 3:
        raise ValueError("degenerate tetrahedron")
    ids = tuple(range(4)) if vertex_ids is None else tuple(int(i) for i in vertex_ids)
    return TetGeometry(v, ids)


def lambda_polys(geom, degree):
    out = np.zeros((4, poly.monomial_basis(3, degree).count(degree)))
    out[:, :4] = geom.lambda_coeffs
    return out


def nedelec_coefficients(k, degree):
    """First-kind Nedelec space ``P_k^3 + {v homogeneous of degree k+1 : v.xi = 0}``."""
    if k < 0 or degree < k + 1:
        raise ValueError("need k >= 0 and degree >= k + 1")
    basis = poly.monomial_basis(3, degree)
    n = len(basis)
    nk = basis.count(k)
    full = []
    for i in range(nk):
        for c in range(3):
            v = np.zeros((3, n))
            v[c, i] = 1.0
            full.append(v)
    hom = range(basis.count(k), basis.count(k + 1))
    cand = [(c, i) for i in hom for c in range(3)]
    big = poly.monomial_basis(3, k + 2)
    M = np.zeros((len(big), len(cand)))
    for col, (c, i) in enumerate(cand):
        e = basis.exponents[i].copy()
        e[c] += 1
        M[big.index(e), col] = 1.0
    expected = len(cand) - (big.count(k + 2) - big.count(k + 1))
    ns = null_space(M, expected, "Nedelec homogeneous part")
    for col in ns.T:
        v = np.zeros((3, n))
        for weight, (c, i) in zip(col, cand):
            v[c, i] += weight
        full.append(v)
    return np.array(full)


def build_nedelec(k, vertices, vertex_ids=None, degree=None):
    """Shape basis of the local Nedelec space of order ``k`` (``k = 0`` is Whitney)."""
    geom = _as_geometry(vertices, vertex_ids)
    degree = k + 1 if degree is None else degree
    coeffs = nedelec_coefficients(k, degree)
    expected = (k + 1) * (k + 3) * (k + 4) // 2
    if len(coeffs) != expected:
        raise UnisolvencyError(f"Nedelec k={k}: got {len(coeffs)} functions, expected {expected}")
    return ShapeBasis(geom.center, geom.scale, degree, coeffs)


def face_bubble_weight(geom, face, degree):
    """``b_K b_F`` for face ``face`` as a polynomial in ``xi``."""
    lam = lambda_polys(geom, degree)
    out = lam[face].copy()
    for j in range(4):
        if j != face:
            out = poly.multiply(out, lam[j], degree)
            out = poly.multiply(out, lam[j], degree)
    return out


def build_QF(k, vertices, face, vertex_ids=None, degree=None):
    """Basis of ``Q_F^{k-1}(K)``: tangential ``P_{k-1}`` fields orthogonal, with
    weight ``b_K b_F``, to tangential ``P_{k-2}`` fields.
    """
    geom = _as_geometry(vertices, vertex_ids)
    degree = k + 6 if degree is None else degree
    basis = poly.monomial_basis(3, degree)
    n = len(basis)
    t1, t2, _, _ = geom.face_frame(face)
    # frame in xi coordinates is the same (pure translation + positive scaling)
    m = k - 1
    if m < 0:
        return ShapeBasis(geom.center, geom.scale, degree, np.zeros((0, 3, n)))

    def tangential(deg):
        out = []
        for j in range(basis.count(deg)):
            for t in (t1, t2):
                v = np.zeros((3, n))
                v[:, j] = t
                out.append(v)
        return np.array(out).reshape(-1, 3, n)

    cand = tangential(m)
    cons = tangential(m - 1)
    if len(cons):
        weight = face_bubble_weight(geom, face, degree)
        rule = make_rule(3, min(2 * k + 8, 14))
        xi = rule.points @ geom.local_vertices
        wq = rule.weights * poly.evaluate(weight, xi, degree)
        cv = poly.evaluate(cand, xi, degree)  # (nq, ncand, 3)
        wv = poly.evaluate(cons, xi, degree)
        gram = np.einsum("q,qac,qbc->ba", wq, cv, wv)
        ns = null_space(gram, len(cand) - len(cons), "Q_F constraint")
        cand = np.einsum("ab,acn->bcn", ns, cand)
    return ShapeBasis(geom.center, geom.scale, degree, cand)


def bubble_generators(k, geom, degree):
    """``b_K b_F q`` for every face ``F`` and every ``q`` in the ``Q_F`` basis."""
    out = []
    for face in range(4):
        qf = build_QF(k, geom, face, degree=degree)
        weight = face_bubble_weight(geom, face, degree)
        for q in qf.coeffs:
            out.append(np.stack([poly.multiply(weight, q[c], degree) for c in range(3)]))
    return np.array(out).reshape(-1, 3, len(poly.monomial_basis(3, degree)))


# --------------------------------------------------------------------------
# elements
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DofDescriptor:
    kind: str  # edge | face_tangent | curl_face | interior | face_normal
    entity: int  # local entity index (edge 0..5, face 0..3, 0 for interior)
    index: int  # index within the entity block


@dataclass(eq=False)
class LocalElement:
    space: str
    k: int
    geometry: TetGeometry
    degree: int
    shape: np.ndarray  # generating shape basis (m, 3, n)
    functionals: list  # [(DofDescriptor list, EntityFunctional)]
    dof_matrix: np.ndarray = field(repr=False)
    coeffs: np.ndarray = field(repr=False)  # nodal basis (m, 3, n)

    @property
    def dim(self):
        return len(self.coeffs)

    @property
    def dofs(self):
        return [d for descs, _ in self.functionals for d in descs]

    @cached_property
    def dual_matrix(self):
        return np.linalg.inv(self.dof_matrix)

    @cached_property
    def condition_number(self):
        return float(np.linalg.cond(self.dof_matrix))

    @cached_property
    def curl_coeffs(self):
        return poly.curl(self.coeffs, self.degree)

    @cached_property
    def gradcurl_coeffs(self):
        return poly.jacobian(self.curl_coeffs, self.degree)

    def local_coords(self, x, center=None):
        c = self.geometry.center if center is None else center
        return (np.asarray(x, float) - c) / self.geometry.scale

    def evaluate(self, x, center=None, what=("value", "curl", "gradcurl")):
        """Physical values / curls / grad-curls of all nodal basis functions.

        Returns a dict with arrays ``(npts, ndof, 3)`` (``(npts, ndof, 3, 3)``
        for ``gradcurl``, indexed ``[p, i, comp, deriv]``).  ``center`` lets a
        translated copy of this element reuse the same coefficients.
        """
        xi = np.atleast_2d(self.local_coords(x, center))
        h = self.geometry.scale
        m = poly.eval_monomials(poly.monomial_basis(3, self.degree), xi)
        out = {}
        if "value" in what:
            out["value"] = np.einsum("pn,icn->pic", m, self.coeffs)
        if "curl" in what:
            out["curl"] = np.einsum("pn,icn->pic", m, self.curl_coeffs) / h
        if "gradcurl" in what:
            out["gradcurl"] = np.einsum("pn,icdn->picd", m, self.gradcurl_coeffs) / h ** 2
        if "div" in what:
            div = poly.divergence(self.coeffs, self.degree)
            out["div"] = (m @ div.T) / h
        return out

    def apply_dofs(self, value_fn, curl_fn=None):
        """DOF values of a field given callables returning values/curls at points."""
        out = []
        for _, fn in self.functionals:
            g = value_fn if fn.source == "value" else curl_fn
            out.append(fn.apply(g(fn.points)))
        return np.concatenate(out)

    def interpolate(self, value_fn, curl_fn=None):
        """Local nodal coefficients of the interpolant of a field."""
        return self.apply_dofs(value_fn, curl_fn)

    def combine(self, dof_values, x, center=None, what=("value", "curl", "gradcurl")):
        """Evaluate ``sum_i dof_values[i] phi_i`` at ``x``."""
        ev = self.evaluate(x, center, what)
        return {key: np.tensordot(ev[key], dof_values, axes=([1], [0])) if ev[key].ndim == 2
                else np.einsum("pi...,i->p...", ev[key], dof_values) for key in ev}


def _shape_evaluator(shape, geom, degree):
    curls = poly.curl(shape, degree)

    def values(x):
        return poly.evaluate(shape, (x - geom.center) / geom.scale, degree)

    def curl_values(x):
        return poly.evaluate(curls, (x - geom.center) / geom.scale, degree) / geom.scale

    return values, curl_values


def _finish(space, k, geom, degree, shape, functionals):
    values, curl_values = _shape_evaluator(shape, geom, degree)
    rows = []
    for _, fn in functionals:
        g = values if fn.source == "value" else curl_values
        rows.append(np.einsum("dqc,qsc->ds", fn.weights, g(fn.points)))
    D = np.concatenate(rows)
    # column equilibration; bubble generators are O(4^-7) in magnitude
    norms = np.linalg.norm(D, axis=0)
    norms[norms == 0] = 1.0
    D = D / norms
    shape = shape / norms[:, None, None]
    ndofs = sum(len(d) for d, _ in functionals)
    if D.shape != (ndofs, len(shape)):
        raise UnisolvencyError(f"{space}^{k}: {ndofs} DOFs for {len(shape)} shape functions")
    s = np.linalg.svd(D, compute_uv=False)
    if s[-1] <= RANK_TOL * s[0]:
        raise UnisolvencyError(
            f"{space}^{k} DOF matrix singular on tet {geom.vertices.tolist()}: "
            f"condition number {s[0] / max(s[-1], 1e-300):.3e}")
    nodal = np.einsum("sj,scn->jcn", np.linalg.inv(D), shape)
    return LocalElement(space, k, geom, degree, shape, functionals, D, nodal)


def _check_order(k):
    if k not in SUPPORTED_ORDERS:
        raise ValueError(f"order k={k} unsupported (supported: {SUPPORTED_ORDERS})")


def u_interior_tests(k, degree):
    """``e_c m_j(xi)`` for monomials of degree <= k - 2, ordered ``(j, c)``."""
    basis = poly.monomial_basis(3, degree)
    tests = np.zeros((3 * basis.count(k - 2), 3, len(basis)))
    for j in range(basis.count(k - 2)):
        for c in range(3):
            tests[3 * j + c, c, j] = 1.0
    return tests


def v_interior_tests(k, degree):
    if k < 2:
        return np.zeros((0, 3, len(poly.monomial_basis(3, degree))))
    return nedelec_coefficients(k - 2, degree)


def u_functionals(k, geom):
    """DOF functionals of ``U^k``: edges, face tangents, face curls, interior."""
    V = geom.vertices
    out = []
    for le in range(6):
        a, b = geom.oriented_edge(le)
        fn = edge_functional(V[a], V[b], k)
        out.append(([DofDescriptor("edge", le, j) for j in range(fn.size)], fn))
    for kind, scaled in (("face_tangent", False), ("curl_face", True)):
        for f in range(4):
            a, b, c = geom.sorted_face(f)
            fn = face_tangential_functional(V[a], V[b], V[c], k - 1, k, curl_scaled=scaled)
            out.append(([DofDescriptor(kind, f, j) for j in range(fn.size)], fn))
    if k >= 2:
        degree = k + 6
        fn = interior_functional(V, geom.center, geom.scale, u_interior_tests(k, degree), degree, k)
        out.append(([DofDescriptor("interior", 0, j) for j in range(fn.size)], fn))
    return out


def u_shape_basis(k, geom):
    degree = k + 6
    ned = nedelec_coefficients(k, degree)
    bubbles = bubble_generators(k, geom, degree)
    return degree, ned, bubbles


def build_U(k, vertices, vertex_ids=None):
    """Nodal element for ``U^k(K) = N^k(K) + b_K Q^{k-1}(K)``."""
    _check_order(k)
    geom = _as_geometry(vertices, vertex_ids)
    degree, ned, bubbles = u_shape_basis(k, geom)
    shape = np.concatenate([ned, bubbles])
    return _finish("U", k, geom, degree, shape, u_functionals(k, geom))


def v_functionals(k, geom):
    """DOF functionals of ``V^k``: face normals, face tangents, interior Nedelec moments."""
    V = geom.vertices
    out = []
    for f in range(4):
        a, b, c = geom.sorted_face(f)
        fn = face_normal_functional(V[a], V[b], V[c], k, k)
        out.append(([DofDescriptor("face_normal", f, j) for j in range(fn.size)], fn))
    for f in range(4):
        a, b, c = geom.sorted_face(f)
        fn = face_tangential_functional(V[a], V[b], V[c], k - 1, k)
        out.append(([DofDescriptor("face_tangent", f, j) for j in range(fn.size)], fn))
    if k >= 2:
        degree = k + 6
        fn = interior_functional(V, geom.center, geom.scale, v_interior_tests(k, degree), degree, k)
        out.append(([DofDescriptor("interior", 0, j) for j in range(fn.size)], fn))
    return out


def build_V(k, vertices, vertex_ids=None):
    """Nodal element for ``V^k(K) = P_k(K)^3 + curl(b_K Q^{k-1}(K))``."""
    _check_order(k)
    geom = _as_geometry(vertices, vertex_ids)
    degree = k + 6
    n = len(poly.monomial_basis(3, degree))
    full = []
    for i in range(poly.monomial_basis(3, degree).count(k)):
        for c in range(3):
            v = np.zeros((3, n))
            v[c, i] = 1.0
            full.append(v)
    curl_bubbles = poly.curl(bubble_generators(k, geom, degree), degree)
    shape = np.concatenate([np.array(full), curl_bubbles])
    return _finish("V", k, geom, degree, shape, v_functionals(k, geom))


def space_dimension(space, k):
    """Closed-form local dimensions used for cross-checks."""
    ned = (k + 1) * (k + 3) * (k + 4) // 2
    face = k * (k + 1)  # 2 * dim P_{k-1}(F)
    if space == "N":
        return ned
    if space == "U":
        return ned + 4 * face
    if space == "V":
        return 3 * (k + 1) * (k + 2) * (k + 3) // 6 + 4 * face
    raise ValueError(space)


# --------------------------------------------------------------------------
# element reuse on meshes
# --------------------------------------------------------------------------

def geometry_key(vertices, vertex_ids, digits=10):
    """Key under which two tets share a nodal basis up to translation."""
    v = np.asarray(vertices, float)
    c = v.mean(axis=0)
    h = max(np.linalg.norm(v[i] - v[j]) for i, j in LOCAL_EDGES)
    ranks = tuple(np.argsort(np.argsort(vertex_ids)).tolist())
    return ranks, tuple(np.round((v - c) / h, digits).ravel().tolist()), round(h, digits)


def element_groups(mesh, k, space="U"):
    """Group the tets of ``mesh`` by translation class and build one element each.

    Returns a list of ``(element, tet_indices)``.
    """
    builder = {"U": build_U, "V": build_V}[space]
    coords = mesh.tet_coords()
    c = coords.mean(axis=1)
    rel = coords - c[:, None, :]
    h = mesh.diameters()
    ranks = np.argsort(np.argsort(mesh.tets, axis=1), axis=1)
    signature = np.concatenate([ranks, np.round(rel / h[:, None, None], 10).reshape(len(h), -1),
                                np.round(h, 10)[:, None]], axis=1)
    _, first, inverse = np.unique(signature, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    groups = []
    for g, t0 in enumerate(first):
        elem = builder(k, coords[t0], mesh.tets[t0])
        groups.append((elem, np.flatnonzero(inverse == g)))
    return groups
