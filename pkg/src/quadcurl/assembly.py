"""Global DOF numbering and assembly of the mixed quad-curl system.

The discrete problem couples ``u_h`` in the nonconforming space ``U_h`` with a
Lagrange multiplier ``p_h`` in continuous ``P_{k+1}``::

    [A  B^T] [u]   [F]
    [B  0  ] [p] = [0]

with ``A_ij = sum_K (grad curl phi_j, grad curl phi_i)_K``,
``B_qj = (phi_j, grad psi_q)`` and ``F_i = (f, phi_i)``.  Essential
conditions are imposed by symmetric elimination to identity rows.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as iproduct

import numpy as np
import scipy.io
import scipy.sparse as sp

from . import polynomials as poly
from .local_spaces import element_groups
from .quadrature import make_rule

log = logging.getLogger(__name__)


def assembly_quadrature_degree(k):
    return min(2 * (k + 1) + 8, 14)


# --------------------------------------------------------------------------
# Lagrange multiplier space
# --------------------------------------------------------------------------

def lagrange_multi_indices(order):
    """Barycentric multi-indices of the equispaced ``P_order`` nodes on a tet."""
    return [a for a in iproduct(range(order + 1), repeat=4) if sum(a) == order][::-1]


def lagrange_coefficients(order, geom):
    """Nodal ``P_order`` basis in the element's scaled coordinates, ``(nloc, n)``."""
    alphas = np.array(lagrange_multi_indices(order), dtype=float)
    nodes = alphas @ geom.local_vertices / order
    vander = poly.eval_monomials(poly.monomial_basis(3, order), nodes)
    return np.linalg.inv(vander).T


# --------------------------------------------------------------------------
# DOF numbering
# --------------------------------------------------------------------------

@dataclass(eq=False)
class DofMap:
    mesh: object
    k: int
    n_edge: int  # DOFs per edge
    n_face: int  # DOFs per face and per block (tangent, curl)
    n_interior: int
    w_order: int
    w_tet_dofs: np.ndarray  # (nT, nloc_W)
    n_W: int
    w_boundary: np.ndarray  # bool (n_W,)
    w_nodes: np.ndarray = field(repr=False)  # (n_W, 3) coordinates

    @property
    def offsets(self):
        m = self.mesh
        e = 0
        ft = e + self.n_edge * m.n_edges
        cf = ft + self.n_face * m.n_faces
        it = cf + self.n_face * m.n_faces
        return {"edge": e, "face_tangent": ft, "curl_face": cf, "interior": it,
                "end": it + self.n_interior * m.n_tets}

    @property
    def n_U(self):
        return self.offsets["end"]

    @cached_property
    def u_boundary(self):
        m = self.mesh
        off = self.offsets
        mask = np.zeros(self.n_U, dtype=bool)
        be = np.flatnonzero(m.boundary_edges)
        mask[(off["edge"] + self.n_edge * be[:, None] + np.arange(self.n_edge)).ravel()] = True
        bf = np.flatnonzero(m.boundary_faces)
        for blk in ("face_tangent", "curl_face"):
            mask[(off[blk] + self.n_face * bf[:, None] + np.arange(self.n_face)).ravel()] = True
        return mask

    def u_tet_dofs(self, element, tets):
        """Global U ids for the local DOFs of ``element`` on tets ``tets``: ``(len(tets), ndof)``."""
        m = self.mesh
        off = self.offsets
        cols = []
        for d in element.dofs:
            if d.kind == "edge":
                cols.append(off["edge"] + self.n_edge * m.tet_edges[tets, d.entity] + d.index)
            elif d.kind in ("face_tangent", "curl_face"):
                cols.append(off[d.kind] + self.n_face * m.tet_faces[tets, d.entity] + d.index)
            elif d.kind == "interior":
                cols.append(off["interior"] + self.n_interior * tets + d.index)
            else:
                raise ValueError(f"{d.kind} is not a U DOF")
        return np.stack(cols, axis=1)


def number_dofs(mesh, k):
    """Entity-based numbering of ``U_h`` and of the ``P_{k+1}`` multiplier space."""
    n_edge = k + 1
    n_face = k * (k + 1)
    n_interior = 3 * (k - 1) * k * (k + 1) // 6 if k >= 2 else 0

    order = k + 1
    alphas = np.array(lagrange_multi_indices(order))
    nT = mesh.n_tets
    # a node is identified by its support vertices and their barycentric weights
    ids = mesh.tets[:, None, :].repeat(len(alphas), axis=1)  # (nT, nl, 4)
    a = np.broadcast_to(alphas, ids.shape)
    key_ids = np.where(a > 0, ids, -1)
    order_idx = np.argsort(key_ids, axis=2)
    key = np.concatenate([np.take_along_axis(key_ids, order_idx, 2),
                          np.take_along_axis(a, order_idx, 2)], axis=2).reshape(-1, 8)
    uniq, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    w_tet_dofs = inv.reshape(nT, len(alphas))

    coords = (alphas[None] @ mesh.vertices[mesh.tets]).reshape(-1, 3)[first] / order
    support = uniq[:, :4]
    size = np.sum(support >= 0, axis=1)
    boundary = np.zeros(len(uniq), dtype=bool)
    edge_lookup = {tuple(e): i for i, e in enumerate(mesh.edges.tolist())}
    face_lookup = {tuple(f): i for i, f in enumerate(mesh.faces.tolist())}
    for n, (s, sz) in enumerate(zip(support.tolist(), size.tolist())):
        verts = tuple(v for v in s if v >= 0)
        if sz == 1:
            boundary[n] = mesh.boundary_vertices[verts[0]]
        elif sz == 2:
            boundary[n] = mesh.boundary_edges[edge_lookup[verts]]
        elif sz == 3:
            boundary[n] = mesh.boundary_faces[face_lookup[verts]]
    return DofMap(mesh, k, n_edge, n_face, n_interior, order, w_tet_dofs, len(uniq), boundary,
                  coords)


# --------------------------------------------------------------------------
# element-level data shared by assembly, interpolation and error norms
# --------------------------------------------------------------------------

@dataclass(eq=False)
class GroupData:
    """One translation class of tets with its element and reference quadrature."""
    element: object
    tets: np.ndarray
    shifts: np.ndarray  # (ntets, 3) centroid offsets from the representative
    points: np.ndarray  # (nq, 3) quadrature points on the representative
    weights: np.ndarray  # (nq,) physical weights
    u_dofs: np.ndarray  # (ntets, ndof)
    w_dofs: np.ndarray  # (ntets, nloc_W)
    w_coeffs: np.ndarray  # (nloc_W, n) Lagrange basis in xi

    def tet_points(self, idx=slice(None)):
        return self.points[None, :, :] + self.shifts[idx, None, :]

    @cached_property
    def basis(self):
        return self.element.evaluate(self.points)

    @cached_property
    def w_gradients(self):
        geom = self.element.geometry
        xi = (self.points - geom.center) / geom.scale
        grads = poly.evaluate(poly.gradient(self.w_coeffs, self.w_order), xi, self.w_order)
        return grads / geom.scale  # (nq, nloc, 3)

    @property
    def w_order(self):
        return self.element.k + 1

    @cached_property
    def local_gradient(self):
        """``(ndof, nloc_W)``: local DOFs of the gradients of the Lagrange basis."""
        elem = self.element
        geom = elem.geometry
        order = self.w_order
        grad = poly.gradient(self.w_coeffs, order)

        def value_fn(x):
            return poly.evaluate(grad, (x - geom.center) / geom.scale, order) / geom.scale

        def curl_fn(x):
            return np.zeros((len(x), len(self.w_coeffs), 3))

        return np.concatenate([
            np.einsum("dqc,qac->da", fn.weights,
                      (value_fn if fn.source == "value" else curl_fn)(fn.points))
            for _, fn in elem.functionals])

    @cached_property
    def gradient_projector(self):
        """Orthogonal projector onto the complement of the local gradients (coefficient space)."""
        u, sv, _ = np.linalg.svd(self.local_gradient, full_matrices=False)
        q = u[:, sv > 1e-10 * sv[0]]
        return np.eye(len(q)) - q @ q.T

    @cached_property
    def faces(self):
        """Face quadrature on the representative, shared by both neighbours of each face.

        Points follow the global (sorted-id) vertex order of every face so the
        two tets adjacent to a face see identical physical points.
        Returns ``(points (4, nq, 3), weights (4, nq), outward normals (4, 3))``.
        """
        geom = self.element.geometry
        rule = make_rule(2, assembly_quadrature_degree(self.element.k))
        pts, wts, nrm = [], [], []
        for i in range(4):
            a, b, c = (geom.vertices[j] for j in geom.sorted_face(i))
            p, w = rule.map_to(np.array([a, b, c]))
            n = np.cross(b - a, c - a)
            n /= np.linalg.norm(n)
            if np.dot(n, (a + b + c) / 3.0 - geom.vertices[i]) < 0:
                n = -n
            pts.append(p)
            wts.append(w)
            nrm.append(n)
        return np.array(pts), np.array(wts), np.array(nrm)

    @cached_property
    def face_basis(self):
        pts = self.faces[0]
        val = self.element.evaluate(pts.reshape(-1, 3), what=("value",))["value"]
        return val.reshape(pts.shape[:2] + val.shape[1:])  # (4, nq, ndof, 3)


def mesh_groups(mesh, k, dofmap=None, quad_degree=None, elements=None):
    """Per translation class data; ``elements`` reuses a previous ``element_groups`` result."""
    dofmap = dofmap or number_dofs(mesh, k)
    rule = make_rule(3, quad_degree or assembly_quadrature_degree(k))
    centroids = mesh.tet_coords().mean(axis=1)
    out = []
    for elem, tets in elements or element_groups(mesh, k, "U"):
        geom = elem.geometry
        pts, w = rule.map_to(geom.vertices)
        out.append(GroupData(elem, tets, centroids[tets] - geom.center, pts, w,
                             dofmap.u_tet_dofs(elem, tets), dofmap.w_tet_dofs[tets],
                             lagrange_coefficients(k + 1, geom)))
    return dofmap, out


class FieldEvaluationError(ValueError):
    pass


def _triplets(dofs_r, dofs_c, local):
    n = len(dofs_r)
    rows = np.broadcast_to(dofs_r[:, :, None], (n, dofs_r.shape[1], dofs_c.shape[1]))
    cols = np.broadcast_to(dofs_c[:, None, :], rows.shape)
    vals = np.broadcast_to(local, rows.shape)
    return rows.ravel(), cols.ravel(), vals.ravel()


def _sparse(triplets, shape):
    rows = np.concatenate([t[0] for t in triplets])
    cols = np.concatenate([t[1] for t in triplets])
    vals = np.concatenate([t[2] for t in triplets])
    # coo -> csr sums duplicates after a stable sort
    return sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()


def assemble_matrices(mesh, k, groups=None, dofmap=None):
    """``A`` (grad-curl), ``B`` (mixed), ``M`` (U mass), ``C`` (curl-curl), ``L`` (W Laplacian)."""
    if groups is None:
        dofmap, groups = mesh_groups(mesh, k, dofmap)
    nU, nW = dofmap.n_U, dofmap.n_W
    acc = {key: [] for key in "ABMCL"}
    for g in groups:
        ev = g.basis
        w = g.weights
        gc, val, cu = ev["gradcurl"], ev["value"], ev["curl"]
        gw = g.w_gradients
        # A and C vanish on local gradients; projecting makes that hold to rounding
        P = g.gradient_projector
        local = {
            "A": P @ np.einsum("q,qicd,qjcd->ij", w, gc, gc) @ P,
            "M": np.einsum("q,qic,qjc->ij", w, val, val),
            "C": P @ np.einsum("q,qic,qjc->ij", w, cu, cu) @ P,
            "B": np.einsum("q,qjc,qac->aj", w, val, gw),
            "L": np.einsum("q,qac,qbc->ab", w, gw, gw),
        }
        for key in "AMC":
            acc[key].append(_triplets(g.u_dofs, g.u_dofs, local[key]))
        acc["B"].append(_triplets(g.w_dofs, g.u_dofs, local["B"]))
        acc["L"].append(_triplets(g.w_dofs, g.w_dofs, local["L"]))
    shapes = {"A": (nU, nU), "M": (nU, nU), "C": (nU, nU), "B": (nW, nU), "L": (nW, nW)}
    return {key: _sparse(acc[key], shapes[key]) for key in acc}


def _check_finite(values, points, what):
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise FieldEvaluationError(f"{what} not finite at point {points[tuple(bad[:-1])].tolist()}")


def assemble_load(field, groups, n_U, chunk=256, form="auto"):
    """``F_i = (f, phi_i)`` with ``f = curl^4 u``.

    ``form="weak"`` writes ``f = curl w`` with ``w = curl^3 u`` and integrates
    by parts elementwise::

        (curl w, phi)_K = (w, curl phi)_K + <n x w, phi>_dK

    With face points shared between neighbours, ``(f, grad psi) = 0`` then
    holds to rounding for every ``psi`` in ``W_h0`` instead of only to
    quadrature accuracy.  ``form="volume"`` integrates ``f`` directly; it is
    the only option when ``field`` is a bare callable returning ``f``.
    """
    if form == "auto":
        form = "weak" if hasattr(field, "curl_power") else "volume"
    if form == "weak":
        return _assemble_load_weak(field, groups, n_U, chunk)
    if form != "volume":
        raise ValueError(f"unknown load form {form!r}")
    F = np.zeros(n_U)
    rhs = field.rhs if hasattr(field, "rhs") else field
    for g in groups:
        val = g.basis["value"]
        for s in range(0, len(g.tets), chunk):
            sl = slice(s, s + chunk)
            pts = g.tet_points(sl)
            f = rhs(pts)
            _check_finite(f, pts, "load")
            np.add.at(F, g.u_dofs[sl], np.einsum("q,tqc,qic->ti", g.weights, f, val))
    return F


def _assemble_load_weak(field, groups, n_U, chunk):
    F = np.zeros(n_U)
    for g in groups:
        cu = g.basis["curl"]
        fpts, fw, nrm = g.faces
        fval = g.face_basis
        for s in range(0, len(g.tets), chunk):
            sl = slice(s, s + chunk)
            shift = g.shifts[sl]
            pts = g.tet_points(sl)
            w = field.curl_power(3, pts)
            _check_finite(w, pts, "load")
            loc = np.einsum("q,tqc,qic->ti", g.weights, w, cu)
            fp = fpts[None] + shift[:, None, None, :]  # (t, 4, nq, 3)
            wf = field.curl_power(3, fp)
            _check_finite(wf, fp, "load")
            nxw = np.cross(nrm[None, :, None, :], wf)
            loc += np.einsum("fq,tfqc,fqic->ti", fw, nxw, fval)
            np.add.at(F, g.u_dofs[sl], loc)
    return F


class ElementStiffness:
    """Matrix-free ``A`` that applies each element matrix to gradient-free local data.

    Mathematically equal to the assembled ``A``.  Removing the local gradient
    component before multiplying keeps rounding proportional to the
    non-gradient part of the argument, so ``G^T A u`` stays at rounding level
    relative to ``||u||`` instead of ``||A|| ||u||``.
    """

    def __init__(self, groups, n_U):
        self.n_U = n_U
        self.blocks = []
        for g in groups:
            P = g.gradient_projector
            w, gc = g.weights, g.basis["gradcurl"]
            A = P @ np.einsum("q,qicd,qjcd->ij", w, gc, gc) @ P
            self.blocks.append((g.u_dofs, P, A))

    def __matmul__(self, u):
        y = np.zeros(self.n_U)
        for dofs, P, A in self.blocks:
            local = (u[dofs] @ P) @ A
            y += np.bincount(dofs.ravel(), weights=local.ravel(), minlength=self.n_U)
        return y


@dataclass(eq=False)
class SparseSystem:
    dofmap: DofMap
    A: sp.csr_matrix
    B: sp.csr_matrix
    F: np.ndarray
    matrix: sp.csr_matrix  # full block operator with essential conditions applied
    rhs: np.ndarray
    constrained: np.ndarray  # bool over [U; W]
    values: np.ndarray  # prescribed values on constrained entries (zero elsewhere)
    extra: dict = field(default_factory=dict, repr=False)

    @property
    def n_U(self):
        return self.dofmap.n_U

    def split(self, x):
        return x[: self.n_U], x[self.n_U:]

    def apply(self, x):
        """``matrix @ x`` with the A block applied element by element (see ``ElementStiffness``)."""
        stiff = self.extra.get("stiffness")
        if stiff is None:
            return self.matrix @ x
        free = ~self.constrained
        xf = np.where(free, x, 0.0)
        u, p = self.split(xf)
        B = self.B
        y = np.concatenate([stiff @ u + B.T @ p, B @ u])
        return np.where(free, y, x)

    def dump(self, path):
        """MatrixMarket coordinate dump of the constrained operator."""
        scipy.io.mmwrite(str(path), self.matrix.tocoo(), comment="quad-curl saddle-point system")


def saddle_matrix(A, B):
    return sp.bmat([[A, B.T], [B, None]], format="csr")


def apply_essential(K, rhs, constrained, values, apply=None):
    """Symmetric elimination: constrained rows/cols become identity.

    ``apply`` replaces ``K @ g`` when lifting the prescribed values.
    """
    g = np.where(constrained, values, 0.0)
    rhs = rhs - (K @ g if apply is None else apply(g))
    free = sp.diags((~constrained).astype(float))
    K = (free @ K @ free + sp.diags(constrained.astype(float))).tocsr()
    K.eliminate_zeros()
    rhs = np.where(constrained, g, rhs)
    return K, rhs


def assemble_system(mesh, k, field, bc="homogeneous", groups=None, dofmap=None, matrices=None):
    """Assemble the constrained saddle-point system for ``curl^4 u = f``.

    ``bc="homogeneous"`` zeros all boundary U and W DOFs; ``bc="interpolated"``
    sets boundary U DOFs to the DOF functionals of the exact field (edge and
    face-tangent moments of ``u``, curl-face moments of ``curl u``).
    """
    from .interpolation import u_dof_values

    if groups is None:
        dofmap, groups = mesh_groups(mesh, k, dofmap)
    mats = matrices or assemble_matrices(mesh, k, groups, dofmap)
    F = assemble_load(field, groups, dofmap.n_U)
    nU, nW = dofmap.n_U, dofmap.n_W
    K = saddle_matrix(mats["A"], mats["B"])
    rhs = np.concatenate([F, np.zeros(nW)])
    constrained = np.concatenate([dofmap.u_boundary, dofmap.w_boundary])
    values = np.zeros(nU + nW)
    if bc == "interpolated":
        values[:nU] = np.where(dofmap.u_boundary,
                               u_dof_values(field, mesh, k, dofmap, boundary_only=True), 0.0)
    elif bc != "homogeneous":
        raise ValueError(f"unknown boundary condition {bc!r}")
    stiff = ElementStiffness(groups, nU)
    B = mats["B"]

    def lift(g):
        u, p = g[:nU], g[nU:]
        return np.concatenate([stiff @ u + B.T @ p, B @ u])

    Kbc, rhs_bc = apply_essential(K, rhs, constrained, values, apply=lift)
    return SparseSystem(dofmap, mats["A"], B, F, Kbc, rhs_bc, constrained, values,
                        extra={"matrices": mats, "groups": groups, "stiffness": stiff})


def gradient_injection(dofmap, groups=None):
    """Matrix ``G`` (n_U x n_W) with ``G e_q`` the U-coefficients of ``grad psi_q``."""
    mesh, k = dofmap.mesh, dofmap.k
    if groups is None:
        _, groups = mesh_groups(mesh, k, dofmap)
    rows, cols, vals = [], [], []
    for g in groups:
        local = g.local_gradient
        r, c, v = _triplets(g.u_dofs, g.w_dofs, local)
        rows.append(r)
        cols.append(c)
        vals.append(v)
    rows, cols, vals = (np.concatenate(x) for x in (rows, cols, vals))
    # shared entities give the same value from every tet: keep one copy
    key = rows.astype(np.int64) * dofmap.n_W + cols
    _, first = np.unique(key, return_index=True)
    G = sp.csr_matrix((vals[first], (rows[first], cols[first])), shape=(dofmap.n_U, dofmap.n_W))
    G.eliminate_zeros()
    return G
