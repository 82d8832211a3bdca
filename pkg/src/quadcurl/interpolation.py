"""Canonical interpolation into ``U_h`` and ``V_h`` from the DOF functionals.

Every global DOF is computed once from its entity, so shared DOFs are
single-valued by construction.  Evaluation inside a tet uses that tet's
nodal basis.
"""

from dataclasses import dataclass

import numpy as np

from . import polynomials as poly
from .local_spaces import (
    edge_functional,
    element_groups,
    face_normal_functional,
    face_tangential_functional,
    interior_functional,
    u_interior_tests,
    v_interior_tests,
)


@dataclass(eq=False)
class InterpolantCoefficients:
    mesh: object
    k: int
    values: np.ndarray
    space: str  # "U" or "V"


def _faces(mesh, mask=None):
    f = mesh.faces if mask is None else mesh.faces[mask]
    p = mesh.vertices[f]
    return p[:, 0], p[:, 1], p[:, 2]


def u_dof_values(field, mesh, k, dofmap, boundary_only=False):
    """Global ``U_h`` DOF values of ``field``; non-boundary slots are left 0 if ``boundary_only``."""
    off = dofmap.offsets
    out = np.zeros(dofmap.n_U)
    emask = mesh.boundary_edges if boundary_only else np.ones(mesh.n_edges, bool)
    fmask = mesh.boundary_faces if boundary_only else np.ones(mesh.n_faces, bool)
    eids = np.flatnonzero(emask)
    if len(eids):
        p = mesh.vertices[mesh.edges[eids]]
        fn = edge_functional(p[:, 0], p[:, 1], k)
        vals = fn.apply(field.values(fn.points))
        out[(off["edge"] + dofmap.n_edge * eids[:, None] + np.arange(dofmap.n_edge)).ravel()] = vals.ravel()
    fids = np.flatnonzero(fmask)
    if len(fids) and dofmap.n_face:
        tang = face_tangential_functional(*_faces(mesh, fids), k - 1, k)
        vals = tang.apply(field.values(tang.points))
        idx = off["face_tangent"] + dofmap.n_face * fids[:, None] + np.arange(dofmap.n_face)
        out[idx.ravel()] = vals.ravel()
        curl = face_tangential_functional(*_faces(mesh, fids), k - 1, k, curl_scaled=True)
        vals = curl.apply(field.curl(curl.points))
        idx = off["curl_face"] + dofmap.n_face * fids[:, None] + np.arange(dofmap.n_face)
        out[idx.ravel()] = vals.ravel()
    if dofmap.n_interior and not boundary_only:
        verts = mesh.tet_coords()
        fn = interior_functional(verts, verts.mean(axis=1), mesh.diameters(),
                                 u_interior_tests(k, k + 6), k + 6, k)
        vals = fn.apply(field.values(fn.points))
        out[off["interior"]:] = vals.ravel()
    return out


def interpolate_U(field, mesh, k, dofmap=None):
    """``Pi_U u`` as global DOF values."""
    from .assembly import number_dofs

    dofmap = dofmap or number_dofs(mesh, k)
    return InterpolantCoefficients(mesh, k, u_dof_values(field, mesh, k, dofmap), "U")


# --------------------------------------------------------------------------
# V_h numbering: face normals, face tangents, interior
# --------------------------------------------------------------------------

@dataclass(eq=False)
class VDofMap:
    mesh: object
    k: int
    n_normal: int
    n_tangent: int
    n_interior: int

    @property
    def offsets(self):
        m = self.mesh
        nt = self.n_normal * m.n_faces
        it = nt + self.n_tangent * m.n_faces
        return {"face_normal": 0, "face_tangent": nt, "interior": it,
                "end": it + self.n_interior * m.n_tets}

    @property
    def n_V(self):
        return self.offsets["end"]

    def tet_dofs(self, element, tets):
        m = self.mesh
        off = self.offsets
        cols = []
        for d in element.dofs:
            if d.kind == "face_normal":
                cols.append(off[d.kind] + self.n_normal * m.tet_faces[tets, d.entity] + d.index)
            elif d.kind == "face_tangent":
                cols.append(off[d.kind] + self.n_tangent * m.tet_faces[tets, d.entity] + d.index)
            else:
                cols.append(off["interior"] + self.n_interior * tets + d.index)
        return np.stack(cols, axis=1)


def number_v_dofs(mesh, k):
    return VDofMap(mesh, k, (k + 1) * (k + 2) // 2, k * (k + 1), len(v_interior_tests(k, k + 6)))


def interpolate_V(field, mesh, k, source="value", vdofmap=None):
    """``Pi_V w`` where ``w`` is ``field`` (``source="value"``) or ``curl field``."""
    vdofmap = vdofmap or number_v_dofs(mesh, k)
    w = field.values if source == "value" else field.curl
    off = vdofmap.offsets
    out = np.zeros(vdofmap.n_V)
    fn = face_normal_functional(*_faces(mesh), k, k)
    out[off["face_normal"]:off["face_tangent"]] = fn.apply(w(fn.points)).ravel()
    fn = face_tangential_functional(*_faces(mesh), k - 1, k)
    out[off["face_tangent"]:off["interior"]] = fn.apply(w(fn.points)).ravel()
    if vdofmap.n_interior:
        verts = mesh.tet_coords()
        fn = interior_functional(verts, verts.mean(axis=1), mesh.diameters(),
                                 v_interior_tests(k, k + 6), k + 6, k)
        out[off["interior"]:] = fn.apply(w(fn.points)).ravel()
    return InterpolantCoefficients(mesh, k, out, "V")


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def random_tet_points(mesh, n_points, seed):
    """``n_points`` uniformly random points per tet, shape ``(nT, n_points, 3)``."""
    rng = np.random.default_rng(seed)
    lam = rng.dirichlet(np.ones(4), size=(mesh.n_tets, n_points))
    return np.einsum("tpi,tic->tpc", lam, mesh.tet_coords())


def evaluate_global(coeffs, points, what=("value", "curl", "gradcurl"), groups=None, dof_fn=None):
    """Evaluate a global U or V coefficient vector at per-tet points ``(nT, np, 3)``."""
    mesh, k = coeffs.mesh, coeffs.k
    groups = groups or element_groups(mesh, k, coeffs.space)
    if dof_fn is None:
        if coeffs.space == "U":
            from .assembly import number_dofs

            dm = number_dofs(mesh, k)
            dof_fn = dm.u_tet_dofs
        else:
            dof_fn = number_v_dofs(mesh, k).tet_dofs
    centroids = mesh.tet_coords().mean(axis=1)
    npts = points.shape[1]
    out = {}
    for elem, tets in groups:
        local = coeffs.values[dof_fn(elem, tets)]  # (nt, ndof)
        x = points[tets].reshape(-1, 3)
        c = np.repeat(centroids[tets], npts, axis=0)
        ev = elem.evaluate(x, center=c, what=what)
        for key, arr in ev.items():
            arr = arr.reshape((len(tets), npts) + arr.shape[1:])
            res = np.einsum("tpi...,ti->tp...", arr, local)
            if key not in out:
                out[key] = np.zeros((mesh.n_tets, npts) + res.shape[2:])
            out[key][tets] = res
    return out


def commuting_check(field, mesh, k, n_points=20, seed=0):
    """Max of ``|curl(Pi_U u) - Pi_V(curl u)|`` at random points, relative to ``max |curl u|``."""
    pts = random_tet_points(mesh, n_points, seed)
    piu = interpolate_U(field, mesh, k)
    piv = interpolate_V(field, mesh, k, source="curl")
    left = evaluate_global(piu, pts, what=("curl",))["curl"]
    right = evaluate_global(piv, pts, what=("value",))["value"]
    scale = np.max(np.abs(field.curl(pts)))
    return float(np.max(np.abs(left - right)) / max(scale, 1e-300))


# --------------------------------------------------------------------------
# interface jumps
# --------------------------------------------------------------------------

def face_points(mesh, n_points, seed):
    """Random points on every face ``(nF, n_points, 3)`` in sorted vertex order."""
    lam = np.random.default_rng(seed).dirichlet(np.ones(3), size=n_points)
    return np.einsum("pi,fic->fpc", lam, mesh.vertices[mesh.faces])


def face_traces(coeffs, points, what=("value",), groups=None):
    """Both one-sided traces on interior faces.

    ``points`` has shape ``(nF, m, 3)``.  Returns the interior face ids and,
    per key, an array ``(nFi, 2, m, ...)`` holding the two neighbours' values.
    """
    mesh = coeffs.mesh
    m = points.shape[1]
    per_tet = points[mesh.tet_faces].reshape(mesh.n_tets, 4 * m, 3)
    ev = evaluate_global(coeffs, per_tet, what=what, groups=groups)
    faces = mesh.interior_faces()
    tets = mesh.face_tets[faces]  # (nFi, 2)
    local = np.argmax(mesh.tet_faces[tets] == faces[:, None, None], axis=2)  # (nFi, 2)
    out = {}
    for key, arr in ev.items():
        arr = arr.reshape((mesh.n_tets, 4, m) + arr.shape[2:])
        out[key] = arr[tets, local]
    return faces, out


def tangential_jump(coeffs, n_points=10, seed=0, groups=None):
    """Max ``|n x [v]|`` at random interior-face points, relative to ``max |v|``."""
    mesh = coeffs.mesh
    faces, tr = face_traces(coeffs, face_points(mesh, n_points, seed), groups=groups)
    v = tr["value"]
    n = mesh.face_normals()[faces][:, None, :]
    jump = np.cross(v[:, 0] - v[:, 1], n)
    return float(np.max(np.abs(jump)) / max(np.max(np.abs(v)), 1e-300))


def normal_jump(coeffs, n_points=10, seed=0, groups=None):
    """Max ``|n . [v]|`` at random interior-face points, relative to ``max |v|``."""
    mesh = coeffs.mesh
    faces, tr = face_traces(coeffs, face_points(mesh, n_points, seed), groups=groups)
    v = tr["value"]
    n = mesh.face_normals()[faces][:, None, :]
    jump = np.sum((v[:, 0] - v[:, 1]) * n, axis=-1)
    return float(np.max(np.abs(jump)) / max(np.max(np.abs(v)), 1e-300))


def curl_jump_moments(coeffs, groups=None):
    """Max ``|<[curl v] x n, chi>_F|`` over interior faces and face tests ``chi``.

    Relative to the largest one-sided moment.
    """
    mesh = coeffs.mesh
    fn = face_tangential_functional(*_faces(mesh), coeffs.k - 1, coeffs.k)
    faces, tr = face_traces(coeffs, fn.points, what=("curl",), groups=groups)
    w = fn.weights[faces]  # (nFi, nd, nq, 3)
    moments = np.einsum("fdqc,fsqc->fsd", w, tr["curl"])
    return float(np.max(np.abs(moments[:, 0] - moments[:, 1]))
                 / max(np.max(np.abs(moments)), 1e-300))


def random_coefficients(mesh, k, space="U", seed=0):
    """A random member of ``U_h`` or ``V_h`` (normally distributed global DOFs)."""
    rng = np.random.default_rng(seed)
    if space == "U":
        from .assembly import number_dofs

        n = number_dofs(mesh, k).n_U
    else:
        n = number_v_dofs(mesh, k).n_V
    return InterpolantCoefficients(mesh, k, rng.normal(size=n), space)
