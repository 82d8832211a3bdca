"""Numerical checks of the local elements on random tetrahedra."""

from dataclasses import dataclass

import numpy as np

from . import polynomials as poly
from .local_spaces import (
    RANK_TOL,
    UnisolvencyError,
    _as_geometry,
    build_QF,
    build_U,
    build_V,
    bubble_generators,
    face_bubble_weight,
    interior_functional,
    nedelec_coefficients,
    space_dimension,
    u_interior_tests,
)
from .mesh import LOCAL_EDGES, LOCAL_FACES, bubble_eval


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float  # worst observed quantity
    tolerance: float
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<24} worst={self.value:.3e}  tol={self.tolerance:.1e}  {self.detail}"


def random_tet(rng, min_quality=0.25):
    """Random tetrahedron whose volume / diameter^3 is at least ``min_quality`` times the regular tet's.

    The default sits just below the Kuhn tets of the cube meshes (0.27).
    """
    regular = 1.0 / (6.0 * np.sqrt(2.0))
    while True:
        v = rng.uniform(-1.0, 1.0, size=(4, 3))
        vol = abs(np.linalg.det(v[1:] - v[:1])) / 6.0
        h = max(np.linalg.norm(v[i] - v[j]) for i, j in LOCAL_EDGES)
        if vol / h ** 3 > min_quality * regular:
            return v


def random_ids(rng):
    return tuple(int(i) for i in rng.permutation(100)[:4])


def _rank(coeffs):
    flat = np.asarray(coeffs).reshape(len(coeffs), -1)
    norms = np.linalg.norm(flat, axis=1)
    # rows can differ in size by many orders on flat tets; rank is invariant under row scaling
    keep = norms > 1e3 * np.finfo(float).eps * norms.max(initial=0.0)
    if not keep.any():
        return 0
    flat = flat[keep] / norms[keep, None]
    s = np.linalg.svd(flat, compute_uv=False)
    return int(np.sum(s > RANK_TOL * s[0]))


def _face_points(vertices, face, n, rng):
    lam = rng.dirichlet(np.ones(3), size=n)
    return lam @ vertices[list(LOCAL_FACES[face])]


def check_reconstruction(elem, rng):
    """Relative error of rebuilding a random member from its DOF values."""
    c = rng.normal(size=len(elem.shape))
    u = np.einsum("s,scn->cn", c, elem.shape)
    dofs = elem.dof_matrix @ c
    rebuilt = np.einsum("i,icn->cn", dofs, elem.coeffs)
    ident = np.max(np.abs(elem.dof_matrix @ elem.dual_matrix - np.eye(elem.dim)))
    return max(np.max(np.abs(rebuilt - u)) / np.max(np.abs(u)), ident)


def check_trace_determination(elem, rng, n_points=50):
    """Zeroing the DOFs of a face and its edges kills ``u x n`` on that face."""
    worst = 0.0
    V = elem.geometry.vertices
    for f in range(4):
        fv = set(LOCAL_FACES[f])
        edges = {i for i, (a, b) in enumerate(LOCAL_EDGES) if a in fv and b in fv}
        d = rng.normal(size=elem.dim)
        pts = _face_points(V, f, n_points, rng)
        n = np.cross(V[LOCAL_FACES[f][1]] - V[LOCAL_FACES[f][0]], V[LOCAL_FACES[f][2]] - V[LOCAL_FACES[f][0]])
        n /= np.linalg.norm(n)
        scale = np.max(np.abs(np.cross(elem.combine(d, pts, what=("value",))["value"], n)))
        for i, desc in enumerate(elem.dofs):
            if (desc.kind == "edge" and desc.entity in edges) or \
                    (desc.kind == "face_tangent" and desc.entity == f):
                d[i] = 0.0
        val = elem.combine(d, pts, what=("value",))["value"]
        worst = max(worst, np.max(np.abs(np.cross(val, n))) / max(scale, 1e-300))
    return worst


def check_curl_trace(k, geom, rng, n_points=50):
    """``curl(b_K b_F q) x n_out = -a_F b_F^2 q`` on ``F`` for tangential ``q``."""
    degree = k + 6
    worst = 0.0
    V = geom.vertices
    for f in range(4):
        qf = build_QF(k, geom, f, degree=degree)
        weight = face_bubble_weight(geom, f, degree)
        gens = np.array([[poly.multiply(weight, q[c], degree) for c in range(3)] for q in qf.coeffs])
        curls = poly.curl(gens, degree)
        _, _, n, outward = geom.face_frame(f)
        n_out = n if outward else -n
        pts = _face_points(V, f, n_points, rng)
        xi = (pts - geom.center) / geom.scale
        lhs = np.cross(poly.evaluate(curls, xi, degree) / geom.scale, n_out)
        q = poly.evaluate(qf.coeffs, xi, degree)
        bF2 = np.array([bubble_eval(V, p)[1][f] ** 2 for p in pts])
        a_F = bubble_eval(V, pts[0])[2][f]
        rhs = -a_F * bF2[:, None, None] * q
        scale = np.max(np.abs(rhs))
        worst = max(worst, np.max(np.abs(lhs - rhs)) / max(scale, 1e-300))
    return worst


def check_bubble_orthogonality(k, geom):
    """Interior ``P_{k-2}`` moments of every bubble generator vanish."""
    if k < 2:
        return 0.0
    degree = k + 6
    gens = bubble_generators(k, geom, degree)
    fn = interior_functional(geom.vertices, geom.center, geom.scale, u_interior_tests(k, degree), degree, k)
    vals = poly.evaluate(gens, (fn.points - geom.center) / geom.scale, degree)
    moments = np.einsum("dqc,qsc->ds", fn.weights, vals)
    ref = np.max(np.abs(poly.evaluate(gens, (fn.points - geom.center) / geom.scale, degree)))
    return float(np.max(np.abs(moments)) / max(ref, 1e-300))


def verify_element(k, trials, seed):
    """Run the element suite on ``trials`` random tets; returns a list of :class:`CheckResult`."""
    rng = np.random.default_rng(seed)
    worst = {"reconstruction": 0.0, "dimensions": 0.0, "direct_sum": 0.0,
             "trace_determination": 0.0, "curl_trace_identity": 0.0, "bubble_orthogonality": 0.0,
             "V_reconstruction": 0.0}
    failures = {key: "" for key in worst}
    expected_qf = k * (k + 1)
    for t in range(trials):
        geom = _as_geometry(random_tet(rng), random_ids(rng))
        try:
            elem = build_U(k, geom)
            velem = build_V(k, geom)
        except UnisolvencyError as exc:
            failures["reconstruction"] = f"trial {t}: {exc}"
            worst["reconstruction"] = np.inf
            continue
        worst["reconstruction"] = max(worst["reconstruction"], check_reconstruction(elem, rng))
        worst["V_reconstruction"] = max(worst["V_reconstruction"], check_reconstruction(velem, rng))
        dims = (_rank(elem.shape), _rank(velem.shape),
                *(len(build_QF(k, geom, f).coeffs) for f in range(4)))
        want = (space_dimension("U", k), space_dimension("V", k), *([expected_qf] * 4))
        if dims != want:
            worst["dimensions"] = 1.0
            failures["dimensions"] = f"trial {t}: got {dims}, expected {want}"
        ned = nedelec_coefficients(k, k + 6)
        bub = bubble_generators(k, geom, k + 6)
        if _rank(np.concatenate([ned, bub])) != len(ned) + len(bub):
            worst["direct_sum"] = 1.0
            failures["direct_sum"] = f"trial {t}: rank deficient"
        worst["trace_determination"] = max(worst["trace_determination"],
                                           check_trace_determination(elem, rng))
        worst["curl_trace_identity"] = max(worst["curl_trace_identity"], check_curl_trace(k, geom, rng))
        worst["bubble_orthogonality"] = max(worst["bubble_orthogonality"],
                                            check_bubble_orthogonality(k, geom))
    tols = {"reconstruction": 1e-9, "V_reconstruction": 1e-9, "dimensions": 0.5, "direct_sum": 0.5,
            "trace_determination": 1e-9, "curl_trace_identity": 1e-9, "bubble_orthogonality": 1e-10}
    return [CheckResult(name, bool(worst[name] <= tols[name]), float(worst[name]), tols[name],
                        failures[name]) for name in tols]
