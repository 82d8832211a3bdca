"""Structured tetrahedral meshes of the unit cube with global orientations.

Orientation contract (both incident tets see identical DOF functionals):

* edge ``(a, b)`` is stored with ``a < b``; its tangent runs from ``a`` to ``b``;
* face ``(a, b, c)`` is stored sorted ascending; its normal is
  ``(x_b - x_a) x (x_c - x_a)`` normalised, and its frame is
  ``t1 = (x_b - x_a) / |x_b - x_a|``, ``t2 = n x t1``.

Local numbering inside a tet: edges follow :data:`LOCAL_EDGES`, face ``i``
is the face opposite local vertex ``i``.
"""

from dataclasses import dataclass, field
from itertools import permutations
from math import sqrt

import numpy as np

LOCAL_EDGES = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
FACE_EDGES = tuple(
    tuple(LOCAL_EDGES.index(p) for p in ((f[0], f[1]), (f[0], f[2]), (f[1], f[2])))
    for f in LOCAL_FACES
)


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nV, 3)
    tets: np.ndarray  # (nT, 4), positive orientation
    edges: np.ndarray  # (nE, 2), sorted
    faces: np.ndarray  # (nF, 3), sorted
    tet_edges: np.ndarray  # (nT, 6)
    tet_edge_signs: np.ndarray  # (nT, 6), +1 if local order agrees with global tangent
    tet_faces: np.ndarray  # (nT, 4), face opposite local vertex i
    tet_face_outward: np.ndarray  # (nT, 4) bool, global normal is outward for this tet
    face_tets: np.ndarray  # (nF, 2), second entry -1 on the boundary
    boundary_faces: np.ndarray  # bool (nF,)
    boundary_edges: np.ndarray  # bool (nE,)
    boundary_vertices: np.ndarray  # bool (nV,)
    h: float = field(default=np.nan)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_tets(self):
        return len(self.tets)

    def tet_coords(self, idx=slice(None)):
        return self.vertices[self.tets[idx]]

    def volumes(self):
        v = self.tet_coords()
        return np.linalg.det(v[:, 1:] - v[:, :1]) / 6.0

    def face_normals(self):
        """Global unit normals of every face."""
        p = self.vertices[self.faces]
        n = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
        return n / np.linalg.norm(n, axis=1, keepdims=True)

    def face_frames(self):
        """``(t1, t2, n)`` per face, each of shape ``(nF, 3)``."""
        p = self.vertices[self.faces]
        n = self.face_normals()
        t1 = p[:, 1] - p[:, 0]
        t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
        return t1, np.cross(n, t1), n

    def edge_tangents(self):
        p = self.vertices[self.edges]
        t = p[:, 1] - p[:, 0]
        return t / np.linalg.norm(t, axis=1, keepdims=True)

    def interior_faces(self):
        return np.flatnonzero(~self.boundary_faces)

    def diameters(self):
        v = self.tet_coords()
        return np.max([np.linalg.norm(v[:, a] - v[:, b], axis=1) for a, b in LOCAL_EDGES], axis=0)

    def dump(self, path):
        """Plain-text dump: a ``vertices`` block then a ``tets`` block, 0-based ids."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"vertices {self.n_vertices}\n")
            for x in self.vertices:
                fh.write(" ".join(f"{c:.17g}" for c in x) + "\n")
            fh.write(f"tets {self.n_tets}\n")
            for t in self.tets:
                fh.write(" ".join(str(int(i)) for i in t) + "\n")


def from_tets(vertices, tets, h=None):
    """Build a :class:`Mesh` with full incidence data from raw connectivity."""
    vertices = np.asarray(vertices, dtype=float)
    tets = np.array(tets, dtype=np.int64)
    x = vertices[tets]
    vol = np.linalg.det(x[:, 1:] - x[:, :1])
    if np.any(vol == 0):
        raise ValueError("degenerate tetrahedron")
    flip = vol < 0
    tets[flip] = tets[flip][:, [0, 1, 3, 2]]

    nT = len(tets)
    pairs = tets[:, LOCAL_EDGES]  # (nT, 6, 2)
    sorted_pairs = np.sort(pairs, axis=2)
    edges, edge_inv = np.unique(sorted_pairs.reshape(-1, 2), axis=0, return_inverse=True)
    tet_edges = edge_inv.reshape(nT, 6)
    tet_edge_signs = np.where(pairs[:, :, 0] < pairs[:, :, 1], 1, -1)

    triples = np.sort(tets[:, LOCAL_FACES], axis=2)  # (nT, 4, 3)
    faces, face_inv = np.unique(triples.reshape(-1, 3), axis=0, return_inverse=True)
    tet_faces = face_inv.reshape(nT, 4)

    p = vertices[faces]
    normals = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    face_centroids = p.mean(axis=1)
    opposite = vertices[tets]  # local vertex i is opposite face i
    outward_vec = face_centroids[tet_faces] - opposite
    tet_face_outward = np.einsum("tfc,tfc->tf", normals[tet_faces], outward_vec) > 0

    counts = np.bincount(tet_faces.ravel(), minlength=len(faces))
    if np.any(counts > 2):
        raise ValueError("non-manifold mesh: face shared by more than two tets")
    face_tets = np.full((len(faces), 2), -1, dtype=np.int64)
    order = np.argsort(tet_faces.ravel(), kind="stable")
    owner = order // 4
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    face_tets[:, 0] = owner[starts]
    two = counts == 2
    face_tets[two, 1] = owner[starts[two] + 1]
    boundary_faces = counts == 1

    boundary_vertices = np.zeros(len(vertices), dtype=bool)
    boundary_vertices[faces[boundary_faces].ravel()] = True
    boundary_edges = np.zeros(len(edges), dtype=bool)
    bf = faces[boundary_faces]
    bedges = np.concatenate([bf[:, [0, 1]], bf[:, [0, 2]], bf[:, [1, 2]]])
    lookup = {tuple(e): i for i, e in enumerate(edges.tolist())}
    for e in np.unique(bedges, axis=0).tolist():
        boundary_edges[lookup[tuple(e)]] = True

    if h is None:
        xx = vertices[tets]
        h = float(np.max([np.linalg.norm(xx[:, a] - xx[:, b], axis=1) for a, b in LOCAL_EDGES]))
    return Mesh(vertices, tets, edges, faces, tet_edges, tet_edge_signs, tet_faces,
                tet_face_outward, face_tets, boundary_faces, boundary_edges,
                boundary_vertices, h)


def build_cube_mesh(N):
    """Kuhn split of the unit cube into ``6 N^3`` tets sharing each cube's main diagonal."""
    if int(N) != N or N < 1:
        raise ValueError(f"N must be a positive integer, got {N}")
    N = int(N)
    g = np.arange(N + 1) / N
    z, y, x = np.meshgrid(g, g, g, indexing="ij")
    vertices = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    stride = np.array([1, N + 1, (N + 1) ** 2])

    i, j, k = np.meshgrid(np.arange(N), np.arange(N), np.arange(N), indexing="ij")
    base = (i.ravel() * stride[0] + j.ravel() * stride[1] + k.ravel() * stride[2])
    tets = []
    for perm in permutations(range(3)):
        path = [0, stride[perm[0]], stride[perm[0]] + stride[perm[1]], stride.sum()]
        tets.append(base[:, None] + np.array(path)[None, :])
    tets = np.stack(tets, axis=1).reshape(-1, 4)
    return from_tets(vertices, tets, h=sqrt(3.0) / N)


def barycentric_gradients(tet_vertices):
    """Constant gradients of the barycentric coordinates, shape ``(..., 4, 3)``."""
    v = np.asarray(tet_vertices, dtype=float)
    T = np.concatenate([v, np.ones(v.shape[:-1] + (1,))], axis=-1)  # rows [x_i, 1]
    inv = np.linalg.inv(T)  # columns give lambda_i = inv[:3, i] . x + inv[3, i]
    return np.swapaxes(inv[..., :3, :], -1, -2)


def barycentric(tet_vertices, points):
    v = np.asarray(tet_vertices, dtype=float)
    T = np.concatenate([v, np.ones((4, 1))], axis=1)
    inv = np.linalg.inv(T)
    pts = np.atleast_2d(points)
    return np.concatenate([pts, np.ones((len(pts), 1))], axis=1) @ inv


def bubble_eval(tet_vertices, point):
    """Element bubble ``b_K``, face bubbles ``b_F`` and ``a_F = |grad lambda_F|``.

    Face ``i`` is opposite vertex ``i``, so ``lambda_F`` for face ``i`` is
    the ``i``-th barycentric coordinate.
    """
    lam = barycentric(tet_vertices, point)[0]
    b_K = float(np.prod(lam))
    b_F = np.array([np.prod(np.delete(lam, i)) for i in range(4)])
    a_F = np.linalg.norm(barycentric_gradients(tet_vertices), axis=1)
    return b_K, b_F, a_F
