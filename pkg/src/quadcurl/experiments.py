"""Convergence studies for the quad-curl problem on the unit cube."""

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble_matrices, assemble_system, mesh_groups
from .fields import example_solution
from .interpolation import interpolate_U
from .mesh import build_cube_mesh
from .solver import solve

log = logging.getLogger(__name__)

CSV_HEADER = ["N", "h", "E_L2", "rate_L2", "E_curl", "rate_curl", "E_gradcurl", "rate_gc"]
ERROR_KEYS = ("E_L2", "E_curl", "E_gradcurl")


def error_quadrature_degree(k):
    return 2 * k + 8


def _norms(u_h, field, groups, chunk=512):
    """Squared error and exact norms for value, curl and elementwise grad-curl."""
    err = np.zeros(3)
    ref = np.zeros(3)
    for g in groups:
        ev = g.basis
        for s in range(0, len(g.tets), chunk):
            sl = slice(s, s + chunk)
            pts = g.tet_points(sl)
            c = u_h[g.u_dofs[sl]]  # (t, ndof)
            exact = (field.values(pts), field.curl(pts), field.gradcurl(pts))
            for i, key in enumerate(("value", "curl", "gradcurl")):
                disc = np.einsum("qi...,ti->tq...", ev[key], c)
                axes = tuple(range(2, exact[i].ndim))
                e2 = np.sum((exact[i] - disc) ** 2, axis=axes)
                r2 = np.sum(exact[i] ** 2, axis=axes)
                err[i] += np.einsum("q,tq->", g.weights, e2)
                ref[i] += np.einsum("q,tq->", g.weights, r2)
    return err, ref


def compute_errors(u_h, field, mesh, k, groups=None):
    """Relative errors ``(E_L2, E_curl, E_gradcurl)`` of the U-coefficient vector ``u_h``."""
    if groups is None:
        _, groups = mesh_groups(mesh, k, quad_degree=error_quadrature_degree(k))
    err, ref = _norms(np.asarray(u_h, float), field, groups)
    if np.any(ref == 0):
        raise ZeroDivisionError("exact solution has a vanishing norm")
    return tuple(float(v) for v in np.sqrt(err / ref))


def rate(e_prev, e, h_prev, h):
    return math.log(e_prev / e) / math.log(h_prev / h)


@dataclass
class LevelResult:
    N: int
    h: float
    errors: tuple
    rates: tuple = (None, None, None)
    solver: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ConvergenceReport:
    k: int
    example: int
    rows: list = field(default_factory=list)
    complete: bool = True
    failure: str = ""

    def add(self, N, h, errors, solver=None, diagnostics=None):
        rates = (None, None, None)
        if self.rows:
            prev = self.rows[-1]
            rates = tuple(rate(a, b, prev.h, h) for a, b in zip(prev.errors, errors))
        row = LevelResult(N, h, tuple(errors), rates, solver or {}, diagnostics or {})
        self.rows.append(row)
        return row

    def table(self):
        out = []
        for r in self.rows:
            line = [r.N, r.h]
            for e, q in zip(r.errors, r.rates):
                line += [e, q]
            out.append(line)
        return out

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for line in self.table():
            w.writerow([line[0], f"{line[1]:.4e}"] +
                       [f"{v:.4e}" if i % 2 == 0 else ("" if v is None else f"{v:.2f}")
                        for i, v in enumerate(line[2:])])
        return buf.getvalue()

    def to_markdown(self):
        lines = ["| N | h | E_L2 | rate | E_curl | rate | E_gradcurl | rate |",
                 "|---|---|---|---|---|---|---|---|"]
        for line in self.table():
            cells = [str(line[0]), f"{line[1]:.4e}"]
            for i, v in enumerate(line[2:]):
                cells.append(f"{v:.4e}" if i % 2 == 0 else ("" if v is None else f"{v:.2f}"))
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def to_gnuplot(self, key):
        i = ERROR_KEYS.index(key)
        return "".join(f"{r.h:.6e} {r.errors[i]:.6e}\n" for r in self.rows)


def energy_norm(u, matrices):
    """``|||u||| = (||u||^2 + ||curl u||^2 + a_h(u, u))^(1/2)`` from assembled matrices."""
    total = sum(float(u @ (matrices[key] @ u)) for key in ("M", "C", "A"))
    return math.sqrt(max(total, 0.0))


def multiplier_diagnostics(system, x):
    """Size of ``p_h`` and of ``b(u_h, psi)`` relative to ``u_h``.

    ``p_H1_ratio`` is ``|p_h|_1 / |||u_h|||``, pairing the norms of the
    discrete stability estimate; ``p_H1_ratio_L2`` uses ``||u_h||_0`` instead.
    ``b_max_ratio`` is ``max_psi |b(u_h, psi)| / |||u_h|||`` over interior W nodes.
    """
    u, p = system.split(x)
    mats = system.extra["matrices"]
    u_l2 = math.sqrt(max(float(u @ (mats["M"] @ u)), 0.0))
    u_en = energy_norm(u, mats)
    p_semi = math.sqrt(max(float(p @ (mats["L"] @ p)), 0.0))
    b = (mats["B"] @ u)[~system.dofmap.w_boundary]
    b_max = float(np.max(np.abs(b), initial=0.0))
    inf = float("inf")
    return {"u_L2": u_l2, "u_energy": u_en,
            "p_H1_ratio": p_semi / u_en if u_en else inf,
            "p_H1_ratio_L2": p_semi / u_l2 if u_l2 else inf,
            "b_max_ratio": b_max / u_en if u_en else inf}


def solve_level(N, k, field, bc, tol=1e-10, method="auto", backend=None):
    """Assemble and solve one mesh level; returns ``(mesh, system, x, report)``."""
    mesh = build_cube_mesh(N)
    t0 = time.perf_counter()
    dofmap, groups = mesh_groups(mesh, k)
    mats = assemble_matrices(mesh, k, groups, dofmap)
    system = assemble_system(mesh, k, field, bc=bc, groups=groups, dofmap=dofmap, matrices=mats)
    t_asm = time.perf_counter() - t0
    x, report = solve(system, tol=tol, method=method, backend=backend)
    log.info("N=%d k=%d n_U=%d n_W=%d assembly %.1fs solve %.1fs (%s)", N, k, dofmap.n_U,
             dofmap.n_W, t_asm, report.wall_time, report.method)
    system.extra["assembly_time"] = t_asm
    return mesh, system, x, report


def example_bc(example):
    return "homogeneous" if example == 1 else "interpolated"


def run_convergence(example, k, levels, tol=1e-10, method="auto", backend=None, on_level=None):
    """One solve per level; a failing level stops the study with a partial report."""
    levels = list(levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly ascending")
    field = example_solution(example)
    report = ConvergenceReport(k, example)
    for N in levels:
        try:
            mesh, system, x, sol = solve_level(N, k, field, example_bc(example), tol, method, backend)
        except Exception as exc:  # noqa: BLE001 - recorded in the partial report
            report.complete = False
            report.failure = f"N={N}: {exc}"
            log.error("level N=%d failed: %s", N, exc)
            break
        _, egroups = mesh_groups(mesh, k, system.dofmap, error_quadrature_degree(k),
                                 elements=[(g.element, g.tets) for g in system.extra["groups"]])
        errors = compute_errors(system.split(x)[0], field, mesh, k, egroups)
        diag = multiplier_diagnostics(system, x)
        diag["assembly_time"] = round(system.extra["assembly_time"], 3)
        row = report.add(N, mesh.h, errors, sol.as_dict(), diag)
        if on_level is not None:
            on_level(row)
    return report


def interpolation_study(example, k, levels):
    """Errors of ``Pi_U u`` for an example solution, in the convergence-table format."""
    levels = list(levels)
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("levels must be strictly ascending")
    field = example_solution(example)
    report = ConvergenceReport(k, example)
    for N in levels:
        mesh = build_cube_mesh(N)
        dofmap, groups = mesh_groups(mesh, k, quad_degree=error_quadrature_degree(k))
        u = interpolate_U(field, mesh, k, dofmap).values
        report.add(N, mesh.h, compute_errors(u, field, mesh, k, groups))
    return report


@dataclass
class WellPosedness:
    n_free_U: int
    n_interior_W: int
    kernel_dim: int
    min_eigenvalue: float  # smallest eigenvalue of A on the constrained kernel of B
    max_eigenvalue: float
    b_rank: int

    @property
    def coercive(self):
        return self.kernel_dim > 0 and self.min_eigenvalue > 1e-10 * self.max_eigenvalue

    @property
    def b_full_rank(self):
        return self.b_rank == self.n_interior_W

    @property
    def passed(self):
        return self.coercive and self.b_full_rank


def wellposedness_check(N=2, k=1):
    """Dense check: ``A`` is positive definite on ``{u in U_h0 : b(u, psi) = 0 for psi in W_h0}``
    and ``B`` has full row rank on the interior ``W`` nodes."""
    mesh = build_cube_mesh(N)
    dofmap, groups = mesh_groups(mesh, k)
    mats = assemble_matrices(mesh, k, groups, dofmap)
    free = ~dofmap.u_boundary
    A = mats["A"][free][:, free].toarray()
    B = mats["B"][~dofmap.w_boundary][:, free].toarray()
    _, sv, vt = np.linalg.svd(B)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    Z = vt[rank:].T
    eig = np.linalg.eigvalsh(Z.T @ A @ Z)
    return WellPosedness(int(free.sum()), B.shape[0], Z.shape[1], float(eig[0]), float(eig[-1]), rank)
