"""Solvers for the symmetric indefinite saddle-point system.

``minres`` is a preconditioned MINRES with a block-diagonal Jacobi
preconditioner.  ``direct`` factorizes the matrix and applies iterative
refinement; it uses PARDISO when ``pypardiso`` is importable and SuperLU
otherwise.  ``auto`` tries the direct solver first and falls back to MINRES
if the factorization fails.
"""

import glob
import logging
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as sla

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class SolveReport:
    method: str
    iterations: int
    residual: float  # final relative residual
    wall_time: float
    converged: bool
    history: list = field(default_factory=list, repr=False)

    def as_dict(self):
        return {"method": self.method, "iterations": self.iterations,
                "residual": self.residual, "wall_time": round(self.wall_time, 3),
                "converged": self.converged}


def _relres(K, x, b):
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - K @ x)
    return r / nb if nb > 0 else r


def block_jacobi(K, n_first=None, second_diag=None):
    """Inverse absolute diagonal, with an optional replacement for the trailing block."""
    d = np.abs(K.diagonal()).astype(float)
    if n_first is not None and second_diag is not None:
        d[n_first:] = np.where(d[n_first:] == 0, np.abs(second_diag), d[n_first:])
    d[d == 0] = 1.0
    return 1.0 / d


def minres(K, b, tol=1e-10, maxiter=None, x0=None, precond=None):
    """Preconditioned MINRES for symmetric ``K`` with an SPD diagonal preconditioner.

    Returns ``(x, iterations, history)`` where ``history`` records the
    preconditioned residual estimate relative to its initial value and the
    loop stops once the true relative residual drops below ``tol``.
    """
    n = len(b)
    maxiter = maxiter or 10 * n
    m = np.ones(n) if precond is None else np.asarray(precond, float)
    x = np.zeros(n) if x0 is None else np.array(x0, float)
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros(n), 0, [0.0]
    r1 = b - K @ x
    if np.linalg.norm(r1) <= tol * nb:
        return x, 0, [np.linalg.norm(r1) / nb]
    y = m * r1
    beta1 = np.sqrt(r1 @ y)
    beta, oldb = beta1, 0.0
    r2 = r1.copy()
    dbar = epsln = 0.0
    phibar = beta1
    cs, sn = -1.0, 0.0
    w = np.zeros(n)
    w2 = np.zeros(n)
    history = [np.linalg.norm(r1) / nb]
    it = 0
    while it < maxiter:
        it += 1
        v = y / beta
        y = K @ v
        if it >= 2:
            y = y - (beta / oldb) * r1
        alpha = v @ y
        y = y - (alpha / beta) * r2
        r1, r2 = r2, y
        y = m * r2
        oldb, beta = beta, np.sqrt(max(r2 @ y, 0.0))
        oldeps = epsln
        delta = cs * dbar + sn * alpha
        gbar = sn * dbar - cs * alpha
        epsln = sn * beta
        dbar = -cs * beta
        gamma = max(np.hypot(gbar, beta), np.finfo(float).eps)
        cs, sn = gbar / gamma, beta / gamma
        phi = cs * phibar
        phibar = sn * phibar
        w1, w2 = w2, w
        w = (v - oldeps * w1 - delta * w2) / gamma
        x = x + phi * w
        est = phibar / beta1
        history.append(est)
        # the estimate is in the preconditioned norm; confirm with the true residual
        if est <= tol or it % 50 == 0:
            true = _relres(K, x, b)
            if true <= tol:
                history[-1] = true
                return x, it, history
        if beta == 0:
            break
    return x, it, history


def _load_pardiso():
    if "PYPARDISO_MKL_RT" not in os.environ:
        # pip's mkl wheel installs the runtime under <prefix>/lib, which pypardiso does not search
        for prefix in (sys.prefix, "/usr/local", os.path.expanduser("~/.local")):
            hits = sorted(glob.glob(os.path.join(prefix, "lib", "libmkl_rt.so*")))
            if hits:
                os.environ["PYPARDISO_MKL_RT"] = hits[0]
                break
    try:
        import pypardiso
    except (ImportError, OSError):
        return None
    return pypardiso


def direct_backends():
    return ("pardiso", "superlu") if _load_pardiso() is not None else ("superlu",)


class _Pardiso:
    def __init__(self, K):
        self.K = sp.csr_matrix(K)
        # real unsymmetric mode: the symmetric-indefinite mode needs a stored zero diagonal
        self.solver = _load_pardiso().PyPardisoSolver(mtype=11)
        self.solver.factorize(self.K)

    def solve(self, b):
        return np.asarray(self.solver.solve(self.K, np.asarray(b, float))).ravel()

    def free(self):
        self.solver.free_memory(everything=True)


def factorize(K, backend=None):
    backend = backend or direct_backends()[0]
    try:
        if backend == "pardiso":
            return _Pardiso(K)
        if backend == "superlu":
            return sla.splu(sp.csc_matrix(K), permc_spec="COLAMD")
    except (RuntimeError, ValueError) as exc:
        raise SolverError(f"factorization failed: {exc}") from exc
    raise ValueError(f"unknown direct backend {backend!r}")


def direct(K, b, tol=1e-10, refine=8, backend=None, apply=None):
    """Sparse factorization with iterative refinement; raises ``SolverError`` if singular.

    ``apply`` computes the residual operator for refinement (default ``K @ x``).
    """
    apply = apply or (lambda v: K @ v)
    lu = factorize(K, backend)
    x = lu.solve(b)
    nb = np.linalg.norm(b) or 1.0
    r = b - apply(x)
    history = [np.linalg.norm(r) / nb]
    for _ in range(refine):
        if not np.all(np.isfinite(x)):
            raise SolverError("factorization produced non-finite values (singular system)")
        x_new = x + lu.solve(r)
        r_new = b - apply(x_new)
        res = np.linalg.norm(r_new) / nb
        if res >= history[-1]:
            break  # stagnated at rounding level
        x, r = x_new, r_new
        history.append(res)
        if res <= 1e-3 * tol and res > 0.5 * history[-2]:
            break
    if hasattr(lu, "free"):
        lu.free()
    return x, len(history) - 1, history


def solve(system, tol=1e-10, max_iterations=None, method="auto", x0=None, backend=None):
    """Solve ``system.matrix x = system.rhs``; returns ``(x, SolveReport)``.

    ``system`` may be a ``SparseSystem`` or a ``(matrix, rhs)`` pair.
    ``backend`` picks the direct factorization (``pardiso`` or ``superlu``).
    """
    if tol < 1e-14:
        raise ValueError("tolerance must be >= 1e-14")
    apply = None
    if isinstance(system, tuple):
        K, b = system
        n_first, w_diag = None, None
    else:
        K, b = system.matrix, system.rhs
        apply = system.apply
        n_first = system.n_U
        L = system.extra.get("matrices", {}).get("L") if system.extra else None
        w_diag = None
        if L is not None:
            w_diag = np.where(system.constrained[n_first:], 1.0, L.diagonal())
    K = sp.csr_matrix(K)
    b = np.asarray(b, float)
    start = time.perf_counter()
    if method not in ("auto", "direct", "minres"):
        raise ValueError(f"unknown solver method {method!r}")
    if method in ("auto", "direct"):
        try:
            backend = backend or direct_backends()[0]
            x, its, hist = direct(K, b, tol, backend=backend, apply=apply)
            tag = f"direct/{backend}"
        except SolverError:
            if method == "direct":
                raise
            log.warning("direct factorization failed, falling back to MINRES")
            method = "minres"
    if method == "minres":
        pre = block_jacobi(K, n_first, w_diag)
        x, its, hist = minres(K, b, tol, max_iterations, x0, pre)
        tag = "minres"
    res = hist[-1] if tag.startswith("direct") else _relres(K, x, b)
    report = SolveReport(tag, its, float(res), time.perf_counter() - start,
                         bool(np.isfinite(res) and res <= tol), hist)
    if not np.all(np.isfinite(x)):
        raise SolverError("singular system", report)
    if not report.converged:
        raise SolverError(f"{tag} did not reach tolerance {tol:g} (residual {res:.3e})", report)
    return x, report
