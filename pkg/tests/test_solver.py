import numpy as np
import pytest
import scipy.sparse as sp

from quadcurl.experiments import multiplier_diagnostics
from quadcurl.solver import SolverError, direct_backends, minres, solve


def test_identity():
    x, rep = solve((sp.eye(5, format="csr"), np.eye(5)[0]))
    np.testing.assert_allclose(x, np.eye(5)[0])
    assert rep.residual <= 1e-10 and rep.converged


@pytest.mark.parametrize("method", ["direct", "minres"])
def test_small_saddle(method):
    K = sp.csr_matrix([[2.0, 1.0], [1.0, 0.0]])
    x, rep = solve((K, np.array([1.0, 0.0])), method=method)
    np.testing.assert_allclose(x, [0.0, 1.0], atol=1e-12)
    assert rep.method.startswith(method)


@pytest.mark.parametrize("backend", direct_backends())
def test_backends_agree(backend, rng):
    n = 40
    M = sp.random(n, n, density=0.2, random_state=1) + 5 * sp.eye(n)
    K = (M + M.T).tocsr()
    b = rng.normal(size=n)
    x, rep = solve((K, b), method="direct", backend=backend)
    assert np.linalg.norm(K @ x - b) <= 1e-10 * np.linalg.norm(b)
    assert rep.method == f"direct/{backend}"


def test_minres_symmetric_indefinite(rng):
    n, m = 30, 8
    A = rng.normal(size=(n, n))
    A = A @ A.T + n * np.eye(n)
    B = rng.normal(size=(m, n))
    K = sp.csr_matrix(np.block([[A, B.T], [B, np.zeros((m, m))]]))
    b = rng.normal(size=n + m)
    x, its, hist = minres(K, b, tol=1e-12)
    assert np.linalg.norm(K @ x - b) <= 1e-12 * np.linalg.norm(b)
    assert its > 0 and hist[-1] <= 1e-12
    # idempotence: restarting from the answer needs no further work
    _, its2, _ = minres(K, b, tol=1e-12, x0=x)
    assert its2 <= 2


def test_errors():
    K = sp.csr_matrix([[1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(ValueError):
        solve((K, np.ones(2)), tol=1e-15)
    with pytest.raises(ValueError):
        solve((K, np.ones(2)), method="cg")


def test_nonconvergence_reports_history():
    n = 200
    K = sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]).tocsr()
    with pytest.raises(SolverError) as info:
        solve((K, np.ones(n)), method="minres", max_iterations=2)
    rep = info.value.report
    assert rep is not None and not rep.converged and len(rep.history) >= 2


def test_singular_fails():
    K = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolverError):
        solve((K, np.array([1.0, 0.0])), method="direct")


def test_example1_multiplier_vanishes(system2):
    x, rep = solve(system2, tol=1e-10)
    assert rep.residual <= 1e-10
    d = multiplier_diagnostics(system2, x)
    assert d["p_H1_ratio"] <= 1e-8
    assert d["b_max_ratio"] <= 1e-9
    # re-solving from the answer converges at once
    _, rep2 = solve(system2, tol=1e-10, method="minres", x0=x)
    assert rep2.iterations <= 2


def test_reduced_equation(system2, level2, rng):
    """``a_h(u_h, v) = (f, v)`` for discrete divergence-free ``v`` in ``U_h0``."""
    mesh, dm, groups, mats = level2
    x, _ = solve(system2, tol=1e-10)
    u = x[:dm.n_U]
    free = ~dm.u_boundary
    B = mats["B"][~dm.w_boundary][:, free].toarray()
    _, sv, vt = np.linalg.svd(B)
    Z = vt[int(np.sum(sv > 1e-10 * sv[0])):].T
    Au = system2.extra["stiffness"] @ u
    for _ in range(10):
        v = np.zeros(dm.n_U)
        v[free] = Z @ rng.normal(size=Z.shape[1])
        lhs, rhs = v @ Au, v @ system2.F
        assert abs(lhs - rhs) <= 1e-8 * np.linalg.norm(Au) * np.linalg.norm(v)
