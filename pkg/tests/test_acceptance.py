"""Acceptance criteria, one PASS/FAIL line each (run with ``pytest -s`` to see them).

Criteria 5, 6 and 9 run the full desk-scale studies and are marked slow.
"""

import numpy as np
import pytest

from quadcurl.experiments import interpolation_study, run_convergence, wellposedness_check
from quadcurl.fields import random_trig_field
from quadcurl.interpolation import (
    commuting_check,
    curl_jump_moments,
    interpolate_U,
    random_coefficients,
    tangential_jump,
)
from quadcurl.mesh import build_cube_mesh
from quadcurl.verification import verify_element

TABLE1 = {
    "levels": [8, 10, 12],
    "E_L2": [1.567e-01, 1.071e-01, 7.723e-02],
    "E_curl": [1.797e-01, 1.241e-01, 9.012e-02],
    "E_gradcurl": [4.552e-01, 3.759e-01, 3.189e-01],
    "rates": (1.79, 1.76, 0.90),
}
TABLE2 = {
    "levels": [8, 10],
    "E_L2": [4.164e-03],
    "E_curl": [7.521e-03],
    "E_gradcurl": [1.079e-01],
    "rates": (2.00, 2.00, 1.00),
}
KEYS = ("E_L2", "E_curl", "E_gradcurl")


def report_line(criterion, ok, detail):
    print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


_studies = {}


def study(example):
    if example not in _studies:
        table = TABLE1 if example == 1 else TABLE2
        _studies[example] = run_convergence(example, 1, table["levels"])
    return _studies[example]


def table_errors(report, table, rel=0.02):
    worst, lines = 0.0, []
    for i in range(len(table[KEYS[0]])):
        row = report.rows[i]
        for j, key in enumerate(KEYS):
            ref = table[key][i]
            dev = (row.errors[j] - ref) / ref
            worst = max(worst, abs(dev))
            if abs(dev) > rel:
                lines.append(f"N={row.N} {key}={row.errors[j]:.4e} ref={ref:.3e} ({dev:+.1%})")
    return worst, lines


def final_rates(report):
    return np.array(report.rows[-1].rates, dtype=float)


@pytest.mark.parametrize("k", [1, 2])
def test_c1_element_verification(k):
    results = verify_element(k, 100, seed=0)
    ok = all(r.passed for r in results)
    worst = max(r.value for r in results if r.tolerance < 0.5)
    report_line(1, ok, f"k={k} 100 tets, worst numeric check {worst:.2e} (tol 1e-9)")
    for r in results:
        print(r.line())
    assert ok


def test_c2_commuting_diagram():
    err = commuting_check(random_trig_field(3), build_cube_mesh(2), 1)
    ok = report_line(2, err <= 1e-8, f"N=2 k=1 max relative discrepancy {err:.2e} (tol 1e-8)")
    assert ok


@pytest.mark.parametrize("k", [1, 2])
def test_c3_jump_suite(k):
    mesh = build_cube_mesh(2)
    interp = interpolate_U(random_trig_field(11), mesh, k)
    rand = random_coefficients(mesh, k, "U", seed=4)
    tang = max(tangential_jump(interp), tangential_jump(rand))
    curl = max(curl_jump_moments(interp), curl_jump_moments(rand))
    ok = tang <= 1e-9 and curl <= 1e-10
    report_line(3, ok, f"k={k} tangential jump {tang:.2e} (tol 1e-9), "
                       f"curl jump moments {curl:.2e} (tol 1e-10)")
    assert ok


def test_c4_interpolation_rates():
    report = interpolation_study(1, 1, [2, 4, 8])
    rates = final_rates(report)
    target = np.array([2.0, 2.0, 1.0])
    ok = bool(np.all(np.abs(rates - target) <= 0.25))
    report_line(4, ok, "Example 1 k=1 N=2,4,8 finest-pair rates "
                       + "/".join(f"{r:.2f}" for r in rates) + " vs 2/2/1 (+-0.25)")
    assert ok


@pytest.mark.slow
def test_c5_table1_values():
    report = study(1)
    assert report.complete, report.failure
    worst, lines = table_errors(report, TABLE1)
    ok = report_line(5, not lines, f"Example 1 N=8,10,12 worst relative deviation {worst:.1%} (tol 2%)")
    for line in lines:
        print("   ", line)
    assert ok


@pytest.mark.slow
def test_c5_table1_rates():
    rates = final_rates(study(1))
    ok = bool(np.all(np.abs(rates - np.array(TABLE1["rates"])) <= 0.1))
    report_line(5, ok, "Example 1 rates at N=12 " + "/".join(f"{r:.2f}" for r in rates)
                + " vs 1.79/1.76/0.90 (+-0.1)")
    assert ok


@pytest.mark.slow
def test_c6_table2_values():
    report = study(2)
    assert report.complete, report.failure
    worst, lines = table_errors(report, TABLE2)
    ok = report_line(6, not lines, f"Example 2 N=8 worst relative deviation {worst:.1%} (tol 2%)")
    for line in lines:
        print("   ", line)
    assert ok


@pytest.mark.slow
def test_c6_table2_rates():
    rates = final_rates(study(2))
    ok = bool(np.all(np.abs(rates - np.array(TABLE2["rates"])) <= 0.05))
    report_line(6, ok, "Example 2 rates at N=10 " + "/".join(f"{r:.2f}" for r in rates)
                + " vs 2.00/2.00/1.00 (+-0.05)")
    assert ok


@pytest.mark.slow
@pytest.mark.parametrize("example", [1, 2])
def test_c7_multiplier_and_constraint(example):
    report = study(example)
    p = max(row.diagnostics["p_H1_ratio"] for row in report.rows)
    b = max(row.diagnostics["b_max_ratio"] for row in report.rows)
    ok = p <= 1e-8 and b <= 1e-9
    report_line(7, ok, f"Example {example} max |p_h|_1/|||u_h||| {p:.2e} (tol 1e-8), "
                       f"max |b(u_h,psi)|/|||u_h||| {b:.2e} (tol 1e-9)")
    assert ok


def test_c8_wellposedness():
    w = wellposedness_check(2, 1)
    report_line(8, w.passed, f"N=2 k=1 min eigenvalue on constrained kernel {w.min_eigenvalue:.3e} "
                             f"(max {w.max_eigenvalue:.2e}, dim {w.kernel_dim}); "
                             f"B rank {w.b_rank}/{w.n_interior_W}")
    assert w.passed


@pytest.mark.slow
def test_c9_error_estimates_via_rates():
    r1 = final_rates(study(1))
    r2 = final_rates(study(2))
    ok = bool(np.all(np.abs(r1 - np.array(TABLE1["rates"])) <= 0.1)
              and np.all(np.abs(r2 - np.array(TABLE2["rates"])) <= 0.05))
    report_line(9, ok, "observed rates Example 1 " + "/".join(f"{r:.2f}" for r in r1)
                + ", Example 2 " + "/".join(f"{r:.2f}" for r in r2))
    assert ok
