import numpy as np
import pytest

from quadcurl import fields
from quadcurl.experiments import interpolation_study
from quadcurl.fields import AnalyticField, gradient_field, polynomial_field, random_trig_field
from quadcurl.interpolation import (
    commuting_check,
    curl_jump_moments,
    evaluate_global,
    interpolate_U,
    interpolate_V,
    normal_jump,
    random_coefficients,
    random_tet_points,
    tangential_jump,
)
from quadcurl.polynomials import monomial_basis

CONST = AnalyticField("const", lambda x, y, z: (1.0 + 0 * x, 0.0 * x, 0.0 * x))


def _poly(k, rng):
    return polynomial_field(rng.normal(size=(3, monomial_basis(3, k).count(k))), k)


@pytest.mark.parametrize("k", [1, 2])
def test_constant_reproduced(mesh2, k):
    pts = random_tet_points(mesh2, 5, 0)
    u = evaluate_global(interpolate_U(CONST, mesh2, k), pts, what=("value", "curl"))
    np.testing.assert_allclose(u["value"], CONST.values(pts), atol=1e-9)
    np.testing.assert_allclose(u["curl"], 0, atol=1e-10)
    v = evaluate_global(interpolate_V(CONST, mesh2, k), pts, what=("value",))
    np.testing.assert_allclose(v["value"], CONST.values(pts), atol=1e-9)


@pytest.mark.parametrize("k", [1, 2])
def test_global_polynomial_reproduced(mesh2, k, rng):
    f = _poly(k, rng)
    pts = random_tet_points(mesh2, 8, 1)
    u = evaluate_global(interpolate_U(f, mesh2, k), pts)
    np.testing.assert_allclose(u["value"], f.values(pts), atol=1e-9)
    np.testing.assert_allclose(u["curl"], f.curl(pts), atol=1e-9)
    v = evaluate_global(interpolate_V(f, mesh2, k), pts, what=("value",))
    np.testing.assert_allclose(v["value"], f.values(pts), atol=1e-9)


@pytest.mark.parametrize("k", [1, 2])
def test_divergence_free_stays_divergence_free(mesh2, k):
    f = AnalyticField("divfree", lambda x, y, z: (y * z + y * y, x * z * 0 + z * x, x * y + x * x))
    assert np.max(np.abs(f.divergence(np.random.default_rng(0).uniform(size=(10, 3))))) < 1e-14
    pts = random_tet_points(mesh2, 6, 2)
    v = evaluate_global(interpolate_V(f, mesh2, k), pts, what=("div",))
    assert np.max(np.abs(v["div"])) <= 1e-9


@pytest.mark.parametrize("k", [1, 2])
def test_conformity_random_members(mesh2, k):
    u = random_coefficients(mesh2, k, "U", seed=3)
    assert tangential_jump(u) <= 1e-9
    assert curl_jump_moments(u) <= 1e-10
    v = random_coefficients(mesh2, k, "V", seed=3)
    assert normal_jump(v) <= 1e-9


def test_conformity_interpolant(mesh2):
    u = interpolate_U(random_trig_field(5), mesh2, 1)
    assert tangential_jump(u) <= 1e-9
    assert curl_jump_moments(u) <= 1e-10
    assert normal_jump(interpolate_V(random_trig_field(5), mesh2, 1)) <= 1e-9


def test_jump_detects_nonconforming(mesh2):
    """A per-tet perturbation of one tet's DOFs must show up as a jump."""
    u = random_coefficients(mesh2, 1, "U", seed=4)
    from quadcurl.assembly import number_dofs
    from quadcurl.local_spaces import element_groups

    groups = element_groups(mesh2, 1)
    dm = number_dofs(mesh2, 1)
    broken = [(e, t) for e, t in groups]
    elem0, tets0 = broken[0]

    def dof_fn(elem, tets):
        d = dm.u_tet_dofs(elem, tets)
        if elem is elem0:
            d = d.copy()
            d[0, 0] = d[0, 1]
        return d

    pts = random_tet_points(mesh2, 1, 0)
    ok = evaluate_global(u, pts, groups=groups)
    bad = evaluate_global(u, pts, groups=groups, dof_fn=dof_fn)
    assert np.max(np.abs(ok["value"] - bad["value"])) > 1e-3


@pytest.mark.parametrize("k", [1, 2])
def test_commuting_diagram(mesh2, k):
    assert commuting_check(random_trig_field(7), mesh2, k) <= 1e-8


def test_commuting_gradient(mesh2):
    g = gradient_field(lambda x, y, z: fields.sin(x + 2 * y) * z)
    pts = random_tet_points(mesh2, 5, 0)
    c = evaluate_global(interpolate_U(g, mesh2, 1), pts, what=("curl",))["curl"]
    assert np.max(np.abs(c)) <= 1e-9
    v = evaluate_global(interpolate_V(g, mesh2, 1, source="curl"), pts, what=("value",))["value"]
    assert np.max(np.abs(v)) <= 1e-12


def test_commuting_polynomial(mesh2, rng):
    f = _poly(1, rng)
    pts = random_tet_points(mesh2, 5, 0)
    c = evaluate_global(interpolate_U(f, mesh2, 1), pts, what=("curl",))["curl"]
    v = evaluate_global(interpolate_V(f, mesh2, 1, source="curl"), pts, what=("value",))["value"]
    np.testing.assert_allclose(c, f.curl(pts), atol=1e-9)
    np.testing.assert_allclose(v, f.curl(pts), atol=1e-9)


def test_interpolation_rates_smooth_field():
    rep = interpolation_study(2, 1, [2, 4])
    rates = rep.rows[-1].rates
    assert rates[0] == pytest.approx(2, abs=0.25)
    assert rates[1] == pytest.approx(2, abs=0.25)
    assert rates[2] == pytest.approx(1, abs=0.25)
    assert all(e > 0 for e in rep.rows[0].errors)


def test_single_level_interp_study():
    rep = interpolation_study(1, 1, [2])
    assert rep.rows[0].rates == (None, None, None)
    with pytest.raises(ValueError):
        interpolation_study(1, 1, [4, 2])
