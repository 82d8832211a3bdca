import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadcurl import fields
from quadcurl.fields import (
    AnalyticField,
    example_solution,
    fd_oracle,
    gradient_field,
    polynomial_field,
    random_trig_field,
)


def _boundary_points(rng, n):
    pts = rng.uniform(size=(n, 3))
    axis = rng.integers(0, 3, size=n)
    side = rng.integers(0, 2, size=n)
    pts[np.arange(n), axis] = side
    normals = np.zeros((n, 3))
    normals[np.arange(n), axis] = 2 * side - 1
    return pts, normals


def test_example_values():
    u1 = example_solution(1)
    np.testing.assert_allclose(u1.values([[0.5, 0.5, 0.5]]), 0, atol=1e-15)
    u2 = example_solution(2)
    np.testing.assert_allclose(u2.values([[0, 0, 0]]), 0, atol=1e-15)
    assert np.linalg.norm(u2.values([[0.3, 0.6, 0.9]])) > 0.1
    v = u2.values([[1.0, 0.5, 0.5]])[0]
    s = np.sin(0.5) * np.sin(1.0)
    np.testing.assert_allclose(np.cross(v, [1, 0, 0]), [0, s, -s], atol=1e-15)


def test_unknown_example():
    with pytest.raises(ValueError):
        example_solution(3)


def test_example2_curl_symmetry():
    c = example_solution(2).curl([[0.5, 0.5, 0.5]])[0]
    np.testing.assert_allclose(c, 0, atol=1e-15)


@pytest.mark.parametrize("which", [1, 2])
def test_divergence_free(which, rng):
    u = example_solution(which)
    pts = rng.uniform(size=(50, 3))
    assert np.max(np.abs(u.divergence(pts))) <= 1e-12
    for m in range(1, 5):
        scale = np.max(np.abs(u.curl_power(m, pts)))
        assert np.max(np.abs(u.divergence_of_curl_power(m, pts))) <= 1e-10 * max(scale, 1)


def test_example1_boundary_data(rng):
    u = example_solution(1)
    pts, n = _boundary_points(rng, 100)
    assert np.max(np.abs(np.cross(u.values(pts), n))) <= 1e-10
    assert np.max(np.abs(u.curl(pts))) <= 1e-10


def test_curl4_of_linear_field_vanishes(rng):
    coeffs = rng.normal(size=(3, 4))
    f = polynomial_field(coeffs, 1)
    np.testing.assert_allclose(f.rhs(rng.uniform(size=(10, 3))), 0, atol=1e-14)


def test_gradient_field_curl_free(rng):
    g = gradient_field(lambda x, y, z: fields.sin(x * y) + z * z * x)
    pts = rng.uniform(size=(20, 3))
    np.testing.assert_allclose(g.curl(pts), 0, atol=1e-13)
    x, y, z = pts.T
    np.testing.assert_allclose(g.values(pts)[:, 0], y * np.cos(x * y) + z * z, rtol=1e-13)


@pytest.mark.parametrize("which", [1, 2])
def test_jets_match_fd_oracle(which, rng):
    u = example_solution(which)
    pts = rng.uniform(0.1, 0.9, size=(20, 3))
    indices = [(1, 0, 0), (0, 2, 0), (1, 1, 1), (2, 0, 2), (0, 0, 4), (1, 2, 1)]
    for p, alpha in zip(pts, indices * 4):
        jet = u.derivative(alpha, p[None])[0]
        fd = fd_oracle(u, alpha, p)
        scale = max(np.max(np.abs(fd)), 1e-3)
        assert np.max(np.abs(jet - fd)) / scale <= 1e-6, (alpha, p)


def test_fd_oracle_examples():
    sinx = AnalyticField("sinx", lambda x, y, z: (fields.sin(x), fields.sin(x) * fields.sin(y), 0.0 * x))
    assert fd_oracle(sinx, (1, 0, 0), (0.0, 0.0, 0.0))[0] == pytest.approx(1.0, abs=1e-8)
    assert fd_oracle(sinx, (1, 1, 0), (1.0, 1.0, 0.0))[1] == pytest.approx(np.cos(1) ** 2, abs=1e-8)


def test_fd_quartic_sin_cubed(rng):
    f = AnalyticField("s3", lambda x, y, z: (fields.sin(np.pi * x) ** 3, 0.0 * x, 0.0 * x))
    for p in rng.uniform(0.1, 0.9, size=(10, 3)):
        jet = f.derivative((4, 0, 0), p[None])[0, 0]
        fd = fd_oracle(f, (4, 0, 0), p)[0]
        assert abs(jet - fd) <= 1e-6 * max(abs(fd), 1.0)


def test_gradcurl_matches_curl_jets(rng):
    u = example_solution(1)
    pts = rng.uniform(size=(5, 3))
    gc = u.gradcurl(pts)
    step = 1e-5
    for j in range(3):
        d = np.zeros(3)
        d[j] = step
        fd = (u.curl(pts + d) - u.curl(pts - d)) / (2 * step)
        np.testing.assert_allclose(gc[:, :, j], fd, atol=1e-6)


def test_curl_power_range():
    with pytest.raises(ValueError):
        example_solution(1).curl_power(5, [[0.1, 0.2, 0.3]])


@given(seed=st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_random_trig_fields_consistent(seed):
    f = random_trig_field(seed)
    pts = np.random.default_rng(seed).uniform(size=(5, 3))
    np.testing.assert_allclose(f.divergence_of_curl_power(2, pts), 0, atol=1e-10)
    assert f.values(pts).shape == (5, 3)
    np.testing.assert_array_equal(f.values(pts), random_trig_field(seed).values(pts))


def test_shapes_preserved(rng):
    u = example_solution(2)
    pts = rng.uniform(size=(4, 7, 3))
    assert u.values(pts).shape == (4, 7, 3)
    assert u.gradcurl(pts).shape == (4, 7, 3, 3)
