import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadcurl import _jetkernels_py as pure
from quadcurl import kernels
from quadcurl.fields import _layout, example_solution

compiled = pytest.importorskip("quadcurl._jetkernels")


@given(order=st.integers(0, 4), n=st.integers(1, 40), seed=st.integers(0, 2 ** 31))
@settings(max_examples=40, deadline=None)
def test_backends_agree(order, n, seed):
    rng = np.random.default_rng(seed)
    _, _, (tg, lf, rt) = _layout(order)
    nc = int(tg.max()) + 1
    a, b = rng.normal(size=(2, n, nc))
    np.testing.assert_allclose(compiled.jet_mul(a, b, tg, lf, rt, nc),
                               pure.jet_mul(a, b, tg, lf, rt, nc), rtol=1e-13, atol=1e-13)
    delta = a.copy()
    delta[:, 0] = 0
    series = np.ascontiguousarray(rng.normal(size=(n, order + 1)))
    np.testing.assert_allclose(compiled.jet_horner(delta, series, tg, lf, rt, nc),
                               pure.jet_horner(delta, series, tg, lf, rt, nc),
                               rtol=1e-12, atol=1e-12)


def test_jet_mul_is_polynomial_product():
    # (1 + x) * (1 + y) = 1 + x + y + xy in order-2 jets
    _, _, (tg, lf, rt) = _layout(2)
    nc = int(tg.max()) + 1
    a = np.zeros((1, nc))
    b = np.zeros((1, nc))
    a[0, 0] = b[0, 0] = 1
    a[0, 1] = 1
    b[0, 2] = 1
    out = pure.jet_mul(a, b, tg, lf, rt, nc)[0]
    assert out[0] == 1 and out[1] == 1 and out[2] == 1
    assert out.sum() == 4


def test_switch_backend_same_field_values():
    pts = np.random.default_rng(0).uniform(size=(30, 3))
    u = example_solution(1)
    initial = kernels.BACKEND
    try:
        kernels.use_backend("python")
        ref = u.rhs(pts)
        kernels.use_backend("compiled")
        np.testing.assert_allclose(u.rhs(pts), ref, rtol=1e-12, atol=1e-9)
    finally:
        kernels.use_backend(initial)
    with pytest.raises(ValueError):
        kernels.use_backend("fortran")


def test_default_prefers_compiled():
    assert kernels.BACKEND in ("compiled", "python")
