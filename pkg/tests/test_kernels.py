import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bregman_lab.kernels import (KERNEL_NAMES, certify_kernel, kernel_grad_map_range, make_kernel,
                                 solve_grad_1d)

# sup_x x*xi - k(x) over a dense grid
GRIDS = {
    "burg": np.geomspace(1e-6, 1e6, 400001),
    "exp": np.linspace(-40, 40, 400001),
    "boxed_quadratic": np.linspace(-1, 1, 400001),
    "piecewise_env_star": np.concatenate([np.linspace(-60, 1, 200001), np.geomspace(1, 1e6, 200001)]),
}


def grid_conj(name, xi):
    k = make_kernel(name)
    xs = GRIDS[name]
    return float(np.max(xs * xi - k.value_many(xs)))


def test_catalog_and_unknown_names():
    assert set(KERNEL_NAMES) == {"euclidean", "burg", "exp", "boxed_quadratic", "piecewise_env_star",
                                 "dragomir2d"}
    with pytest.raises(ValueError):
        make_kernel("nope")
    with pytest.raises(ValueError):
        make_kernel("burg", (2,))
    assert make_kernel("euclidean", (3,)).dim == 3
    assert make_kernel("burg") is make_kernel("burg")


def test_closed_form_conjugate_values():
    assert make_kernel("exp").conj(1.0) == -1.0
    assert make_kernel("exp").conj(0.0) == 0.0
    assert make_kernel("exp").conj(-1.0) == math.inf
    assert make_kernel("burg").conj(-1.0) == -1.0
    assert make_kernel("burg").conj(0.0) == math.inf
    # on the parabola xi1^2 + xi2 = 0 the root Y is 1
    assert make_kernel("dragomir2d").conj([2.0, -4.0]) == pytest.approx(-0.5, abs=1e-15)


@pytest.mark.parametrize("name,xis", [
    ("burg", [-5.0, -1.0, -0.2]),
    ("exp", [0.01, 0.5, 1.0, 7.0]),
    ("boxed_quadratic", [-3.0, -0.4, 0.0, 0.9, 2.5]),
    ("piecewise_env_star", [-4.0, -1.0, 0.0, 0.5, 0.99]),
])
def test_conjugate_matches_grid_oracle(name, xis):
    k = make_kernel(name)
    for xi in xis:
        assert k.conj(xi) == pytest.approx(grid_conj(name, xi), abs=2e-6)


def test_piecewise_conjugate_outside_domain():
    k = make_kernel("piecewise_env_star")
    assert k.conj(1.5) == math.inf
    # sup of -1/x over x >= 1 is 0, approached but not attained
    assert k.conj_domain.contains(1.0) and not k.conj_domain.is_open
    assert k.conj(1.0) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize("name", ["euclidean", "burg", "exp", "piecewise_env_star"])
def test_gradient_matches_finite_differences(name):
    k = make_kernel(name)
    for y in (0.3, 0.9, 1.7, 4.0):
        h = 1e-6
        fd = (k.value(y + h) - k.value(y - h)) / (2 * h)
        assert k.grad(y)[0] == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_dragomir_gradient_and_conjugate_gradient():
    k = make_kernel("dragomir2d")
    rng = np.random.default_rng(3)
    for _ in range(30):
        y = np.array([rng.uniform(-3, 3), rng.uniform(0.1, 4)])
        h = 1e-6
        fd = [(k.value(y + h * e) - k.value(y - h * e)) / (2 * h) for e in np.eye(2)]
        assert np.allclose(k.grad(y), fd, rtol=1e-5, atol=1e-6)
        assert np.allclose(k.conj_grad(k.grad(y)), y, rtol=1e-10, atol=1e-10)


def test_dragomir_y_root_is_stable_far_below():
    k = make_kernel("dragomir2d")
    y = np.array([0.0, 1e-5])
    assert np.allclose(k.conj_grad(k.grad(y)), y, rtol=1e-9)


def test_gradient_outside_interior_raises():
    with pytest.raises(ValueError):
        make_kernel("burg").grad(0.0)
    with pytest.raises(ValueError):
        make_kernel("boxed_quadratic").grad(1.0)


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_exp_divergence_nonnegative_and_accurate(x, y):
    k = make_kernel("exp")
    d = float(k.divergence_many([x], [y])[0])
    assert d >= 0
    direct = math.exp(x) - math.exp(y) - math.exp(y) * (x - y)
    assert d == pytest.approx(direct, rel=1e-9, abs=1e-12 * math.exp(max(x, y)))


def test_exp_divergence_far_from_diagonal():
    k = make_kernel("exp")
    # e^y underflows while e^(x - y) would overflow
    assert k.divergence_many([5.0], [-800.0])[0] == pytest.approx(math.exp(5.0))
    assert k.divergence_many([800.0], [0.0])[0] == math.inf


def test_divergence_infinite_off_domain():
    k = make_kernel("burg")
    assert k.divergence_many([-1.0], [1.0])[0] == math.inf
    assert k.divergence_many([1.0], [0.0])[0] == math.inf
    b = make_kernel("boxed_quadratic")
    assert b.divergence_many([1.0], [0.5])[0] == 0.125
    assert b.divergence_many([0.5], [1.0])[0] == math.inf


@given(st.floats(-20, 20), st.floats(-20, 20))
def test_piecewise_divergence_matches_generic_formula(x, y):
    k = make_kernel("piecewise_env_star")
    d = float(k.divergence_many([x], [y])[0])
    generic = k.value(x) - k.value(y) - k.grad(y)[0] * (x - y)
    assert d == pytest.approx(max(generic, 0.0), abs=1e-9 * (1 + abs(k.value(x)) + abs(k.value(y))))


def test_solve_grad_1d():
    pw = make_kernel("piecewise_env_star")
    assert solve_grad_1d(pw, 0.5) == [(pytest.approx(math.sqrt(2)),) * 2]
    assert solve_grad_1d(pw, -1.0)[0][0] == pytest.approx(0.5)
    assert solve_grad_1d(pw, 1.0) == []
    assert solve_grad_1d(pw, 0.0) == [(1.0, 1.0)]
    burg = make_kernel("burg")
    assert solve_grad_1d(burg, -4.0)[0][0] == pytest.approx(0.25)
    assert solve_grad_1d(burg, 0.0) == []
    box = make_kernel("boxed_quadratic")
    assert solve_grad_1d(box, 2.0) == []
    with pytest.raises(ValueError):
        solve_grad_1d(make_kernel("dragomir2d"), 0.0)


def test_gradient_range_matches_dual_interior():
    r = kernel_grad_map_range(make_kernel("burg"))
    assert r.lo[0] == -math.inf and r.hi[0] == 0.0
    assert r.as_box() == make_kernel("burg").conj_domain.interior()
    e = kernel_grad_map_range(make_kernel("exp"))
    assert e.lo[0] == 0.0 and e.hi[0] == math.inf
    assert kernel_grad_map_range(make_kernel("euclidean")).contains(e)
    assert not e.contains(kernel_grad_map_range(make_kernel("euclidean")))


@pytest.mark.parametrize("name", KERNEL_NAMES)
def test_certificate_agrees_with_declared_flags(name):
    k = make_kernel(name)
    rep = certify_kernel(k)
    assert rep.checks["convex"][0]
    assert all(rep.agrees_with_flags(k.flags).values())


def test_certificate_verdicts():
    assert not certify_kernel(make_kernel("burg")).checks["one_coercive"][0]
    assert not certify_kernel(make_kernel("exp")).checks["one_coercive"][0]
    assert not certify_kernel(make_kernel("boxed_quadratic")).checks["essentially_smooth"][0]
    eu = certify_kernel(make_kernel("euclidean"))
    assert eu.passed


def test_dual_kernel():
    k = make_kernel("burg")
    d = k.dual()
    assert d.value(-2.0) == pytest.approx(k.conj(-2.0))
    with pytest.raises(ValueError):
        make_kernel("boxed_quadratic").dual()
