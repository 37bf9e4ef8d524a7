import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bregman_lab.functions import make_function
from bregman_lab.kernels import make_kernel
from bregman_lab.left import Envelope, left_env, left_prox
from bregman_lab.numerics import Status
from bregman_lab.right import (EpiComposition, change_dgf_right_check, epi_comp_lsc_check, epi_composition,
                               right_env, right_env_conjugate_form, right_euclidean_form_check, right_hull,
                               right_mainprop_probe, right_objective, right_prox,
                               right_prox_bound_threshold)
from oracles import grid_argmin

PW = make_kernel("piecewise_env_star")
RECIP = make_function("recip", PW.domain, "right")
EXP = make_kernel("exp")
EU = make_kernel("euclidean")


def env_star_objective(lam):
    """1/y + D(1, y)/lam for the piecewise kernel, written out by hand."""
    def fn(y):
        d = np.where(y >= 1, (1 - y) ** 2 / y ** 2, (1 - y) ** 2)
        return np.where(y > 0, 1 / np.where(y > 0, y, 1.0) + d / lam, np.inf)
    return fn


def test_env_star_objective_matches_package_objective():
    obj = right_objective(PW, RECIP, 0.1, 1.0)
    ys = np.array([0.3, 0.9, 1.0, 1.7, 12.0])
    assert np.allclose(obj.values(ys), env_star_objective(0.1)(ys), rtol=1e-12)


def test_env_star_prox_small_lambda_matches_grid_oracle():
    x, v = grid_argmin(env_star_objective(0.1), 0.05, 20.0)
    assert x == pytest.approx(1 / 0.95, abs=1e-7)
    res = right_prox(PW, RECIP, 0.1, 1.0)
    assert res.nonempty
    assert res.x == pytest.approx(x, abs=1e-4)
    assert float(res.inf_value) == pytest.approx(v, abs=1e-9)


@pytest.mark.parametrize("lam", [2.0, 3.0])
def test_env_star_prox_empty(lam):
    res = right_prox(PW, RECIP, lam, 1.0)
    assert res.status is Status.NOT_ATTAINED
    # the infimum is approached as y -> inf: 1/lam
    assert float(res.inf_value) == pytest.approx(1 / lam, abs=1e-6)


def test_epi_composition_closed_forms():
    epi = EpiComposition(PW, RECIP)
    for t in np.linspace(-1.95, -0.05, 7):
        assert float(epi(t)) == pytest.approx(2 / (t + 2), abs=1e-9)
    for t in np.linspace(0.0, 0.95, 7):
        assert float(epi(t)) == pytest.approx(math.sqrt(1 - t), abs=1e-9)
    assert epi(1.0) == math.inf
    assert epi(-2.0) == math.inf
    assert epi_composition(PW, RECIP, 0.0) == 1.0
    assert np.allclose(epi.values([-1.0, 0.75]), [2.0, 0.5])


def test_epi_composition_legendre_collapses_to_composition():
    g = make_function("square", EXP.domain, "right")
    epi = EpiComposition(EXP, g)
    for xi in (0.5, 1.0, 4.0):
        assert float(epi(xi)) == pytest.approx(math.log(xi) ** 2, abs=1e-12)
    assert epi(-1.0) == math.inf


def test_lsc_violation_only_at_one():
    rep = epi_comp_lsc_check(PW, RECIP, np.linspace(-1.5, 1.0, 11))
    assert rep.violations == [1.0]
    assert not rep.lsc
    assert not any(rep.sufficient.values())


def test_lsc_holds_for_exp_square():
    g = make_function("square", EXP.domain, "right")
    rep = epi_comp_lsc_check(EXP, g, np.linspace(0.0, 3.0, 7))
    assert rep.lsc
    with pytest.raises(ValueError):
        epi_comp_lsc_check(EXP, g, [-1.0])


def test_euclidean_right_equals_left():
    f = make_function("sqnorm", EU.domain, "left")
    g = make_function("sqnorm", EU.domain, "right")
    for y in (-2.0, 0.3, 1.0):
        assert right_prox(EU, g, 0.5, y).x == pytest.approx(left_prox(EU, f, 0.5, y).x, abs=1e-7)
        assert float(right_env(EU, g, 0.5, y)) == pytest.approx(float(left_env(EU, f, 0.5, y)), abs=1e-10)


def test_exp_square_right_prox_matches_grid_oracle():
    g = make_function("square", EXP.domain, "right")
    for lam, x in ((0.5, 1.0), (2.0, -1.0)):
        def fn(y, lam=lam, x=x):
            return y * y + (np.exp(x) - np.exp(y) * (1 + x - y)) / lam
        yo, vo = grid_argmin(fn, -10, 10)
        res = right_prox(EXP, g, lam, x)
        assert res.x == pytest.approx(yo, abs=1e-6)
        assert float(res.inf_value) == pytest.approx(vo, abs=1e-9)


def test_right_prox_on_boundary_point():
    # x_bar = 1 lies on the boundary of X = [-1, 1]; D(1, y) -> 0 only as y -> 1 from inside
    b = make_kernel("boxed_quadratic")
    g = make_function("zero", b.domain, "right")
    res = right_prox(b, g, 1.0, 1.0)
    assert res.status is Status.NOT_ATTAINED and float(res.inf_value) == pytest.approx(0.0, abs=1e-9)


def test_right_argument_checks():
    g = make_function("zero", EU.domain, "right")
    with pytest.raises(ValueError):
        right_prox(EU, g, 0.0, 1.0)
    with pytest.raises(ValueError):
        right_prox(make_kernel("burg"), g, 1.0, -1.0)


@settings(max_examples=20)
@given(st.floats(0.05, 0.9), st.floats(0.05, 0.9), st.floats(-1.5, 1.5))
def test_right_envelope_monotone_in_lambda(l1, l2, x):
    g = make_function("square", EXP.domain, "right")
    lo, hi = sorted((l1, l2))
    assert float(right_env(EXP, g, lo, x)) >= float(right_env(EXP, g, hi, x)) - 1e-9


@pytest.mark.parametrize("kname,gname,lam,xs", [
    ("exp", "square", 0.5, (-2.0, 0.0, 1.5)),
    ("burg", "id", 0.5, (0.5, 2.0)),
    ("euclidean", "sqnorm", 0.5, (-3.0, 2.0)),
    ("piecewise_env_star", "recip", 0.1, (0.5, 1.5, 3.0)),
])
def test_right_env_conjugate_form(kname, gname, lam, xs):
    k = make_kernel(kname)
    g = make_function(gname, k.domain, "right")
    for x in xs:
        want = lam * float(right_env(k, g, lam, x))
        assert float(right_env_conjugate_form(k, g, lam, x)) == pytest.approx(want, abs=1e-5)


def test_right_hull_below_function():
    g = make_function("double_well", EU.domain, "right")
    cache = Envelope(EU, g, 0.5, "right", -1.0)
    for y in (-1.2, 0.0, 0.7):
        assert float(right_hull(EU, g, 0.5, y, cache)) <= float(g(y)) + 1e-6
    # the hull of a convex function is the function
    sq = make_function("sqnorm", EU.domain, "right")
    assert float(right_hull(EU, sq, 0.5, 0.4)) == pytest.approx(0.16, abs=1e-6)


def test_right_threshold():
    neg = make_function("neg_sqnorm", EU.domain, "right")
    rep = right_prox_bound_threshold(EU, neg, 0.0)
    assert rep.threshold_low <= 0.5 <= rep.threshold_high and rep.width <= 1e-3
    burg = make_kernel("burg")
    rep = right_prox_bound_threshold(burg, make_function("id", burg.domain, "right"), 1.0)
    assert rep.threshold_high == 10.0


def test_change_of_kernel_right():
    g = make_function("square", EXP.domain, "right")
    for x in (-1.0, 0.5, 2.0):
        assert change_dgf_right_check(EXP, EXP, g, 0.5, x).passed
        rep = right_euclidean_form_check(EXP, g, 0.5, x)
        assert rep.passed, (rep.prox_gap, rep.env_gap)


def test_right_mainprop_exp():
    g = make_function("square", EXP.domain, "right")
    rep = right_mainprop_probe(EXP, g, 0.5, np.linspace(-1, 1, 5))
    assert rep.nonempty and rep.env_finite and rep.env_locally_lipschitz and rep.consistent


def test_right_mainprop_env_star_explains_emptiness():
    rep = right_mainprop_probe(PW, RECIP, 2.0, np.array([1.0, 2.0, 3.0]),
                               xi_grid=np.linspace(-1.5, 1.0, 11))
    assert not rep.nonempty
    assert 1.0 in rep.empty_points
    assert not rep.lsc.lsc and rep.consistent
