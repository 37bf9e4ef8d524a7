import math

import numpy as np
import pytest

from bregman_lab.numerics import Box
from bregman_lab.setvalued import (CAVEAT, SampledOperator, check_local_bounded, check_osc, check_usc,
                                   evaluate_entry, implication_matrix, operator_catalog, value_properties)

CATALOG = operator_catalog()
UNIT = Box.interval(0.0, 1.0, "both")


def t_osc(x):
    return [x] if x[0] > 0 else [np.array([0.5])]


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_verdicts(name):
    for x, prop, want, got, witness in evaluate_entry(CATALOG[name]):
        assert want == got, (name, x, prop, witness)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_no_implication_violated(name):
    entry = CATALOG[name]
    rep = implication_matrix(entry.op, entry.points)
    assert rep.consistent, rep.violations
    assert rep.caveat == CAVEAT


def test_target_set_decides_osc():
    open_target = SampledOperator(UNIT, Box.interval(0.0, 1.0, "right"), t_osc)
    closed_target = SampledOperator(UNIT, UNIT, t_osc)
    assert check_osc(open_target, 0.0).holds
    rep = check_osc(closed_target, 0.0)
    assert not rep.holds and rep.witness
    # relative to the whole line the graph is not closed either way
    assert not check_osc(open_target, 0.0, relative_to_target=False).holds


def test_osc_without_usc_on_open_target():
    op = SampledOperator(UNIT, Box.interval(0.0, 1.0, "right"), t_osc)
    assert check_osc(op, 0.0).holds
    assert not check_usc(op, 0.0).holds
    assert check_local_bounded(op, 0.0).holds


def test_reciprocal_depends_on_source():
    open_src = SampledOperator(Box.interval(0.0, 1.0), Box.real(1), lambda x: [1.0 / x])
    half_open = SampledOperator(Box.interval(0.0, 1.0, "left"), Box.real(1),
                                lambda x: [1.0 / x] if x[0] > 0 else [])
    for x in (0.05, 0.5):
        assert check_local_bounded(open_src, x).holds
        assert check_usc(open_src, x).holds
    assert not check_local_bounded(half_open, 0.0).holds
    assert not check_usc(half_open, 0.0).holds
    assert check_osc(half_open, 0.0).holds


def test_continuous_single_valued_map_is_everything():
    op = SampledOperator(Box.real(1), Box.real(1), lambda x: [np.sin(x)])
    for x in (-1.0, 0.0, 2.0):
        assert check_osc(op, x).holds and check_usc(op, x).holds and check_local_bounded(op, x).holds


def test_jump_breaks_osc():
    op = SampledOperator(Box.real(1), Box.real(1), lambda x: [np.array([1.0])] if x[0] > 0 else [np.array([0.0])])
    assert not check_osc(op, 0.0).holds
    # the two-valued closure at 0 restores both properties
    closed = SampledOperator(Box.real(1), Box.real(1),
                             lambda x: [np.array([1.0])] if x[0] > 0 else
                             ([np.array([0.0]), np.array([1.0])] if x[0] == 0 else [np.array([0.0])]))
    assert check_osc(closed, 0.0).holds and check_usc(closed, 0.0).holds


def test_value_properties_and_empty_values():
    op = SampledOperator(Box.real(1), Box.real(1), lambda x: [] if x[0] < 0 else [x])
    props = value_properties(op, -1.0)
    assert not props["in_dom"] and props["compact_valued"]
    assert check_usc(op, -1.0).holds
    assert check_osc(op, -1.0).holds
    assert op(math.inf) == []


def test_burg_prox_restricted_vs_extended():
    ext = CATALOG["burg_prox_extended"].op
    res = CATALOG["burg_prox_restricted"].op
    assert ext(0.0) == [] and not check_osc(ext, 0.0).holds
    assert check_osc(res, 1.0).holds and check_usc(res, 1.0).holds
