"""Named test functions used by the suites and the command line."""

from __future__ import annotations

import math

import numpy as np

from .numerics import Box, ObjectiveFn, as_point


def _sq(a):
    return np.sum(a * a, axis=1)


def _only_1d(name, dim):
    if dim != 1:
        raise ValueError(f"function {name!r} is one-dimensional")


def make_function(name: str, domain: Box, side: str = "left", params=()) -> ObjectiveFn:
    """Build a catalog function on ``domain`` (X for left, Y for right operators).

    Names: zero, ln, id, linear:a.., sqnorm, half_sqnorm, neg_sqnorm, square,
    recip, indicator:p.., double_well, frac.
    """
    dim = domain.dim
    params = tuple(float(p) for p in params)
    kw = {"side": side, "label": name if not params else f"{name}:{','.join(map(repr, params))}"}
    if name == "zero":
        return ObjectiveFn(lambda a: np.zeros(len(a)), domain, grad=lambda x: np.zeros(dim), **kw)
    if name in ("id", "linear"):
        coef = np.array(params) if params else np.ones(dim)
        if coef.size != dim:
            raise ValueError(f"linear needs {dim} coefficients")
        return ObjectiveFn(lambda a: a @ coef, domain, grad=lambda x: coef.copy(), **kw)
    if name == "ln":
        _only_1d(name, dim)
        return ObjectiveFn(lambda a: _log_or_inf(a[:, 0]), domain,
                           grad=lambda x: 1.0 / as_point(x, 1), **kw)
    if name in ("sqnorm", "square"):
        return ObjectiveFn(_sq, domain, grad=lambda x: 2 * as_point(x, dim), **kw)
    if name == "half_sqnorm":
        return ObjectiveFn(lambda a: 0.5 * _sq(a), domain, grad=lambda x: as_point(x, dim), **kw)
    if name == "neg_sqnorm":
        return ObjectiveFn(lambda a: -_sq(a), domain, grad=lambda x: -2 * as_point(x, dim), **kw)
    if name == "recip":
        _only_1d(name, dim)

        def recip(a):
            t = a[:, 0]
            return np.where(t > 0, 1.0 / np.where(t > 0, t, 1.0), math.inf)

        return ObjectiveFn(recip, domain, grad=lambda x: -1.0 / as_point(x, 1) ** 2, **kw)
    if name == "indicator":
        p = np.array(params) if params else np.zeros(dim)
        if p.size != dim:
            raise ValueError(f"indicator needs a point of dimension {dim}")

        def ind(a):
            return np.where(np.all(a == p, axis=1), 0.0, math.inf)

        return ObjectiveFn(ind, domain, atoms=(p,), **kw)
    if name == "double_well":
        _only_1d(name, dim)
        return ObjectiveFn(lambda a: np.minimum((a[:, 0] - 1) ** 2, (a[:, 0] + 1) ** 2), domain, **kw)
    if name == "frac":
        if dim != 2:
            raise ValueError("frac is two-dimensional")

        def frac(a):
            x1, x2 = a[:, 0], a[:, 1]
            return np.where(x2 > 0, x1 ** 2 / (4 * np.where(x2 > 0, x2, 1.0)), math.inf)

        def frac_grad(x):
            x1, x2 = as_point(x, 2)
            return np.array([x1 / (2 * x2), -x1 ** 2 / (4 * x2 ** 2)])

        return ObjectiveFn(frac, domain, grad=frac_grad, **kw)
    raise ValueError(f"unknown function {name!r}")


def _log_or_inf(t):
    # ln is only defined for t > 0; the canonical extension is +inf elsewhere
    return np.where(t > 0, np.log(np.where(t > 0, t, 1.0)), math.inf)


def parse_function(spec: str, domain: Box, side: str = "left") -> ObjectiveFn:
    """Parse ``name`` or ``name:p1,p2`` into a catalog function."""
    name, _, rest = spec.partition(":")
    params = [float(t) for t in rest.split(",") if t.strip()] if rest else []
    return make_function(name.strip(), domain, side, params)
