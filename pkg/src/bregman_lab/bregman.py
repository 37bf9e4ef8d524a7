"""Bregman distances and their standard identities."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kernels import Kernel
from .numerics import ExtReal, as_point


@dataclass(frozen=True)
class BregmanPair:
    kernel: Kernel
    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be positive and finite, got {self.lam}")


def distance(k: Kernel, x, y) -> ExtReal:
    """D(x, y); +inf if x is outside X or y outside int X. Never raises on location."""
    x = as_point(x, k.dim)
    y = as_point(y, k.dim)
    return ExtReal(k.divergence_many(x.reshape(1, -1), y.reshape(1, -1))[0])


def gap_form(k: Kernel, x, y) -> ExtReal:
    """k(x) + k*(grad k(y)) - <grad k(y), x>; defined only for y in int X."""
    x = as_point(x, k.dim)
    y = as_point(y, k.dim)
    if not k.domain.contains_interior(y):
        raise ValueError(f"gap form needs y in int X, got {y}")
    g = k.grad(y)
    return ExtReal(k.value(x)) + ExtReal(k.conj(g)) - float(g @ x)


def dual_distance(k: Kernel, xi, eta) -> ExtReal:
    """D_{k*}(xi, eta) for a Legendre kernel."""
    return distance(k.dual(), xi, eta)


def dual_identity_check(k: Kernel, x, y, tol: float = 1e-7) -> tuple[bool, float]:
    """Compare D(x, y) with D*(grad k(y), grad k(x)) for x, y in int X."""
    if not k.flags.legendre:
        raise ValueError(f"{k.name} is not Legendre")
    x = as_point(x, k.dim)
    y = as_point(y, k.dim)
    lhs = distance(k, x, y)
    rhs = dual_distance(k, k.grad(y), k.grad(x))
    resid = abs(float(lhs) - float(rhs))
    return resid <= tol * (1 + abs(float(lhs))), resid


def symmetrized(k: Kernel, u, v) -> float:
    """D(u, v) + D(v, u) for u, v in int X."""
    u = as_point(u, k.dim)
    v = as_point(v, k.dim)
    if not (k.domain.contains_interior(u) and k.domain.contains_interior(v)):
        raise ValueError("symmetrized distance needs both points in int X")
    return float(distance(k, u, v)) + float(distance(k, v, u))


def symmetrized_inner(k: Kernel, u, v) -> float:
    """<grad k(u) - grad k(v), u - v>."""
    u = as_point(u, k.dim)
    v = as_point(v, k.dim)
    return float((k.grad(u) - k.grad(v)) @ (u - v))


def three_point_residual(k: Kernel, u, x, y) -> float:
    """D(u,y) - D(u,x) - D(x,y) - <u - x, grad k(x) - grad k(y)> for x, y in int X."""
    u, x, y = (as_point(p, k.dim) for p in (u, x, y))
    lhs = float(distance(k, u, y))
    rhs = float(distance(k, u, x)) + float(distance(k, x, y)) + float((u - x) @ (k.grad(x) - k.grad(y)))
    return lhs - rhs
