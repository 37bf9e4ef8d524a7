"""Exact Phi-conjugacy on finite grids.

All operations are max/min over finite sets, so with exactly representable
inputs (integers, dyadic rationals, or ``fractions.Fraction`` values in an
object array) every identity holds with zero tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .kernels import Kernel


@dataclass(frozen=True)
class Coupling:
    """A coupling Phi(x_i, y_j) sampled on finite grids X_n x Y_m."""

    x_points: np.ndarray
    y_points: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi)
        if phi.ndim != 2:
            raise ValueError("phi must be a matrix")
        if phi.shape != (len(self.x_points), len(self.y_points)):
            raise ValueError(f"phi has shape {phi.shape}, grids give "
                             f"{(len(self.x_points), len(self.y_points))}")
        if not all(math.isfinite(float(v)) for v in phi.flat):
            raise ValueError("coupling values must be finite")
        object.__setattr__(self, "phi", phi)

    @property
    def shape(self):
        return self.phi.shape

    def flipped(self) -> "Coupling":
        """The coupling seen from Y, Phi'(y, x) = Phi(x, y)."""
        return Coupling(self.y_points, self.x_points, self.phi.T)


@dataclass(frozen=True)
class PhiFn:
    """Values on one of the two grids; +inf marks points outside the domain."""

    values: np.ndarray
    side: str = "X"

    def __post_init__(self):
        vals = np.asarray(self.values)
        if self.side not in ("X", "Y"):
            raise ValueError("side must be 'X' or 'Y'")
        floats = [float(v) for v in vals.flat]
        if any(math.isnan(v) or v == -math.inf for v in floats):
            raise ValueError("values must be finite or +inf")
        object.__setattr__(self, "values", vals)

    @property
    def finite(self) -> np.ndarray:
        return np.array([math.isfinite(float(v)) for v in self.values.flat])

    def __len__(self):
        return len(self.values)

    def __eq__(self, other):
        if not isinstance(other, PhiFn):
            return NotImplemented
        return self.side == other.side and len(self) == len(other) and all(
            a == b for a, b in zip(self.values.flat, other.values.flat))

    __hash__ = None


def _require_proper(f: PhiFn):
    if not f.finite.any():
        raise ValueError("improper function: identically +inf")


def _conj(phi: np.ndarray, f: PhiFn, side: str) -> PhiFn:
    _require_proper(f)
    fin = f.finite
    m = phi[fin, :] - f.values[fin][:, None]
    return PhiFn(m.max(axis=0), side)


def phi_conjugate(c: Coupling, f: PhiFn) -> PhiFn:
    """f^Phi(y) = max_x Phi(x, y) - f(x), a function on Y."""
    if f.side != "X" or len(f) != c.shape[0]:
        raise ValueError("f must live on the X grid of the coupling")
    return _conj(c.phi, f, "Y")


def phi_conjugate_right(c: Coupling, g: PhiFn) -> PhiFn:
    """g^Phi'(x) = max_y Phi(x, y) - g(y), a function on X."""
    if g.side != "Y" or len(g) != c.shape[1]:
        raise ValueError("g must live on the Y grid of the coupling")
    return _conj(c.phi.T, g, "X")


def phi_biconjugate(c: Coupling, f: PhiFn) -> PhiFn:
    return phi_conjugate_right(c, phi_conjugate(c, f))


def phi_subdiff(c: Coupling, f: PhiFn, i: int) -> list[int]:
    """Indices j with x_i in argmin f - Phi(., y_j); empty when f(x_i) = +inf."""
    fin = f.finite
    if not fin[i]:
        return []
    gap = f.values[fin][:, None] - c.phi[fin, :]
    best = gap.min(axis=0)
    mine = f.values[i] - c.phi[i, :]
    return [j for j in range(c.shape[1]) if mine[j] == best[j]]


def phi_subdiff_right(c: Coupling, g: PhiFn, j: int) -> list[int]:
    """Indices i with y_j in argmin g - Phi(x_i, .)."""
    return phi_subdiff(c.flipped(), PhiFn(g.values, "X"), j)


@dataclass(frozen=True)
class FYRecord:
    a: bool
    b: bool
    c: bool
    d: bool

    @property
    def agree(self) -> bool:
        return self.a == self.b == self.c == self.d


def fy_duality_check(c: Coupling, f: PhiFn, i: int, j: int) -> FYRecord:
    """Evaluate the four Fenchel-Young equivalent statements at (x_i, y_j).

    a: y_j in the Phi-subdifferential of f at x_i;
    b: x_i in the Phi'-subdifferential of f^Phi at y_j, and f is Phi-subdifferentiable at x_i;
    c: f(x_i) + f^Phi(y_j) = Phi(x_i, y_j), checked as f^Phi(y_j) = Phi(x_i, y_j) - f(x_i);
    d: f(x_i) equals its biconjugate there and y_j is a Phi-subgradient of the biconjugate.
    """
    conj = phi_conjugate(c, f)
    bic = phi_conjugate_right(c, conj)
    sub_f = phi_subdiff(c, f, i)
    fin_i = bool(f.finite[i])
    a = j in sub_f
    b = i in phi_subdiff_right(c, conj, j) and bool(sub_f)
    cc = fin_i and conj.values[j] == c.phi[i, j] - f.values[i]
    d = fin_i and bic.values[i] == f.values[i] and j in phi_subdiff(c, bic, i)
    return FYRecord(a, b, bool(cc), bool(d))


def exact(values) -> np.ndarray:
    """Object array of Fractions (exact images of the floats); +inf is kept as a float."""
    arr = np.asarray(values, dtype=float)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = Fraction(v) if math.isfinite(v) else math.inf
    return out


def bregman_coupling(k: Kernel, lam: float, x_grid, y_grid, exact_arithmetic: bool = False) -> Coupling:
    """Phi(x, y) = -D(x, y)/lam on X_n x (Y_m inside int X).

    Under this coupling the Phi-conjugate is the negated left envelope, the
    biconjugate is the left hull and the inverse Phi-subdifferential is the
    left prox, all restricted to the grids.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    xs = np.asarray(x_grid, dtype=float).reshape(len(x_grid), -1)
    ys = np.asarray(y_grid, dtype=float).reshape(len(y_grid), -1)
    if not k.domain.contains_many(xs).all():
        raise ValueError("x grid must lie in X")
    if not k.domain.interior_many(ys).all():
        raise ValueError("y grid must lie in int X")
    d = np.array([[k.divergence_many(x.reshape(1, -1), y.reshape(1, -1))[0] for y in ys] for x in xs])
    phi = -d / lam
    return Coupling(xs, ys, exact(phi) if exact_arithmetic else phi)


def fy_duality_table(c: Coupling, f: PhiFn) -> tuple[np.ndarray, ...]:
    """The four statements of ``fy_duality_check`` for every (i, j) at once, as boolean matrices."""
    conj = phi_conjugate(c, f).values
    bic = phi_conjugate_right(c, PhiFn(conj, "Y")).values
    fin = f.finite
    phi = c.phi
    fv = np.array([v if ok else 0 for v, ok in zip(f.values, fin)], dtype=phi.dtype)
    tight = (phi - fv[:, None]) == conj[None, :]
    a = tight & fin[:, None]
    # x_i in the Phi'-subdifferential of the conjugate at y_j: conj(y_j) - Phi(x_i, y_j) = -bic(x_i)
    in_right = (conj[None, :] - phi) == -bic[:, None]
    b = in_right & a.any(axis=1)[:, None]
    cc = a.copy()
    bic_gap = bic[:, None] - phi
    bic_best = bic_gap.min(axis=0)
    same = np.array([ok and u == v for ok, u, v in zip(fin, bic, f.values)])
    d = same[:, None] & (bic_gap == bic_best[None, :])
    return a.astype(bool), b.astype(bool), cc.astype(bool), d.astype(bool)


def random_instance(rng: np.random.Generator, max_size: int = 12, p_inf: float = 0.3,
                    denominator: int = 4, span: int = 8) -> tuple[Coupling, PhiFn]:
    """A random coupling and proper function with dyadic entries k/denominator, |k| <= span*denominator.

    Dyadic values keep every max, min and difference exact in floating point.
    """
    n, m = rng.integers(1, max_size + 1, size=2)
    phi = rng.integers(-span * denominator, span * denominator + 1, size=(n, m)) / denominator
    vals = rng.integers(-span * denominator, span * denominator + 1, size=n) / denominator
    vals = np.where(rng.random(n) < p_inf, math.inf, vals)
    if not np.isfinite(vals).any():
        vals[rng.integers(n)] = 0.0
    xs = np.arange(n, dtype=float).reshape(-1, 1)
    ys = np.arange(m, dtype=float).reshape(-1, 1)
    return Coupling(xs, ys, phi), PhiFn(vals, "X")
