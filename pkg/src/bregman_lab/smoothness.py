"""Relative smoothness certificates.

Four sampled inequalities that characterize f being smooth relative to a
Legendre, 1-coercive kernel k:

* rel_smooth_check: k - f convex on int X, i.e. D_f <= D_k;
* bcoco_check: D_f(xb, x) >= D_k*(grad k(xb) - (grad f(xb) - grad f(x)), grad k(xb));
* ext_bcoco_check: the same with (x, xi) ranging over the subgradient graph of f;
* astar_check: the a*-strong convexity inequality of the conjugate of f.

All verdicts are sample based: a "consistent" report means no sampled
inequality failed by more than ``tol``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel, make_kernel
from .numerics import Box, ObjectiveFn, as_point, finite_diff_grad

TOL_EXACT = 1e-7
TOL_FD = 1e-4
N_WITNESSES = 3


@dataclass
class SmoothnessReport:
    checked_pairs: int
    max_violation: float
    tol: float
    witnesses: list = field(default_factory=list)
    note: str = ""

    @property
    def verdict(self) -> str:
        return "violated" if self.max_violation > self.tol else "consistent"

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"


def _report(gaps: list, tol: float, note: str = "") -> SmoothnessReport:
    """gaps: (violation, points) with violation > 0 meaning the inequality fails."""
    finite = [(g, p) for g, p in gaps if not math.isnan(g)]
    worst = max((g for g, _ in finite), default=-math.inf)
    wit = sorted(finite, key=lambda t: -t[0])[:N_WITNESSES]
    return SmoothnessReport(len(gaps), float(worst), tol, [(p, float(g)) for g, p in wit if g > tol], note)


def _interior_points(k: Kernel, pts) -> list:
    out = []
    for x in pts:
        p = as_point(x, k.dim)
        if not k.domain.contains_interior(p):
            raise ValueError(f"sample {p} is not in the interior of dom k")
        out.append(p)
    return out


def _grad(f: ObjectiveFn, x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Gradient of f at x and whether it came from finite differences."""
    if f.grad is not None:
        return f.gradient(x), False
    return finite_diff_grad(f, x), True


def _tol(tol, used_fd: bool) -> float:
    if tol is not None:
        return tol
    return TOL_FD if used_fd else TOL_EXACT


def _conj_div(k: Kernel, a: np.ndarray, xb: np.ndarray) -> float:
    """D_k*(a, grad k(xb)) = k*(a) - k*(grad k(xb)) - <xb, a - grad k(xb)>."""
    g = k.grad(xb)
    ka = k.conj(a)
    if not math.isfinite(ka):
        return math.inf
    return max(ka - k.conj(g) - float(xb @ (a - g)), 0.0)


def sample_interior(k: Kernel, n: int, seed: int = 0, spread: float = 3.0) -> np.ndarray:
    """n random points of int X inside [-spread, spread]^dim, away from finite ends."""
    rng = np.random.default_rng(seed)
    lo = np.maximum(k.domain.lo, -spread)
    hi = np.minimum(k.domain.hi, spread)
    pad = 0.02 * (hi - lo)
    pts = rng.uniform(lo + pad, hi - pad, size=(n, k.dim))
    return pts[k.domain.interior_many(pts)]


def rel_smooth_check(k: Kernel, f: ObjectiveFn, interior_samples, tol: float | None = None) -> SmoothnessReport:
    """k - f convex on int X: midpoint convexity and D_f(x, y) <= D_k(x, y) on all sample pairs."""
    pts = _interior_points(k, interior_samples)
    grads = [_grad(f, p) for p in pts]
    fd = any(u for _, u in grads)
    h = lambda p: k.value(p) - float(f(p))  # noqa: E731
    gaps = []
    for i, x in enumerate(pts):
        for j, y in enumerate(pts):
            if i == j:
                continue
            gf = grads[j][0]
            d_f = float(f(x)) - float(f(y)) - float(gf @ (x - y))
            d_k = k.value(x) - k.value(y) - float(k.grad(y) @ (x - y))
            gaps.append((d_f - d_k, (x, y)))
            if i < j:
                mid = h(0.5 * (x + y)) - 0.5 * h(x) - 0.5 * h(y)
                gaps.append((mid, (x, y)))
    return _report(gaps, _tol(tol, fd))


def _require_legendre_coercive(k: Kernel):
    if not (k.flags.legendre and k.flags.one_coercive):
        raise ValueError(f"{k.name}: cocoercivity needs a Legendre and 1-coercive kernel")


def bcoco_check(k: Kernel, f: ObjectiveFn, pair_samples, tol: float | None = None) -> SmoothnessReport:
    """Residual D_k*(grad k(xb) - (grad f(xb) - grad f(x)), grad k(xb)) - D_f(xb, x) on (xb, x) pairs."""
    _require_legendre_coercive(k)
    gaps, fd = [], False
    for xb, x in pair_samples:
        xb, x = _interior_points(k, (xb, x))
        gb, u1 = _grad(f, xb)
        gx, u2 = _grad(f, x)
        fd = fd or u1 or u2
        d_f = float(f(xb)) - float(f(x)) - float(gx @ (xb - x))
        rhs = _conj_div(k, k.grad(xb) - (gb - gx), xb)
        gaps.append((rhs - d_f, (xb, x)))
    return _report(gaps, _tol(tol, fd))


def ext_bcoco_check(k: Kernel, f: ObjectiveFn, interior_samples, subgrad_graph_samples,
                    tol: float | None = None) -> SmoothnessReport:
    """Extended inequality over xb in int X and (x, xi) in the subgradient graph of f.

    The graph samples are supplied analytically. The note reports how many of
    them sit on the boundary of X, which is where this check goes beyond
    bcoco_check.
    """
    _require_legendre_coercive(k)
    pts = _interior_points(k, interior_samples)
    graph = [(as_point(x, k.dim), as_point(xi, k.dim)) for x, xi in subgrad_graph_samples]
    gaps, fd = [], False
    for xb in pts:
        gb, u = _grad(f, xb)
        fd = fd or u
        for x, xi in graph:
            fx = float(f(x))
            if not math.isfinite(fx):
                raise ValueError(f"graph sample {x} is outside dom f")
            lhs = float(f(xb)) - fx - float(xi @ (xb - x))
            rhs = _conj_div(k, k.grad(xb) - (gb - xi), xb)
            gaps.append((rhs - lhs, (xb, x, xi)))
    n_bd = sum(1 for x, _ in graph if not k.domain.contains_interior(x))
    note = f"{len(graph)} graph samples, {n_bd} on the boundary of X"
    if n_bd == 0:
        note += " (no boundary subgradients available; same content as bcoco_check)"
    return _report(gaps, _tol(tol, fd), note)


def astar_check(k: Kernel, fstar: ObjectiveFn, triples, tol: float = TOL_EXACT) -> SmoothnessReport:
    """Residual of fstar(xi) >= fstar(xib) + k*(xi - xib + grad k(xb)) - k*(grad k(xb)).

    Each triple (xi, xib, xb) must have xb in the subdifferential of fstar at
    xib (certified by the caller) and xb in int X. Points xi outside dom fstar
    satisfy the inequality vacuously.
    """
    _require_legendre_coercive(k)
    gaps = []
    for xi, xib, xb in triples:
        xi, xib, xb = as_point(xi, k.dim), as_point(xib, k.dim), as_point(xb, k.dim)
        if not k.domain.contains_interior(xb):
            raise ValueError(f"xb = {xb} is not in int X")
        fb = float(fstar(xib))
        if not math.isfinite(fb):
            raise ValueError(f"xib = {xib} is outside dom fstar")
        fx = float(fstar(xi))
        if not math.isfinite(fx):
            gaps.append((-math.inf, (xi, xib, xb)))
            continue
        g = k.grad(xb)
        rhs = fb + k.conj(xi - xib + g) - k.conj(g)
        gaps.append((rhs - fx, (xi, xib, xb)))
    return _report(gaps, tol)


@dataclass
class EquivalenceReport:
    reports: dict
    failures: list

    @property
    def agree(self) -> bool:
        return not self.failures


def _pairs(pts) -> list:
    return [(a, b) for i, a in enumerate(pts) for j, b in enumerate(pts) if i != j]


def equivalence_suite(k: Kernel, f: ObjectiveFn, fstar: ObjectiveFn, samples, graph_samples=None,
                      triples=None, tol: float | None = None) -> EquivalenceReport:
    """Run the four checks and test that their verdicts agree.

    B-smoothness, the extended inequality and a*-strong convexity of fstar
    must share a verdict; the plain inequality must hold whenever they do
    (its converse is only known when dom of the subdifferential is int X).
    Default graph samples are (x, grad f(x)); default triples use
    xib = grad f(xb), which always has xb in the subdifferential of fstar.
    """
    pts = _interior_points(k, samples)
    if graph_samples is None:
        graph_samples = [(x, _grad(f, x)[0]) for x in pts]
    if triples is None:
        grads = [_grad(f, x)[0] for x in pts]
        triples = [(grads[i], grads[j], pts[j]) for i, j in
                   ((i, j) for i in range(len(pts)) for j in range(len(pts)) if i != j)]
    reps = {
        "rel_smooth": rel_smooth_check(k, f, pts, tol),
        "bcoco": bcoco_check(k, f, _pairs(pts), tol),
        "ext_bcoco": ext_bcoco_check(k, f, pts, graph_samples, tol),
        "astar": astar_check(k, fstar, triples, tol if tol is not None else TOL_EXACT),
    }
    failures = []
    core = {name: reps[name].verdict for name in ("rel_smooth", "ext_bcoco", "astar")}
    if len(set(core.values())) > 1:
        failures.append(f"verdicts disagree: {core}")
    if reps["rel_smooth"].consistent and not reps["bcoco"].consistent:
        failures.append("smooth relative to k but the cocoercivity inequality fails")
    return EquivalenceReport(reps, failures)


# --------------------------------------------- the two-dimensional example

U_LATTICE = (-2.0, -1.0, 0.0, 1.0, 2.0)
T_LATTICE = (0.1, 0.5, 1.0, 2.0, 10.0)


# gradients of x1^2/(4 x2) land on the boundary of D up to rounding
BOUNDARY_SLACK = 1e-12


def _in_d(a: np.ndarray) -> np.ndarray:
    return a[:, 0] ** 2 + a[:, 1] <= BOUNDARY_SLACK * (1 + a[:, 0] ** 2)


def in_parabola_region(xi) -> bool:
    """D = {xi : xi_1^2 + xi_2 <= 0}, with a relative rounding slack."""
    return bool(_in_d(as_point(xi, 2).reshape(1, 2))[0])


def parabola_indicator() -> ObjectiveFn:
    """Indicator of D, the conjugate of the canonical extension of x1^2/(4 x2)."""
    return ObjectiveFn(lambda a: np.where(_in_d(a), 0.0, math.inf), Box.real(2), label="indicator_D")


def parabola_xi_grid(n: int = 21) -> np.ndarray:
    """The n x n grid over [-3, 3] x [-9, 0] intersected with D."""
    g1, g2 = np.meshgrid(np.linspace(-3, 3, n), np.linspace(-9, 0, n), indexing="ij")
    pts = np.column_stack([g1.ravel(), g2.ravel()])
    return pts[pts[:, 0] ** 2 + pts[:, 1] <= 0]


def parabola_triples(us=U_LATTICE, ts=T_LATTICE, xis=None) -> list:
    """(xi, xib, xb) with xib = (u, -u^2) on the boundary of D and xb = t (2u, 1)."""
    xis = parabola_xi_grid() if xis is None else xis
    out = []
    for u in us:
        xib = np.array([u, -u * u])
        for t in ts:
            xb = t * np.array([2 * u, 1.0])
            out.extend((xi, xib, xb) for xi in xis)
    return out


def parabola_closed_form_residual(xi, u: float, t: float) -> float:
    """t^2/2 - 1 + ln t - k*(xi_1, xi_2 + t - 1/t) for the two-dimensional kernel."""
    k = make_kernel("dragomir2d")
    xi = as_point(xi, 2)
    return 0.5 * t * t - 1.0 + math.log(t) - k.conj(np.array([xi[0], xi[1] + t - 1.0 / t]))


def y_monotonicity_check(ts=T_LATTICE, xis=None, tol: float = TOL_EXACT) -> SmoothnessReport:
    """Y(xi_1, xi_2 + t - 1/t) <= t for xi in D (Y as in the conjugate of the kernel)."""
    from .kernels import _dragomir_y

    xis = parabola_xi_grid() if xis is None else xis
    gaps = []
    for t in ts:
        shifted = np.column_stack([xis[:, 0], xis[:, 1] + t - 1.0 / t])
        ys = _dragomir_y(shifted)
        gaps.extend((float(y - t), (xi, t)) for y, xi in zip(ys, xis))
    return _report(gaps, tol)


def strict_convexity_probe(fstar: ObjectiveFn, a, b) -> float:
    """Midpoint gap f(a)/2 + f(b)/2 - f((a+b)/2) for a != b in dom f; zero means not strictly convex."""
    a, b = as_point(a, fstar.dim), as_point(b, fstar.dim)
    if np.array_equal(a, b):
        raise ValueError("the two points must differ")
    fa, fb, fm = float(fstar(a)), float(fstar(b)), float(fstar(0.5 * (a + b)))
    if not (math.isfinite(fa) and math.isfinite(fb)):
        raise ValueError("both points must lie in dom f")
    return 0.5 * fa + 0.5 * fb - fm
