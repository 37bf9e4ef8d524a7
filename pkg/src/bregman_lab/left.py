"""Left Bregman proximal map, envelope and hull (minimizing over the first argument)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel, kernel_grad_map_range, make_kernel
from .numerics import (NEG_INF, Box, ExtReal, ObjectiveFn, ProxResult, Status, as_batch,
                       as_point, minimize, numeric_conjugate)


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f"lambda must be positive and finite, got {lam}")
    return lam


def left_objective(k: Kernel, f: ObjectiveFn, lam: float, y_bar) -> ObjectiveFn:
    """x -> f(x) + D(x, y_bar)/lam on X."""
    y = as_point(y_bar, k.dim)

    def fn(a):
        return f.values(a, allow_nan=True) + k.divergence_many(a, y.reshape(1, -1)) / lam

    return ObjectiveFn(fn, k.domain, side="left", label=f"{f.label}+D(.,y)/{lam:g}", atoms=f.atoms)


def left_prox(k: Kernel, f: ObjectiveFn, lam: float, y_bar, *, tol: float | None = None,
              seed: int = 0) -> ProxResult:
    """Minimizers of f + D(., y_bar)/lam over X, with the infimum and its status."""
    lam = _check_lam(lam)
    y = as_point(y_bar, k.dim)
    if not k.domain.contains_interior(y):
        raise ValueError(f"prox undefined: {y} is not in int dom {k.name}")
    return minimize(left_objective(k, f, lam, y), k.domain, tol=tol, anchors=[y], seed=seed)


def left_env(k: Kernel, f: ObjectiveFn, lam: float, y_bar, **kw) -> ExtReal:
    return left_prox(k, f, lam, y_bar, **kw).inf_value


class Envelope:
    """Memoized envelope y -> env(y), usable as an objective on int X.

    ``side`` selects the left or right envelope; ``sign=-1`` gives the
    negated envelope, which is what the hulls feed to the opposite side.
    """

    def __init__(self, k: Kernel, f: ObjectiveFn, lam: float, side: str = "left", sign: float = 1.0):
        self.k, self.f, self.lam, self.side, self.sign = k, f, _check_lam(lam), side, sign
        self.cache: dict = {}

    def value(self, p) -> float:
        key = tuple(np.asarray(p, dtype=float).reshape(-1))
        if key not in self.cache:
            if self.side == "left":
                v = float(left_env(self.k, self.f, self.lam, np.array(key)))
            else:
                from .right import right_env
                v = float(right_env(self.k, self.f, self.lam, np.array(key)))
            self.cache[key] = v
        return self.cache[key]

    def objective(self) -> ObjectiveFn:
        side = "right" if self.side == "left" else "left"

        def fn(a):
            return np.array([self.sign * self.value(p) for p in a])

        name = f"{'-' if self.sign < 0 else ''}env_{self.side}({self.f.label})"
        return ObjectiveFn(fn, self.k.domain, side=side, label=name)


def left_hull(k: Kernel, f: ObjectiveFn, lam: float, x, cache: Envelope | None = None) -> ExtReal:
    """Proximal hull -env*(-env f) at x in X.

    Pass an ``Envelope`` (left, sign -1) as ``cache`` to reuse inner envelope
    values across many evaluation points.
    """
    from .right import right_env

    lam = _check_lam(lam)
    p = as_point(x, k.dim)
    if not k.domain.contains(p):
        raise ValueError(f"hull evaluated outside X at {p}")
    env = cache if cache is not None else Envelope(k, f, lam, "left", -1.0)
    return -right_env(k, env.objective(), lam, p)


@dataclass
class ProxBoundReport:
    threshold_low: float
    threshold_high: float
    probe_point: np.ndarray
    method: str
    trace: list = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.threshold_high - self.threshold_low


def _bisect_threshold(finite_at, probe, lambda_max: float, rel_width: float, label: str):
    trace = []

    def test(lam):
        ok = finite_at(lam)
        trace.append((lam, "finite" if ok else "unbounded"))
        return ok

    if test(lambda_max):
        return ProxBoundReport(lambda_max, lambda_max, probe,
                               f"{label}: finite at lambda_max, no threshold below it", trace)
    lo = lambda_max * 1e-6
    if not test(lo):
        return ProxBoundReport(0.0, lo, probe, f"{label}: unbounded already at {lo:g}", trace)
    hi = lambda_max
    while hi - lo > rel_width * max(1.0, lo):
        mid = 0.5 * (lo + hi)
        if test(mid):
            lo = mid
        else:
            hi = mid
    return ProxBoundReport(lo, hi, probe, f"{label}: bisection on finiteness of the envelope", trace)


def prox_bound_threshold(k: Kernel, f: ObjectiveFn, probe_y=None, lambda_max: float = 10.0,
                         rel_width: float = 1e-3) -> ProxBoundReport:
    """Bracket the largest lambda for which the left envelope at ``probe_y`` is > -inf."""
    probe = k.domain.representative_interior_point if probe_y is None else as_point(probe_y, k.dim)
    return _bisect_threshold(lambda lam: left_env(k, f, lam, probe) > -math.inf, probe,
                             float(lambda_max), rel_width, "left")


def env_conjugate_form(k: Kernel, f: ObjectiveFn, lam: float, y_bar, search_box: Box | None = None) -> ExtReal:
    """lam * env(y_bar) computed as k*(grad k(y_bar)) - (lam f + k)*(grad k(y_bar))."""
    lam = _check_lam(lam)
    y = as_point(y_bar, k.dim)
    xi = k.grad(y)

    def h(a):
        return lam * f.values(a, allow_nan=True) + k.value_many(a)

    hobj = ObjectiveFn(h, k.domain, label=f"{lam:g}{f.label}+{k.name}", atoms=f.atoms)
    hstar = numeric_conjugate(hobj, xi, search_box, anchors=[y])
    return ExtReal(k.conj(xi)) - hstar


def hausdorff(a: ProxResult, b: ProxResult) -> float:
    pa, pb = a.points(), b.points()
    if pa.size == 0 and pb.size == 0:
        return 0.0
    if pa.size == 0 or pb.size == 0:
        return math.inf
    d = np.linalg.norm(pa[:, None, :] - pb[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def value_gap(u: float, v: float) -> float:
    if u == v:
        return 0.0
    return abs(float(u) - float(v))


@dataclass
class DgfReport:
    prox_lhs: ProxResult
    prox_rhs: ProxResult
    env_lhs: float
    env_rhs: float
    tol: float

    @property
    def prox_gap(self) -> float:
        return hausdorff(self.prox_lhs, self.prox_rhs)

    @property
    def env_gap(self) -> float:
        return value_gap(self.env_lhs, self.env_rhs)

    @property
    def passed(self) -> bool:
        same_status = self.prox_lhs.nonempty == self.prox_rhs.nonempty
        return same_status and self.prox_gap <= self.tol and self.env_gap <= self.tol


# The transported objective F + D_psi/lam carries psi(x)/lam twice with opposite
# signs; past this radius the cancellation error dominates the tolerance.
DGF_WINDOW = 1e4


def windowed_box(domain: Box, radius: float = DGF_WINDOW) -> Box:
    """domain intersected with [-radius, radius]^n (the new ends are closed)."""
    lo = tuple(max(a, -radius) for a in domain.lo)
    hi = tuple(min(b, radius) for b in domain.hi)
    lo_c = tuple(c or a < -radius for a, c in zip(domain.lo, domain.lo_closed))
    hi_c = tuple(c or b > radius for b, c in zip(domain.hi, domain.hi_closed))
    return Box(lo, hi, lo_c, hi_c)


def windowed_minimize(obj: ObjectiveFn, domain: Box, anchors=(), radius: float = DGF_WINDOW) -> ProxResult:
    """Minimize over the window; a minimizer on an artificial window edge counts as escaping."""
    res = minimize(obj, windowed_box(domain, radius), anchors=[a for a in anchors
                                                                if np.all(np.abs(a) < radius)])
    if not res.nonempty:
        return res
    cut_lo = np.array(domain.lo) < -radius
    cut_hi = np.array(domain.hi) > radius
    for m in res.minimizers:
        if np.any(cut_lo & (m <= -radius * (1 - 1e-9))) or np.any(cut_hi & (m >= radius * (1 - 1e-9))):
            return ProxResult(res.inf_value, (), Status.NOT_ATTAINED,
                              f"minimizer on the search window edge |x| = {radius:g}")
    return res


def check_dgf_hypotheses(k: Kernel, psi: Kernel):
    """Raise unless psi is Legendre, dom psi contains X and range grad psi contains range grad k."""
    if psi.dim != k.dim:
        raise ValueError("kernels differ in dimension")
    if not psi.flags.legendre:
        raise ValueError(f"{psi.name} is not Legendre")
    if not psi.domain.contains_box(k.domain):
        raise ValueError(f"dom {psi.name} = {psi.domain} does not contain X = {k.domain}")
    r_psi, r_k = kernel_grad_map_range(psi), kernel_grad_map_range(k)
    if not r_psi.contains(r_k):
        raise ValueError(f"range grad {psi.name} = {r_psi.as_box()} misses range grad {k.name} = {r_k.as_box()}")


def change_dgf_left_check(k: Kernel, psi: Kernel, f: ObjectiveFn, lam: float, y_bar,
                          tol: float = 1e-5) -> DgfReport:
    """Compare the left prox/env under k with the ones under psi of the tilted function.

    F = f + (k - psi)/lam on X (+inf elsewhere in dom psi); the prox point at
    y_bar matches the psi-prox of F at grad psi*(grad k(y_bar)) and the
    envelopes differ by (k* - psi*)(grad k(y_bar))/lam.
    """
    lam = _check_lam(lam)
    check_dgf_hypotheses(k, psi)
    y = as_point(y_bar, k.dim)
    xi = k.grad(y)

    def F(a):
        inside = k.domain.contains_many(a)
        out = np.full(len(a), math.inf)
        if inside.any():
            b = a[inside]
            out[inside] = f.values(b, allow_nan=True) + (k.value_many(b) - psi.value_many(b)) / lam
        return out

    Fobj = ObjectiveFn(F, psi.domain, label=f"{f.label}+({k.name}-{psi.name})/{lam:g}", atoms=f.atoms)
    z = psi.conj_grad(xi)
    lhs = left_prox(k, f, lam, y)
    rhs = windowed_minimize(left_objective(psi, Fobj, lam, z), psi.domain, anchors=[z])
    shift = ExtReal(k.conj(xi) - psi.conj(xi)) / lam
    env_rhs = rhs.inf_value + shift if rhs.inf_value > -math.inf else NEG_INF
    return DgfReport(lhs, rhs, float(lhs.inf_value), float(env_rhs), tol)


def euclidean_form_check(k: Kernel, f: ObjectiveFn, lam: float, y_bar, tol: float = 1e-5) -> DgfReport:
    """Change of kernel with psi = half squared norm."""
    return change_dgf_left_check(k, make_kernel("euclidean", (k.dim,)), f, lam, y_bar, tol)


@dataclass
class MainPropReport:
    grid: np.ndarray
    statuses: list
    env: np.ndarray
    nonempty: bool
    env_finite: bool
    env_continuous: bool
    prox_locally_bounded: bool
    prox_osc: bool
    notes: list = field(default_factory=list)

    @property
    def empty_points(self) -> list:
        return [float(p[0]) if p.size == 1 else p for p, s in zip(self.grid, self.statuses)
                if s is not Status.NONEMPTY]


def _refined_jumps(points, values_at):
    pts = np.asarray(points)
    mids = 0.5 * (pts[1:] + pts[:-1])
    v = np.array([values_at(p) for p in pts])
    vm = np.array([values_at(p) for p in mids])
    coarse = np.max(np.abs(np.diff(v))) if len(v) > 1 else 0.0
    fine = max(np.max(np.abs(vm - v[:-1])), np.max(np.abs(v[1:] - vm))) if len(v) > 1 else 0.0
    return v, coarse, fine


def mainprop_probe(k: Kernel, f: ObjectiveFn, lam: float, grid) -> MainPropReport:
    """Probe nonemptiness, continuity of env, local boundedness and osc of the prox on a 1-D grid."""
    from .setvalued import SampledOperator, check_osc

    lam = _check_lam(lam)
    if k.dim != 1:
        raise ValueError("mainprop_probe samples one-dimensional kernels")
    pts = as_batch(grid, 1)
    pts = pts[k.domain.interior_many(pts)]
    results = [left_prox(k, f, lam, p) for p in pts]
    statuses = [r.status for r in results]
    env = np.array([float(r.inf_value) for r in results])
    finite = bool(np.all(np.isfinite(env)))
    continuous = False
    notes = []
    if finite:
        _, coarse, fine = _refined_jumps(pts, lambda p: float(left_env(k, f, lam, p)))
        continuous = bool(fine <= 0.75 * coarse + 1e-9)
        notes.append(f"max jump {coarse:.3g} -> {fine:.3g} after halving")
    bounded = all(np.all(np.abs(r.points()) < 1e9) for r in results if r.nonempty)
    op = SampledOperator(k.domain.interior(), k.domain,
                         lambda p: [m for m in left_prox(k, f, lam, p).minimizers], "prox")
    inner = [p for p, s in zip(pts, statuses) if s is Status.NONEMPTY]
    osc = all(check_osc(op, p, rates=("geometric",), k_max=12).holds for p in inner[:: max(1, len(inner) // 3)])
    return MainPropReport(pts, statuses, env, all(s is Status.NONEMPTY for s in statuses), finite,
                          continuous, bounded, osc, notes)
