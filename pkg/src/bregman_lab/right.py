"""Right Bregman proximal map, envelope and hull (minimizing over the second argument)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import Kernel, make_kernel, solve_grad_1d
from .left import (DgfReport, Envelope, ProxBoundReport, _bisect_threshold, _check_lam,
                   check_dgf_hypotheses, left_env, windowed_minimize)
from .numerics import (ESCAPE_THRESHOLD, NEG_INF, Box, ExtReal, ObjectiveFn, ProxResult, Status, as_batch,
                       as_point, minimize, minimize_scalar, numeric_conjugate)


def right_objective(k: Kernel, g: ObjectiveFn, lam: float, x_bar) -> ObjectiveFn:
    """y -> g(y) + D(x_bar, y)/lam on int X."""
    x = as_point(x_bar, k.dim)

    def fn(a):
        return g.values(a, allow_nan=True) + k.divergence_many(x.reshape(1, -1), a) / lam

    return ObjectiveFn(fn, k.domain.interior(), side="right", label=f"{g.label}+D(x,.)/{lam:g}",
                       atoms=[p for p in g.atoms if k.domain.contains_interior(p)])


def right_prox(k: Kernel, g: ObjectiveFn, lam: float, x_bar, *, tol: float | None = None,
               seed: int = 0) -> ProxResult:
    """Minimizers of g + D(x_bar, .)/lam over the open set int X."""
    lam = _check_lam(lam)
    x = as_point(x_bar, k.dim)
    if not k.domain.contains(x):
        raise ValueError(f"right prox undefined: {x} is not in dom {k.name}")
    anchors = [x] if k.domain.contains_interior(x) else []
    return minimize(right_objective(k, g, lam, x), k.domain.interior(), tol=tol, anchors=anchors,
                    seed=seed)


def right_env(k: Kernel, g: ObjectiveFn, lam: float, x_bar, **kw) -> ExtReal:
    return right_prox(k, g, lam, x_bar, **kw).inf_value


def right_hull(k: Kernel, g: ObjectiveFn, lam: float, y, cache: Envelope | None = None) -> ExtReal:
    """Right proximal hull -env(-env* g) at y in int X."""
    lam = _check_lam(lam)
    p = as_point(y, k.dim)
    if not k.domain.contains_interior(p):
        raise ValueError(f"right hull evaluated outside int X at {p}")
    env = cache if cache is not None else Envelope(k, g, lam, "right", -1.0)
    return -left_env(k, env.objective(), lam, p)


class EpiComposition:
    """xi -> inf { g(y) : grad k(y) = xi }, +inf off the range of grad k.

    Values above the escape threshold are read as +inf: they only arise when
    the gradient solve lands within rounding of a point where g is infinite.
    """

    def __init__(self, k: Kernel, g: ObjectiveFn):
        self.k, self.g = k, g
        self._cache: dict = {}

    def __call__(self, xi) -> ExtReal:
        return ExtReal(self._value(tuple(as_point(xi, self.k.dim))))

    def _value(self, key: tuple) -> float:
        if key in self._cache:
            return self._cache[key]
        k, xi = self.k, np.array(key)
        if k.flags.legendre and k._conj_grad is not None:
            if k.conj_domain.contains_interior(xi):
                y = k.conj_grad(xi)
                v = float(self.g(y)) if k.domain.contains_interior(y) else math.inf
            else:
                v = math.inf
        elif k.dim == 1:
            v = math.inf
            for a, b in solve_grad_1d(k, float(xi[0])):
                if a == b:
                    v = min(v, float(self.g(a)))
                else:
                    res = minimize_scalar(self.g, Box.interval(a, b, "both"))
                    v = min(v, float(res.inf_value))
        else:
            raise ValueError(f"epi-composition needs a Legendre kernel in dimension {k.dim}")
        if v > ESCAPE_THRESHOLD:
            v = math.inf
        self._cache[key] = v
        return v

    def values(self, xis) -> np.ndarray:
        return np.array([self._value(tuple(p)) for p in as_batch(xis, self.k.dim)])

    def objective(self) -> ObjectiveFn:
        return ObjectiveFn(self.values, Box.real(self.k.dim), label=f"grad {self.k.name} |> {self.g.label}")


def epi_composition(k: Kernel, g: ObjectiveFn, xi) -> ExtReal:
    return EpiComposition(k, g)(xi)


@dataclass
class LscReport:
    violations: list
    gaps: dict
    sufficient: dict
    notes: list = field(default_factory=list)

    @property
    def lsc(self) -> bool:
        return not self.violations


def _coercive(g: ObjectiveFn, domain: Box) -> bool:
    base = domain.representative_interior_point
    for d in range(domain.dim):
        for s in (1.0, -1.0):
            vals = []
            for r in (1e2, 1e4, 1e6):
                p = base.copy()
                p[d] += s * r
                vals.append(float(g(p)))
            if math.isinf(vals[-1]) and vals[-1] > 0:
                continue
            if not (vals[-1] > 1e3 and vals[-1] > vals[0]):
                return False
    return True


def epi_comp_lsc_check(k: Kernel, g: ObjectiveFn, grid, tol: float = 1e-3,
                       radii=(1e-2, 1e-3, 1e-4)) -> LscReport:
    """Compare the epi-composition with its liminf over shrinking neighbourhoods within X*.

    A finite value is a violation when it exceeds the neighbourhood minimum
    at the smallest radius by more than ``tol`` and that excess does not
    shrink with the radius (a steep continuous function shrinks linearly);
    an infinite value is one when those minima stay bounded instead of
    growing as the radius shrinks.
    """
    if k.dim != 1:
        raise ValueError("epi_comp_lsc_check samples one-dimensional kernels")
    epi = EpiComposition(k, g)
    pts = [float(t) for t in np.asarray(grid, dtype=float).reshape(-1)]
    violations, gaps = [], {}
    offsets = np.linspace(0.05, 1.0, 20)
    for xi in pts:
        if not k.conj_domain.contains(xi):
            raise ValueError(f"grid point {xi} is outside X* = {k.conj_domain}")
        val = float(epi(xi))
        mins = []
        for r in radii:
            nb = np.concatenate([xi - r * offsets, xi + r * offsets])
            nb = nb[k.conj_domain.contains_many(nb)]
            mins.append(float(epi.values(nb).min()) if nb.size else math.inf)
        m = mins[-1]
        if math.isfinite(val):
            gap = val - m
            prev = val - mins[-2]
            bad = gap > tol and gap > 0.5 * prev
        else:
            gap = math.inf if math.isfinite(m) else 0.0
            bad = math.isfinite(m) and not (mins[-1] > mins[-2] + tol and mins[-2] > mins[0] + tol)
        gaps[xi] = gap
        if bad:
            violations.append(xi)
    sufficient = {
        "legendre_open_dual": bool(k.flags.legendre and k.conj_domain.is_open),
        "g_coercive": _coercive(g, k.domain.interior()),
        "kernel_one_coercive": bool(k.flags.one_coercive),
    }
    return LscReport(violations, gaps, sufficient)


def right_env_conjugate_form(k: Kernel, g: ObjectiveFn, lam: float, x_bar,
                             search_box: Box | None = None) -> ExtReal:
    """lam * env*(x_bar) computed as k(x_bar) - (k* + lam (grad k |> g))*(x_bar)."""
    lam = _check_lam(lam)
    x = as_point(x_bar, k.dim)
    epi = EpiComposition(k, g)

    def h(a):
        e = epi.values(a)
        out = np.full(len(a), math.inf)
        fin = np.isfinite(e)
        if fin.any():
            out[fin] = k.conj_many(a[fin]) + lam * e[fin]
        return out

    box = search_box if search_box is not None else k.conj_domain
    hobj = ObjectiveFn(h, box, label=f"{k.name}*+{lam:g}epi")
    anchors = [k.grad(x)] if k.domain.contains_interior(x) else []
    hstar = numeric_conjugate(hobj, x, box, anchors=anchors)
    return ExtReal(k.value(x)) - hstar


def right_prox_bound_threshold(k: Kernel, g: ObjectiveFn, probe_x=None, lambda_max: float = 10.0,
                               rel_width: float = 1e-3) -> ProxBoundReport:
    """Bracket the largest lambda for which the right envelope at ``probe_x`` is > -inf."""
    probe = k.domain.representative_interior_point if probe_x is None else as_point(probe_x, k.dim)
    return _bisect_threshold(lambda lam: right_env(k, g, lam, probe) > -math.inf, probe,
                             float(lambda_max), rel_width, "right")


def _mapped(res: ProxResult, fn) -> ProxResult:
    return ProxResult(res.inf_value, tuple(fn(p) for p in res.minimizers), res.status, res.certificate)


def change_dgf_right_check(k: Kernel, psi: Kernel, g: ObjectiveFn, lam: float, x_bar,
                           tol: float = 1e-5) -> DgfReport:
    """Compare grad k o prox* under k with grad psi o prox* under psi of the transported function.

    G = [(grad k |> g) + (k* - psi*)/lam] o grad psi on int dom psi; the
    envelopes differ by (k - psi)(x_bar)/lam.
    """
    lam = _check_lam(lam)
    check_dgf_hypotheses(k, psi)
    x = as_point(x_bar, k.dim)
    epi = EpiComposition(k, g)

    def G(a):
        eta = psi.grad_many(a)
        e = epi.values(eta)
        out = np.full(len(a), math.inf)
        fin = np.isfinite(e)
        if fin.any():
            out[fin] = e[fin] + (k.conj_many(eta[fin]) - psi.conj_many(eta[fin])) / lam
        return out

    Gobj = ObjectiveFn(G, psi.domain, side="right", label=f"transported {g.label}")
    lhs = right_prox(k, g, lam, x)
    anchors = [x] if psi.domain.contains_interior(x) else []
    rhs = windowed_minimize(right_objective(psi, Gobj, lam, x), psi.domain.interior(), anchors=anchors)
    lhs_img = _mapped(lhs, k.grad)
    rhs_img = _mapped(rhs, psi.grad)
    shift = ExtReal(k.value(x) - psi.value(x)) / lam
    env_rhs = rhs.inf_value + shift if rhs.inf_value > -math.inf else NEG_INF
    return DgfReport(lhs_img, rhs_img, float(lhs.inf_value), float(env_rhs), tol)


def right_euclidean_form_check(k: Kernel, g: ObjectiveFn, lam: float, x_bar, tol: float = 1e-5) -> DgfReport:
    return change_dgf_right_check(k, make_kernel("euclidean", (k.dim,)), g, lam, x_bar, tol)


@dataclass
class RightMainPropReport:
    grid: np.ndarray
    statuses: list
    env: np.ndarray
    env_finite: bool
    env_locally_lipschitz: bool
    grad_prox_locally_bounded: bool
    lsc: LscReport
    nonempty: bool
    notes: list = field(default_factory=list)

    @property
    def empty_points(self) -> list:
        return [float(p[0]) for p, s in zip(self.grid, self.statuses) if s is not Status.NONEMPTY]

    @property
    def consistent(self) -> bool:
        """Nonemptiness is only promised when the epi-composition is lsc."""
        return self.env_finite and self.env_locally_lipschitz and self.grad_prox_locally_bounded and (
            self.nonempty or not self.lsc.lsc)


def right_mainprop_probe(k: Kernel, g: ObjectiveFn, lam: float, grid, xi_grid=None) -> RightMainPropReport:
    """Sample the conclusions about env*, grad k o prox* and the lsc of the epi-composition."""
    lam = _check_lam(lam)
    if k.dim != 1:
        raise ValueError("right_mainprop_probe samples one-dimensional kernels")
    pts = as_batch(grid, 1)
    pts = pts[k.domain.contains_many(pts)]
    results = [right_prox(k, g, lam, p) for p in pts]
    env = np.array([float(r.inf_value) for r in results])
    finite = bool(np.all(np.isfinite(env)))
    lipschitz = False
    notes = []
    if finite and len(pts) > 2:
        h = np.diff(pts[:, 0])
        q = np.max(np.abs(np.diff(env)) / h)
        mids = 0.5 * (pts[1:, 0] + pts[:-1, 0])
        em = np.array([float(right_env(k, g, lam, m)) for m in mids])
        qf = max(np.max(np.abs(em - env[:-1]) / (0.5 * h)), np.max(np.abs(env[1:] - em) / (0.5 * h)))
        lipschitz = bool(qf <= 2.0 * q + 1e-6)
        notes.append(f"difference quotient {q:.3g} -> {qf:.3g} after halving")
    bounded = all(np.all(np.abs(k.grad_many(r.points())) < 1e9) for r in results if r.nonempty)
    if xi_grid is None:
        lo = max(k.conj_domain.lo[0], -5.0)
        hi = min(k.conj_domain.hi[0], 5.0)
        xi_grid = np.linspace(lo, hi, 61)
        xi_grid = xi_grid[k.conj_domain.contains_many(xi_grid)]
    lsc = epi_comp_lsc_check(k, g, xi_grid)
    statuses = [r.status for r in results]
    return RightMainPropReport(pts, statuses, env, finite, lipschitz, bounded, lsc,
                               all(s is Status.NONEMPTY for s in statuses), notes)
