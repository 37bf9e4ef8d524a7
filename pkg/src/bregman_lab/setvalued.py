"""Sampled semicontinuity checks for set-valued operators with restricted source and target.

Every verdict here is a finite-sample heuristic: limits along a few
sequences, neighbourhoods at a few radii. Reports carry that caveat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import Box, as_point

CAVEAT = "sampled check: finitely many sequences and radii, not a proof"
ESCAPE = 1e9


@dataclass
class SampledOperator:
    """T : source -> target, returning a finite list of points for each x."""

    source: Box
    target: Box
    value_at: Callable
    label: str = ""

    def __call__(self, x) -> list:
        p = as_point(x, self.source.dim)
        if not self.source.contains(p):
            return []
        vals = [as_point(v, self.target.dim) for v in self.value_at(p)]
        return [v for v in vals if self.target.contains(v)]


@dataclass
class CheckReport:
    holds: bool
    witness: str = ""
    caveat: str = CAVEAT


def _directions(dim: int):
    eye = np.eye(dim)
    return [s * eye[d] for d in range(dim) for s in (1.0, -1.0)]


def _rate(name: str, k_max: int) -> np.ndarray:
    if name == "harmonic":
        ks = np.unique(np.round(np.logspace(0, math.log10(k_max), 13)).astype(int))
        return 1.0 / ks
    if name == "square":
        ks = np.unique(np.round(np.logspace(0, math.log10(min(k_max, 1e6) ** 0.5 * 10), 13)).astype(int))
        ks = ks[ks <= k_max]
        return 1.0 / ks.astype(float) ** 2
    if name == "geometric":
        return 2.0 ** -np.arange(1, min(k_max, 40) + 1, dtype=float)
    raise ValueError(f"unknown rate {name!r}")


def _near_open_boundary(target: Box, y: np.ndarray) -> bool:
    for i in range(target.dim):
        for end, closed in ((target.lo[i], target.lo_closed[i]), (target.hi[i], target.hi_closed[i])):
            if math.isfinite(end) and not closed and abs(y[i] - end) <= 1e-9 * (1 + abs(end)):
                return True
    return False


def _limit_points(op: SampledOperator, x: np.ndarray, u: np.ndarray, radii: np.ndarray, scale: float):
    """Limits of branches y^k in T(x + r_k u); returns (limit, sequence description) pairs."""
    seq = [(r, x + scale * r * u) for r in radii]
    seq = [(r, p) for r, p in seq if op.source.contains(p)]
    if len(seq) < 3:
        return []
    values = [op(p) for _, p in seq]
    out = []
    for y_last in values[-1]:
        branch = [y_last]
        for vals in reversed(values[:-1][-2:]):
            if not vals:
                break
            d = [np.linalg.norm(v - branch[-1]) for v in vals]
            branch.append(vals[int(np.argmin(d))])
        if len(branch) < 3:
            continue
        y2, y1, y0 = branch[0], branch[1], branch[2]
        r2, r1, r0 = seq[-1][0], seq[-2][0], seq[-3][0]
        if np.linalg.norm(y2) > ESCAPE:
            continue
        if np.linalg.norm(y2 - y1) > np.linalg.norm(y1 - y0) + 1e-12:
            continue
        # quadratic (Lagrange) extrapolation of the branch to r = 0
        w2 = r1 * r0 / ((r2 - r1) * (r2 - r0))
        w1 = r2 * r0 / ((r1 - r2) * (r1 - r0))
        w0 = r2 * r1 / ((r0 - r2) * (r0 - r1))
        lim = w2 * y2 + w1 * y1 + w0 * y0
        out.append((lim, f"x^k = x + {scale:g} r_k {np.round(u, 3)}"))
    return out


def check_osc(op: SampledOperator, x, rates=("harmonic", "square", "geometric"), k_max: int = 10_000,
              tol: float = 1e-6, relative_to_target: bool = True) -> CheckReport:
    """Outer semicontinuity at x relative to the target set.

    Limits of y^k in T(x^k) along sampled sequences x^k -> x are estimated by
    extrapolation; limits outside the target are discarded (unless
    ``relative_to_target`` is False, which tests closedness of the graph in
    source x R^n) and the rest must lie within ``tol`` of T(x).
    """
    p = as_point(x, op.source.dim)
    if not op.source.contains(p):
        raise ValueError(f"{p} is not in the source set")
    tx = op(p)
    for rate in rates:
        radii = _rate(rate, k_max)
        for u in _directions(op.source.dim):
            for lim, how in _limit_points(op, p, u, radii, 0.5):
                if relative_to_target:
                    snapped = np.clip(lim, op.target.lo, op.target.hi)
                    if np.linalg.norm(snapped - lim) > tol:
                        continue
                    lim = snapped
                    if not op.target.contains(lim) or _near_open_boundary(op.target, lim):
                        continue
                dist = min((np.linalg.norm(lim - v) for v in tx), default=math.inf)
                if dist > tol:
                    return CheckReport(False, f"{rate} sequence {how}: limit {np.round(lim, 8)} "
                                              f"not in T(x) (distance {dist:.3g})")
    return CheckReport(True)


def _ball_samples(source: Box, x: np.ndarray, r: float) -> list:
    pts = [x]
    for u in _directions(source.dim):
        for t in (1.0, 0.5, 0.25, 0.1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12):
            q = x + r * t * u
            if source.contains(q):
                pts.append(q)
    return pts


def check_local_bounded(op: SampledOperator, x, radius: float = 1e-2, escape: float = ESCAPE) -> CheckReport:
    p = as_point(x, op.source.dim)
    worst, where = 0.0, p
    for q in _ball_samples(op.source, p, radius):
        for v in op(q):
            n = float(np.linalg.norm(v))
            if n > worst:
                worst, where = n, q
    if worst > escape:
        return CheckReport(False, f"|y| = {worst:.3g} at x' = {np.round(where, 14)}")
    return CheckReport(True, f"max |y| = {worst:.3g} within radius {radius:g}")


def check_usc(op: SampledOperator, x, eps_list=(1e-1, 1e-2, 1e-3),
              radii=tuple(10.0 ** -np.arange(1, 9))) -> CheckReport:
    """Upper semicontinuity at x: every eps-dilation of T(x) (within the target)
    must contain T(x') for all sampled x' in some neighbourhood of x."""
    p = as_point(x, op.source.dim)
    tx = op(p)
    for eps in eps_list:
        ok_any = False
        last_leak = ""
        for r in radii:
            leak = None
            for q in _ball_samples(op.source, p, r):
                for v in op(q):
                    dist = min((np.linalg.norm(v - w) for w in tx), default=math.inf)
                    if dist >= eps:
                        leak = (q, v)
                        break
                if leak:
                    break
            if leak is None:
                ok_any = True
                break
            last_leak = f"eps={eps:g}: y={np.round(leak[1], 8)} in T(x') at x'={np.round(leak[0], 14)}"
        if not ok_any:
            return CheckReport(False, last_leak)
    return CheckReport(True)


def value_properties(op: SampledOperator, x) -> dict:
    vals = op(x)
    bounded = all(np.linalg.norm(v) <= ESCAPE for v in vals)
    # finite point sets are closed in the target
    return {"closed_valued": True, "bounded_valued": bounded, "compact_valued": bounded,
            "in_dom": bool(vals)}


@dataclass
class ImplicationReport:
    rows: list
    violations: list = field(default_factory=list)
    caveat: str = CAVEAT

    @property
    def consistent(self) -> bool:
        return not self.violations


def _empty_near(op: SampledOperator, p) -> bool:
    return all(not op(q) for q in _ball_samples(op.source, p, 1e-3))


def implication_matrix(op: SampledOperator, probe_points) -> ImplicationReport:
    """Evaluate the semicontinuity properties at each probe point and test the
    implications between them (usc + compact values <-> locally bounded +
    closed graph, usc + closed values -> osc, osc + locally bounded -> usc, ...)."""
    rows, bad = [], []
    for x in probe_points:
        p = as_point(x, op.source.dim)
        props = value_properties(op, p)
        props["osc"] = check_osc(op, p).holds
        props["graph_closed"] = check_osc(op, p, relative_to_target=False).holds
        props["usc"] = check_usc(op, p).holds
        props["lb"] = check_local_bounded(op, p).holds
        rows.append((p, props))

        def imp(name, lhs, rhs):
            if lhs and not rhs:
                bad.append((p, name))

        imp("usc & compact -> lb & graph closed", props["usc"] and props["compact_valued"],
            props["lb"] and props["graph_closed"])
        imp("lb & graph closed -> usc & compact", props["lb"] and props["graph_closed"],
            props["usc"] and props["compact_valued"])
        imp("usc & closed -> osc", props["usc"] and props["closed_valued"], props["osc"])
        imp("usc & bounded -> lb", props["usc"] and props["bounded_valued"] and props["in_dom"], props["lb"])
        # needs a closed target: T1 into (0,1] is osc and lb at 0 but not usc
        imp("osc & lb -> usc", props["osc"] and props["lb"] and op.target.is_closed, props["usc"])
        imp("graph closed -> osc", props["graph_closed"], props["osc"])
        imp("osc -> closed values", props["osc"], props["closed_valued"])
        if not props["in_dom"]:
            imp("outside dom: usc <-> empty nearby", props["usc"], _empty_near(op, p))
            imp("outside dom: empty nearby -> usc", _empty_near(op, p), props["usc"])
    return ImplicationReport(rows, bad)


# ------------------------------------------------------------------ catalog

@dataclass
class CatalogEntry:
    op: SampledOperator
    points: list
    expected: dict


def _burg_prox_values(p):
    from .functions import make_function
    from .kernels import make_kernel
    from .left import left_prox

    k = make_kernel("burg")
    if not k.domain.contains_interior(p):
        return []
    return list(left_prox(k, make_function("zero", k.domain), 1.0, p).minimizers)


def operator_catalog() -> dict:
    """Operators with known verdicts, keyed by name."""
    unit = Box.interval(0.0, 1.0, "both")

    def t_osc(x):
        return [x] if x[0] > 0 else [np.array([0.5])]

    def recip(x):
        return [1.0 / x] if x[0] > 0 else [np.array([0.0])]

    def empty_left(x):
        return [] if x[0] < 1 else [np.array([0.0])]

    pos = Box.interval(0.0, math.inf)
    return {
        "osc_target_open": CatalogEntry(
            SampledOperator(unit, Box.interval(0.0, 1.0, "right"), t_osc, "T1 into (0,1]"),
            [0.0], {"osc": True, "usc": False, "compact_valued": True, "lb": True}),
        "osc_target_closed": CatalogEntry(
            SampledOperator(unit, unit, t_osc, "T2 into [0,1]"), [0.0], {"osc": False}),
        "recip_open_source": CatalogEntry(
            SampledOperator(Box.interval(0.0, 1.0), Box.real(1), recip, "1/x on (0,1)"),
            [0.1, 0.5, 0.9], {"lb": True, "usc": True, "osc": True}),
        "recip_half_open_source": CatalogEntry(
            SampledOperator(Box.interval(0.0, 1.0, "left"), Box.real(1), recip, "1/x on [0,1), {0} at 0"),
            [0.0], {"lb": False, "usc": False, "osc": True}),
        "burg_prox_extended": CatalogEntry(
            SampledOperator(Box.real(1), Box.real(1), _burg_prox_values, "burg prox of 0 on R"),
            [0.0], {"osc": False, "usc": False}),
        "burg_prox_restricted": CatalogEntry(
            SampledOperator(pos, pos, _burg_prox_values, "burg prox of 0 on (0,inf)"),
            [0.5, 2.0], {"osc": True, "usc": True}),
        "empty_near_point": CatalogEntry(
            SampledOperator(Box.real(1), Box.real(1), empty_left, "empty left of 1"),
            [0.5], {"usc": True, "osc": True}),
    }


def evaluate_entry(entry: CatalogEntry) -> list:
    """(point, property, expected, observed, witness) for every expected verdict."""
    out = []
    checks = {
        "osc": lambda p: check_osc(entry.op, p),
        "usc": lambda p: check_usc(entry.op, p),
        "lb": lambda p: check_local_bounded(entry.op, p),
    }
    for x in entry.points:
        p = as_point(x, entry.op.source.dim)
        props = value_properties(entry.op, p)
        for name, want in entry.expected.items():
            if name in checks:
                rep = checks[name](p)
                out.append((float(p[0]), name, want, rep.holds, rep.witness))
            else:
                out.append((float(p[0]), name, want, props[name], ""))
    return out
