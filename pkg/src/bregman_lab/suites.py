"""Verification suites behind ``bregman-lab verify``.

Each suite returns a list of ``Check`` records; ``format_report`` turns them
into stable text (fixed number formatting, fixed order) so two runs with the
same seed are byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bregman import dual_identity_check, gap_form, distance, three_point_residual
from .functions import make_function
from .kernels import make_kernel
from .left import (Envelope, change_dgf_left_check, env_conjugate_form, euclidean_form_check, left_env,
                   left_hull, left_prox, prox_bound_threshold)
from .phi import (PhiFn, fy_duality_table, phi_biconjugate, phi_conjugate, phi_conjugate_right,
                  random_instance)
from .right import (EpiComposition, change_dgf_right_check, epi_comp_lsc_check, right_env,
                    right_env_conjugate_form, right_euclidean_form_check, right_prox)
from .setvalued import evaluate_entry, implication_matrix, operator_catalog
from .smoothness import (astar_check, bcoco_check, parabola_indicator, parabola_triples, rel_smooth_check,
                         sample_interior, strict_convexity_probe, y_monotonicity_check)

SUITES = ("identities", "counterexamples", "phi", "setvalued", "smoothness")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""


def _fmt(v: float) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.3e}"


def _gap(a: float, b: float) -> float:
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    return abs(a - b)


def _residual_check(name: str, residuals, tol: float) -> Check:
    worst = max((abs(r) for r in residuals), default=0.0)
    return Check(name, worst <= tol, f"max residual {_fmt(worst)} (tol {tol:g}, n={len(residuals)})")


# ------------------------------------------------------------ identities

LEGENDRE_CLOSED_FORM = ("euclidean", "burg", "exp", "dragomir2d")


def _random_interior(k, n, rng) -> np.ndarray:
    dlo = np.asarray(k.domain.lo, dtype=float)
    lo = np.maximum(dlo, -3.0)
    hi = np.minimum(np.asarray(k.domain.hi, dtype=float), 3.0)
    pts = rng.uniform(lo, hi, size=(n, k.dim))
    return np.where(np.isfinite(dlo) & (pts - dlo < 0.05), dlo + 0.05, pts)


def identity_checks(seed: int = 0, n_pairs: int = 100, n_triples: int = 1000) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for name in LEGENDRE_CLOSED_FORM:
        k = make_kernel(name)
        xs, ys = _random_interior(k, n_pairs, rng), _random_interior(k, n_pairs, rng)
        res = []
        for x, y in zip(xs, ys):
            _, r = dual_identity_check(k, x, y)
            res.append(r / (1 + float(distance(k, x, y))))
        out.append(_residual_check(f"dual_identity[{name}]", res, 1e-9))

    for name in LEGENDRE_CLOSED_FORM:
        k = make_kernel(name)
        u, x, y = (_random_interior(k, n_triples, rng) for _ in range(3))
        tp = [three_point_residual(k, a, b, c) / (1 + float(distance(k, a, c)))
              for a, b, c in zip(u, x, y)]
        out.append(_residual_check(f"three_point[{name}]", tp, 1e-9))
        gf = [_gap(gap_form(k, a, c), distance(k, a, c)) / (1 + float(distance(k, a, c)))
              for a, c in zip(u, y)]
        out.append(_residual_check(f"gap_form[{name}]", gf, 1e-9))

    out.extend(conjugate_form_checks())
    out.extend(change_of_kernel_checks())
    out.extend(triconjugacy_checks(seed))
    return out


LEFT_CONJ_CASES = (("burg", "ln", 0.5, (0.5, 4.0)), ("exp", "id", 1.0, (0.5, 3.0)),
                   ("euclidean", "sqnorm", 0.5, (-3.0, 3.0)), ("exp", "square", 0.5, (-2.0, 2.0)),
                   ("piecewise_env_star", "square", 0.5, (-1.0, 3.0)))
RIGHT_CONJ_CASES = (("exp", "square", 0.5, (-2.0, 2.0)), ("burg", "id", 0.5, (0.5, 4.0)),
                    ("euclidean", "sqnorm", 0.5, (-3.0, 3.0)), ("piecewise_env_star", "recip", 0.1, (0.5, 3.0)))


def conjugate_form_checks(n_points: int = 20) -> list[Check]:
    out = []
    for kname, fname, lam, (lo, hi) in LEFT_CONJ_CASES:
        k = make_kernel(kname)
        f = make_function(fname, k.domain, "left")
        res = [_gap(env_conjugate_form(k, f, lam, y), lam * float(left_env(k, f, lam, y)))
               for y in np.linspace(lo, hi, n_points)]
        out.append(_residual_check(f"env_conjugate_form[{kname}/{fname}]", res, 1e-5))
    for kname, gname, lam, (lo, hi) in RIGHT_CONJ_CASES:
        k = make_kernel(kname)
        g = make_function(gname, k.domain, "right")
        res = [_gap(right_env_conjugate_form(k, g, lam, x), lam * float(right_env(k, g, lam, x)))
               for x in np.linspace(lo, hi, n_points)]
        out.append(_residual_check(f"right_env_conjugate_form[{kname}/{gname}]", res, 1e-5))
    return out


def _dgf_row(name: str, reports, tol: float) -> Check:
    worst = max(max(r.prox_gap, r.env_gap) for r in reports)
    ok = all(r.prox_lhs.nonempty == r.prox_rhs.nonempty for r in reports) and worst <= tol
    return Check(name, ok, f"max prox/env gap {_fmt(worst)} (tol {tol:g}, n={len(reports)})")


def change_of_kernel_checks(n_points: int = 8) -> list[Check]:
    out = []
    cases = (("burg", "ln", 0.5, (0.5, 4.0)), ("exp", "id", 0.5, (0.0, 2.0)))
    for kname, fname, lam, (lo, hi) in cases:
        k = make_kernel(kname)
        f = make_function(fname, k.domain, "left")
        ys = np.linspace(lo, hi, n_points)
        out.append(_dgf_row(f"change_dgf_left[{kname}/{fname}, psi=k]",
                            [change_dgf_left_check(k, k, f, lam, y) for y in ys], 1e-5))
        out.append(_dgf_row(f"euclidean_form_left[{kname}/{fname}]",
                            [euclidean_form_check(k, f, lam, y) for y in ys], 1e-5))
    for kname, gname, lam, (lo, hi) in (("exp", "square", 0.5, (-1.0, 2.0)),):
        k = make_kernel(kname)
        g = make_function(gname, k.domain, "right")
        xs = np.linspace(lo, hi, n_points)
        out.append(_dgf_row(f"change_dgf_right[{kname}/{gname}, psi=k]",
                            [change_dgf_right_check(k, k, g, lam, x) for x in xs], 1e-5))
        out.append(_dgf_row(f"euclidean_form_right[{kname}/{gname}]",
                            [right_euclidean_form_check(k, g, lam, x) for x in xs], 1e-5))
    return out


def triconjugacy_checks(seed: int = 0, n: int = 200) -> list[Check]:
    rng = np.random.default_rng(seed + 1)
    bad = 0
    for _ in range(n):
        c, f = random_instance(rng)
        conj = phi_conjugate(c, f)
        if phi_conjugate(c, phi_biconjugate(c, f)) != conj:
            bad += 1
    return [Check("phi_triconjugacy", bad == 0, f"{bad} of {n} random instances differ (exact)")]


# ------------------------------------------------------- counterexamples

def _hull_box_oracle(p: float, x: float) -> float:
    return 0.5 * (p * p - x * x + 2 * abs(p - x))


def counterexample_checks(seed: int = 0) -> list[Check]:
    del seed
    out = []

    # prox-boundedness threshold of ln under burg
    k = make_kernel("burg")
    rep = prox_bound_threshold(k, make_function("ln", k.domain), probe_y=1.0)
    ok = rep.threshold_low <= 1.0 <= rep.threshold_high and rep.width <= 2e-3
    out.append(Check("burg_ln_threshold", ok,
                     f"bracket [{rep.threshold_low:.6f}, {rep.threshold_high:.6f}]"))

    # exp kernel, f = id: prox ln(e^y - lam) where e^y > lam, empty otherwise, env -inf where e^y < lam
    k = make_kernel("exp")
    f = make_function("id", k.domain)
    errs, wrong = [], []
    for lam in (0.5, 1.0, 3.0):
        for y in (-1.0, 0.0, 1.0, 2.0):
            res = left_prox(k, f, lam, y)
            if math.exp(y) > lam:
                errs.append(abs(res.x - math.log(math.exp(y) - lam)) if res.nonempty else math.inf)
            elif res.nonempty or (math.exp(y) < lam and res.inf_value != -math.inf):
                wrong.append((lam, y))
    worst = max(errs)
    out.append(Check("exp_id_prox", worst <= 1e-6 and not wrong,
                     f"max prox error {_fmt(worst)}, wrong empty/-inf cases {len(wrong)}"))

    # boxed quadratic: hull of an indicator differs from f (no essential smoothness)
    k = make_kernel("boxed_quadratic")
    errs = []
    for p in (-0.5, 0.0, 0.3):
        f = make_function("indicator", k.domain, params=(p,))
        cache = Envelope(k, f, 1.0, "left", -1.0)
        for x in (-1.0, -0.6, 0.1, 0.7, 1.0):
            errs.append(_gap(left_hull(k, f, 1.0, x, cache), _hull_box_oracle(p, x)))
    worst = max(errs)
    out.append(Check("boxed_quadratic_hull", worst <= 1e-4, f"max error {_fmt(worst)} (tol 1e-4)"))

    # exp kernel: hull of the indicator of 0 is 1 - e^x on x <= 0 and +inf beyond
    k = make_kernel("exp")
    f = make_function("indicator", k.domain, params=(0.0,))
    cache = Envelope(k, f, 1.0, "left", -1.0)
    errs = [_gap(left_hull(k, f, 1.0, x, cache), 1 - math.exp(x)) for x in (-3.0, -1.0, -0.2, 0.0)]
    plus = [float(left_hull(k, f, 1.0, x, cache)) for x in (0.001, 0.5)]
    ok = max(errs) <= 1e-4 and all(v == math.inf for v in plus)
    out.append(Check("exp_indicator_hull", ok, f"max error {_fmt(max(errs))}, values right of 0: "
                                               f"{', '.join(_fmt(v) for v in plus)}"))

    # piecewise kernel with g = 1/y: right prox at 1 empty for lam >= 2, epi-composition not lsc at 1
    k = make_kernel("piecewise_env_star")
    g = make_function("recip", k.domain, "right")
    empty = [not right_prox(k, g, lam, 1.0).nonempty for lam in (2.0, 3.0)]
    res = right_prox(k, g, 0.1, 1.0)
    out.append(Check("env_star_prox_empty", all(empty) and res.nonempty,
                     f"empty at lambda 2, 3: {empty}; lambda 0.1 minimizer "
                     f"{_fmt(res.x) if res.nonempty else 'none'}"))
    epi = EpiComposition(k, g)
    left_part = np.linspace(-1.95, -0.05, 20)
    right_part = np.linspace(0.0, 0.95, 20)
    errs = [_gap(epi(t), 2 / (t + 2)) for t in left_part] + [_gap(epi(t), math.sqrt(1 - t)) for t in right_part]
    out.append(Check("env_star_epi_composition", max(errs) <= 1e-6, f"max error {_fmt(max(errs))}"))
    lsc = epi_comp_lsc_check(k, g, np.linspace(-1.5, 1.0, 11))
    suff = lsc.sufficient
    ok = lsc.violations == [1.0] and not any(suff.values())
    out.append(Check("env_star_lsc_violation", ok, f"violations at {lsc.violations}, sufficient conditions "
                                                   f"{sorted(k2 for k2, v in suff.items() if v)}"))

    # the role of the target set for osc
    cat = operator_catalog()
    rows = evaluate_entry(cat["osc_target_open"]) + evaluate_entry(cat["osc_target_closed"])
    ok = all(want == got for _, _, want, got, _ in rows)
    out.append(Check("osc_target_set", ok, "; ".join(f"{n}={got}" for _, n, _, got, _ in rows)))
    return out


# -------------------------------------------------------------------- phi

def phi_checks(seed: int = 0, n_instances: int = 2000) -> list[Check]:
    rng = np.random.default_rng(seed)
    counts = {"young_fenchel": 0, "biconj_below": 0, "triconjugacy": 0, "fy_agreement": 0}
    for _ in range(n_instances):
        c, f = random_instance(rng)
        conj = phi_conjugate(c, f)
        bic = phi_conjugate_right(c, conj)
        fin = f.finite
        lhs = f.values[fin][:, None] + conj.values[None, :]
        if np.any(lhs < c.phi[fin, :]):
            counts["young_fenchel"] += 1
        if np.any(bic.values > f.values):
            counts["biconj_below"] += 1
        if phi_conjugate(c, bic) != conj:
            counts["triconjugacy"] += 1
        a, b, cc, d = fy_duality_table(c, f)
        if not (np.array_equal(a, b) and np.array_equal(a, cc) and np.array_equal(a, d)):
            counts["fy_agreement"] += 1
    out = [Check(f"phi_{name}", bad == 0, f"{bad} failures in {n_instances} instances (exact)")
           for name, bad in counts.items()]
    out.extend(coupling_checks())
    return out


def _grid_error_bound(k, f, lam, y, grid, side) -> float:
    """Upper bound on env_grid - env from local difference quotients of the objective."""
    if side == "left":
        obj = f.values(grid.reshape(-1, 1)) + k.divergence_many(grid.reshape(-1, 1), np.array([[y]])) / lam
        center = left_prox(k, f, lam, y).x
    else:
        obj = f.values(grid.reshape(-1, 1)) + k.divergence_many(np.array([[y]]), grid.reshape(-1, 1)) / lam
        center = right_prox(k, f, lam, y).x
    i = int(np.clip(np.searchsorted(grid, center), 2, len(grid) - 2))
    sl = slice(i - 2, i + 2)
    q = np.abs(np.diff(obj[sl]) / np.diff(grid[sl]))
    return float(q.max() * np.max(np.diff(grid[sl])))


COUPLING_CASES = (("burg", "ln", 0.5, (0.2, 6.0), (0.5, 3.0)),
                  ("euclidean", "sqnorm", 0.5, (-4.0, 4.0), (-2.0, 2.0)))


def coupling_checks(n_grid: int = 2001, n_points: int = 7) -> list[Check]:
    """Grid conjugates under Phi = -D/lam against the continuous envelopes."""
    from .phi import bregman_coupling

    out = []
    for kname, fname, lam, (glo, ghi), (plo, phi_) in COUPLING_CASES:
        k = make_kernel(kname)
        grid = np.linspace(glo, ghi, n_grid)
        probes = np.linspace(plo, phi_, n_points)
        c = bregman_coupling(k, lam, grid, probes)
        f = make_function(fname, k.domain, "left")
        fl = PhiFn(f.values(grid.reshape(-1, 1)), "X")
        env_grid = -phi_conjugate(c, fl).values
        ok, worst = True, 0.0
        for y, eg in zip(probes, env_grid):
            err = eg - float(left_env(k, f, lam, y))
            bound = _grid_error_bound(k, f, lam, y, grid, "left")
            ok = ok and -1e-9 <= err <= bound + 1e-9
            worst = max(worst, abs(err))
        out.append(Check(f"coupling_left_env[{kname}/{fname}]", ok,
                         f"max |grid - continuous| {_fmt(worst)} within local spacing bound"))

        c2 = bregman_coupling(k, lam, probes, grid[k.domain.interior_many(grid.reshape(-1, 1))])
        ys = c2.y_points[:, 0]
        g = make_function(fname, k.domain, "right")
        gr = PhiFn(g.values(ys.reshape(-1, 1)), "Y")
        env_star_grid = -phi_conjugate_right(c2, gr).values
        ok, worst = True, 0.0
        for x, eg in zip(probes, env_star_grid):
            err = eg - float(right_env(k, g, lam, x))
            bound = _grid_error_bound(k, g, lam, x, ys, "right")
            ok = ok and -1e-9 <= err <= bound + 1e-9
            worst = max(worst, abs(err))
        out.append(Check(f"coupling_right_env[{kname}/{fname}]", ok,
                         f"max |grid - continuous| {_fmt(worst)} within local spacing bound"))
    return out


# -------------------------------------------------------------- setvalued

def setvalued_checks(seed: int = 0) -> list[Check]:
    del seed
    out = []
    for name, entry in operator_catalog().items():
        rows = evaluate_entry(entry)
        bad = [(x, prop) for x, prop, want, got, _ in rows if want != got]
        out.append(Check(f"catalog[{name}]", not bad,
                         "all verdicts reproduced" if not bad else f"mismatch at {bad}"))
        imp = implication_matrix(entry.op, entry.points)
        out.append(Check(f"implications[{name}]", imp.consistent,
                         "no arrow violated" if imp.consistent else
                         "; ".join(f"{n} at {float(p[0]):g}" for p, n in imp.violations)))
    return out


# ------------------------------------------------------------- smoothness

def smoothness_checks(seed: int = 0) -> list[Check]:
    out = []
    k = make_kernel("dragomir2d")
    f = make_function("frac", k.domain)
    pts = sample_interior(k, 20, seed)
    rs = rel_smooth_check(k, f, pts)
    out.append(Check("dragomir2d_rel_smooth", rs.consistent, f"max violation {_fmt(rs.max_violation)}"))
    a = sample_interior(k, 200, seed + 1)
    b = sample_interior(k, 200, seed + 2)
    bc = bcoco_check(k, f, list(zip(a, b)))
    out.append(Check("dragomir2d_bcoco", bc.consistent, f"max violation {_fmt(bc.max_violation)}"))
    ac = astar_check(k, parabola_indicator(), parabola_triples())
    out.append(Check("dragomir2d_astar_lattice", ac.consistent,
                     f"max violation {_fmt(ac.max_violation)} over {ac.checked_pairs} triples"))
    ym = y_monotonicity_check()
    out.append(Check("dragomir2d_y_monotone", ym.consistent, f"max Y - t {_fmt(ym.max_violation)}"))
    gap = strict_convexity_probe(parabola_indicator(), [0.0, -5.0], [0.0, -6.0])
    out.append(Check("indicator_D_not_strictly_convex", gap == 0.0, f"midpoint gap {_fmt(gap)}"))

    ke = make_kernel("euclidean")
    sq = make_function("sqnorm", ke.domain)
    pts = sample_interior(ke, 10, seed)
    rs = rel_smooth_check(ke, sq, pts)
    bc = bcoco_check(ke, sq, [(x, y) for x in pts for y in pts if x[0] != y[0]])
    ok = not rs.consistent and not bc.consistent and bool(bc.witnesses)
    wit = bc.witnesses[0][0] if bc.witnesses else None
    out.append(Check("euclidean_sqnorm_not_smooth", ok,
                     f"rel_smooth {_fmt(rs.max_violation)}, bcoco {_fmt(bc.max_violation)}, witness "
                     + (f"({wit[0][0]:.4f}, {wit[1][0]:.4f})" if wit is not None else "none")))
    half = make_function("half_sqnorm", ke.domain)
    bc = bcoco_check(ke, half, [(x, y) for x in pts for y in pts if x[0] != y[0]])
    out.append(Check("euclidean_half_sqnorm_tight", abs(bc.max_violation) <= 1e-9,
                     f"max |residual| {_fmt(abs(bc.max_violation))}"))
    return out


RUNNERS = {
    "identities": identity_checks,
    "counterexamples": counterexample_checks,
    "phi": phi_checks,
    "setvalued": setvalued_checks,
    "smoothness": smoothness_checks,
}


def run_suite(name: str, seed: int = 0) -> list[tuple[str, list[Check]]]:
    if name == "all":
        names = SUITES
    elif name in RUNNERS:
        names = (name,)
    else:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    return [(n, RUNNERS[n](seed)) for n in names]


def format_report(results, seed: int) -> str:
    lines = [f"seed {seed}"]
    total = failed = 0
    for suite, checks in results:
        lines.append(f"[{suite}]")
        for c in checks:
            total += 1
            failed += not c.passed
            lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    lines.append(f"{total - failed}/{total} checks passed")
    return "\n".join(lines) + "\n"


def all_passed(results) -> bool:
    return all(c.passed for _, checks in results for c in checks)
