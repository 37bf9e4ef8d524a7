"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a PASS/FAIL line in ``RESULTS``; the lines are printed at
the end of the pytest run (see conftest.py) and by ``python3 tests/test_acceptance.py``.
"""

import contextlib
import io
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from bregman_lab.bregman import distance, dual_distance, gap_form  # noqa: E402
from bregman_lab.cli import main  # noqa: E402
from bregman_lab.functions import make_function  # noqa: E402
from bregman_lab.kernels import make_kernel  # noqa: E402
from bregman_lab.left import (Envelope, change_dgf_left_check, env_conjugate_form, euclidean_form_check,  # noqa: E402
                              left_env, left_hull, left_prox, prox_bound_threshold)
from bregman_lab.phi import fy_duality_check, fy_duality_table, phi_conjugate, phi_conjugate_right, random_instance  # noqa: E402
from bregman_lab.right import (EpiComposition, change_dgf_right_check, epi_comp_lsc_check, right_env,  # noqa: E402
                               right_env_conjugate_form, right_euclidean_form_check, right_prox)
from bregman_lab.setvalued import evaluate_entry, implication_matrix, operator_catalog  # noqa: E402
from bregman_lab.smoothness import (astar_check, bcoco_check, parabola_indicator, parabola_triples,  # noqa: E402
                                    rel_smooth_check, sample_interior, strict_convexity_probe,
                                    y_monotonicity_check)
from bregman_lab.suites import LEFT_CONJ_CASES, RIGHT_CONJ_CASES, coupling_checks  # noqa: E402
from oracles import golden, grid_argmin  # noqa: E402


class Results:
    def __init__(self):
        self.rows = {}

    def record(self, key, passed, detail):
        self.rows[key] = (bool(passed), detail)
        return bool(passed)

    def __bool__(self):
        return bool(self.rows)

    def lines(self):
        return [f"{'PASS' if ok else 'FAIL'} {key}: {detail}" for key, (ok, detail) in sorted(self.rows.items())]


RESULTS = Results()


def gap(a, b):
    a, b = float(a), float(b)
    return 0.0 if a == b else abs(a - b)


def kstar_exp(s):
    return s * math.log(s) - s


# ------------------------------------------------------------------ 1

def test_1a_burg_ln():
    k = make_kernel("burg")
    f = make_function("ln", k.domain)
    worst_closed = worst_oracle = 0.0
    for lam in (0.1, 0.5, 0.9):
        for y in (0.5, 1.0, 2.0, 5.0):
            x = left_prox(k, f, lam, y).x
            # independent golden-section oracle on the hand-written objective
            xo, _ = golden(lambda t: math.log(t) + (t / y - math.log(t / y) - 1) / lam, 1e-9, 10 * y)
            worst_closed = max(worst_closed, abs(x - (1 - lam) * y))
            worst_oracle = max(worst_oracle, abs(xo - (1 - lam) * y))
    rep = prox_bound_threshold(k, f, probe_y=1.0)
    ok_thr = rep.threshold_low <= 1.0 <= rep.threshold_high and rep.width <= 2e-3
    ok = worst_closed <= 1e-6 and worst_oracle <= 1e-6 and ok_thr
    assert RESULTS.record("1a burg/ln prox and threshold", ok,
                          f"max prox error {worst_closed:.2e}, oracle {worst_oracle:.2e}, bracket "
                          f"[{rep.threshold_low:.6f}, {rep.threshold_high:.6f}] width {rep.width:.2e}")


def test_1b_exp_id():
    k = make_kernel("exp")
    f = make_function("id", k.domain)
    prox_err = env_err = 0.0
    wrong = []
    for lam in (0.5, 1.0, 3.0):
        for y in (-1.0, -0.2, 0.3, 1.0, 2.0):
            res = left_prox(k, f, lam, y)
            ey = math.exp(y)
            if ey > lam:
                if not res.nonempty:
                    wrong.append((lam, y, "empty"))
                    continue
                prox_err = max(prox_err, abs(res.x - math.log(ey - lam)))
                want = (kstar_exp(ey) - kstar_exp(ey - lam)) / lam
                env_err = max(env_err, gap(left_env(k, f, lam, y), want))
            else:
                if res.nonempty or float(res.inf_value) != -math.inf:
                    wrong.append((lam, y, "not -inf"))
    ok = prox_err <= 1e-6 and env_err <= 1e-6 and not wrong
    assert RESULTS.record("1b exp/id prox, env, -inf", ok,
                          f"prox error {prox_err:.2e}, env error {env_err:.2e}, wrong cases {wrong}")


def test_1c_boxed_quadratic_hull():
    k = make_kernel("boxed_quadratic")
    lam = 1.0
    worst = 0.0
    for p in (-0.5, 0.0, 0.3):
        f = make_function("indicator", k.domain, params=(p,))
        cache = Envelope(k, f, lam, "left", -1.0)
        for x in np.linspace(-1.0, 1.0, 50):
            want = 0.5 * (p * p - x * x + 2 * abs(p - x))
            worst = max(worst, gap(lam * float(left_hull(k, f, lam, x, cache)), want))
    assert RESULTS.record("1c boxed_quadratic hull", worst <= 1e-4, f"max error {worst:.2e} over 150 points")


def test_1d_exp_indicator_hull():
    k = make_kernel("exp")
    f = make_function("indicator", k.domain, params=(0.0,))
    worst, finite_right = 0.0, []
    for lam in (1.0, 0.5):
        cache = Envelope(k, f, lam, "left", -1.0)
        for x in np.linspace(-4.0, 0.0, 12):
            worst = max(worst, gap(lam * float(left_hull(k, f, lam, x, cache)), 1 - math.exp(x)))
        finite_right += [x for x in (1e-3, 0.3, 2.0) if float(left_hull(k, f, lam, x, cache)) != math.inf]
    ok = worst <= 1e-4 and not finite_right
    assert RESULTS.record("1d exp hull of indicator", ok,
                          f"max error on x<=0 {worst:.2e}, finite values for x>0 at {finite_right}")


def test_1e_env_star():
    k = make_kernel("piecewise_env_star")
    g = make_function("recip", k.domain, "right")
    empty = {lam: not right_prox(k, g, lam, 1.0).nonempty for lam in (2.0, 3.0)}

    def obj(y, lam=0.1):
        d = np.where(y >= 1, (1 - y) ** 2 / y ** 2, (1 - y) ** 2)
        return np.where(y > 0, 1 / np.where(y > 0, y, 1.0) + d / lam, np.inf)

    xo, _ = grid_argmin(obj, 0.05, 20.0)
    res = right_prox(k, g, 0.1, 1.0)
    prox_err = abs(res.x - xo) if res.nonempty else math.inf

    epi = EpiComposition(k, g)
    errs = [gap(epi(t), 2 / (t + 2)) for t in np.linspace(-1.95, -0.05, 20)]
    errs += [gap(epi(t), math.sqrt(1 - t)) for t in np.linspace(0.0, 0.95, 20)]
    lsc = epi_comp_lsc_check(k, g, np.linspace(-1.5, 1.0, 11))
    ok = all(empty.values()) and prox_err <= 1e-4 and max(errs) <= 1e-6 and lsc.violations == [1.0]
    assert RESULTS.record("1e env* example", ok,
                          f"empty at lambda 2, 3: {list(empty.values())}; lambda 0.1 prox vs grid "
                          f"{prox_err:.2e}; epi error {max(errs):.2e}; lsc violations {lsc.violations}")


# ------------------------------------------------------------------ 2

def interior(k, n, rng):
    lo = np.maximum(np.asarray(k.domain.lo, dtype=float), -3.0)
    hi = np.minimum(np.asarray(k.domain.hi, dtype=float), 3.0)
    pts = rng.uniform(lo, hi, size=(n, k.dim))
    return pts[[k.domain.contains_interior(p) for p in pts]]


CLOSED_D = {
    "euclidean": lambda x, y: float(np.sum((x - y) ** 2)) / 2,
    "burg": lambda x, y: float(x[0] / y[0] - math.log(x[0] / y[0]) - 1),
    "exp": lambda x, y: float(math.exp(x[0]) - math.exp(y[0]) * (1 + x[0] - y[0])),
}


def test_2a_dual_identity():
    rng = np.random.default_rng(0)
    worst, worst_closed, n = 0.0, 0.0, {}
    for name in ("euclidean", "burg", "exp", "dragomir2d"):
        k = make_kernel(name)
        xs, ys = interior(k, 150, rng)[:100], interior(k, 150, rng)[:100]
        n[name] = len(xs)
        for x, y in zip(xs, ys):
            d = float(distance(k, x, y))
            ds = float(dual_distance(k, k.grad(y), k.grad(x)))
            worst = max(worst, abs(d - ds) / (1 + d))
            if name in CLOSED_D:
                worst_closed = max(worst_closed, abs(d - CLOSED_D[name](x, y)) / (1 + d))
    ok = worst <= 1e-9 and worst_closed <= 1e-9 and all(v == 100 for v in n.values())
    assert RESULTS.record("2a dual identity", ok,
                          f"max relative residual {worst:.2e}, vs hand formulas {worst_closed:.2e}, pairs {n}")


def test_2b_conjugate_forms():
    worst = 0.0
    for kname, fname, lam, (lo, hi) in LEFT_CONJ_CASES:
        k = make_kernel(kname)
        f = make_function(fname, k.domain, "left")
        for y in np.linspace(lo, hi, 20):
            worst = max(worst, gap(env_conjugate_form(k, f, lam, y), lam * float(left_env(k, f, lam, y))))
    for kname, gname, lam, (lo, hi) in RIGHT_CONJ_CASES:
        k = make_kernel(kname)
        g = make_function(gname, k.domain, "right")
        for x in np.linspace(lo, hi, 20):
            worst = max(worst, gap(right_env_conjugate_form(k, g, lam, x), lam * float(right_env(k, g, lam, x))))
    n = len(LEFT_CONJ_CASES) + len(RIGHT_CONJ_CASES)
    assert RESULTS.record("2b conjugate forms", worst <= 1e-5, f"max gap {worst:.2e} over {n} instances")


def test_2c_change_of_kernel():
    reports = []
    for kname, fname, lam, ys in (("burg", "ln", 0.5, np.linspace(0.5, 4.0, 8)),
                                  ("exp", "id", 0.5, np.linspace(0.0, 2.0, 8))):
        k = make_kernel(kname)
        f = make_function(fname, k.domain, "left")
        for y in ys:
            reports.append(change_dgf_left_check(k, k, f, lam, y))
            reports.append(euclidean_form_check(k, f, lam, y))
    k = make_kernel("exp")
    g = make_function("square", k.domain, "right")
    for x in np.linspace(-1.0, 2.0, 8):
        reports.append(change_dgf_right_check(k, k, g, lam, x))
        reports.append(right_euclidean_form_check(k, g, lam, x))
    worst = max(max(r.prox_gap, r.env_gap) for r in reports)
    same = all(r.prox_lhs.nonempty == r.prox_rhs.nonempty for r in reports)
    ok = worst <= 1e-5 and same
    assert RESULTS.record("2c change of kernel (psi = kappa, j)", ok,
                          f"max prox/env gap {worst:.2e} over {len(reports)} rows, emptiness agrees {same}")


def test_2d_three_point_and_gap_form():
    rng = np.random.default_rng(1)
    worst_tp = worst_gf = 0.0
    for name in ("euclidean", "burg", "exp", "dragomir2d"):
        k = make_kernel(name)
        u, x, y = (interior(k, 1600, rng)[:1000] for _ in range(3))
        for a, b, c in zip(u, x, y):
            dac = float(distance(k, a, c))
            # D(u, y) = D(u, x) + D(x, y) + <grad k(x) - grad k(y), u - x>
            rhs = float(distance(k, a, b)) + float(distance(k, b, c)) + float(np.dot(k.grad(b) - k.grad(c), a - b))
            worst_tp = max(worst_tp, abs(dac - rhs) / (1 + dac))
            worst_gf = max(worst_gf, gap(gap_form(k, a, c), dac) / (1 + dac))
    ok = worst_tp <= 1e-9 and worst_gf <= 1e-9
    assert RESULTS.record("2d three-point and gap form", ok,
                          f"three-point {worst_tp:.2e}, gap_form {worst_gf:.2e} on 1000 triples per kernel")


# ------------------------------------------------------------------ 3

def test_3_phi_conjugacy_exact():
    rng = np.random.default_rng(0)
    bad = {"young_fenchel": 0, "biconj_below": 0, "triconjugacy": 0, "fy_agreement": 0, "fy_check": 0}
    n = 10_000
    for it in range(n):
        c, f = random_instance(rng)
        conj = phi_conjugate(c, f)
        bic = phi_conjugate_right(c, conj)
        fin = f.finite
        bad["young_fenchel"] += bool(np.any(f.values[fin][:, None] + conj.values[None, :] < c.phi[fin, :]))
        bad["biconj_below"] += bool(np.any(bic.values > f.values))
        bad["triconjugacy"] += phi_conjugate(c, bic) != conj
        table = fy_duality_table(c, f)
        bad["fy_agreement"] += not all(np.array_equal(table[0], t) for t in table[1:])
        if it % 50 == 0:
            # the scalar per-cell check agrees with the vectorized table
            for i in range(c.shape[0]):
                for j in range(c.shape[1]):
                    rec = fy_duality_check(c, f, i, j)
                    bad["fy_check"] += not rec.agree or rec.a != bool(table[0][i, j])
    ok = not any(bad.values())
    assert RESULTS.record("3 exact phi-conjugacy", ok, f"failures over {n} instances: {bad}")


# ------------------------------------------------------------------ 4

def test_4_bregman_coupling():
    checks = coupling_checks()
    ok = all(c.passed for c in checks) and len(checks) == 4
    assert RESULTS.record("4 bregman coupling", ok, "; ".join(f"{c.name} {c.detail}" for c in checks))


# ------------------------------------------------------------------ 5

def test_5_setvalued_catalog():
    cat = operator_catalog()
    mismatches, violated = [], []
    for name, entry in cat.items():
        mismatches += [(name, x, prop) for x, prop, want, got, _ in evaluate_entry(entry) if want != got]
        if not implication_matrix(entry.op, entry.points).consistent:
            violated.append(name)
    required = {"osc_target_open", "osc_target_closed", "recip_open_source", "recip_half_open_source",
                "burg_prox_extended", "burg_prox_restricted"}
    ok = not mismatches and not violated and required <= set(cat)
    assert RESULTS.record("5 set-valued catalog", ok,
                          f"{len(cat)} operators, mismatches {mismatches}, implication violations {violated}")


# ------------------------------------------------------------------ 6

def test_6_smoothness():
    k = make_kernel("dragomir2d")
    f = make_function("frac", k.domain)
    rs = rel_smooth_check(k, f, sample_interior(k, 20, 0))
    bc = bcoco_check(k, f, list(zip(sample_interior(k, 200, 1), sample_interior(k, 200, 2))))
    ac = astar_check(k, parabola_indicator(), parabola_triples())
    ym = y_monotonicity_check()
    resid = {"rel_smooth": rs.max_violation, "bcoco": bc.max_violation, "astar": ac.max_violation,
             "y_monotone": ym.max_violation}
    gap_d = strict_convexity_probe(parabola_indicator(), [0.0, -5.0], [0.0, -6.0])

    ke = make_kernel("euclidean")
    sq = make_function("sqnorm", ke.domain)
    pts = sample_interior(ke, 10, 0)
    rs_e = rel_smooth_check(ke, sq, pts)
    bc_e = bcoco_check(ke, sq, [(x, y) for x in pts for y in pts if x[0] != y[0]])
    ok = (all(v <= 1e-7 for v in resid.values()) and gap_d == 0.0 and not rs_e.consistent
          and not bc_e.consistent and bool(bc_e.witnesses) and bool(rs_e.witnesses))
    assert RESULTS.record("6 smoothness", ok,
                          "max violations " + ", ".join(f"{n} {v:.2e}" for n, v in resid.items())
                          + f"; indicator midpoint gap {gap_d}; euclidean sqnorm fails with "
                            f"{len(bc_e.witnesses)} bcoco witnesses")


# ------------------------------------------------------------------ 7

def verify_all():
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(["verify", "all", "--seed", "0"])
    return code, buf.getvalue()


def test_7_determinism():
    c1, r1 = verify_all()
    c2, r2 = verify_all()
    ok = c1 == 0 and c2 == 0 and r1 == r2
    assert RESULTS.record("7 determinism", ok,
                          f"exit codes {c1}, {c2}; reports identical {r1 == r2}; {r1.splitlines()[-1]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
