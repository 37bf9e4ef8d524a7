"""Command line: evaluate operators on grids, run verification suites, scan prox thresholds.

Exit codes: 0 success, 1 suite failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .functions import parse_function
from .kernels import KERNEL_NAMES, make_kernel
from .left import Envelope, left_hull, left_prox, prox_bound_threshold
from .right import right_env, right_prox_bound_threshold
from .suites import SUITES, all_passed, format_report, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
TOL_KEYS = ("prox", "rel_width")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    kernel_name: str
    function_name: str
    lam: float
    grid_spec: list
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    output_path: str | None = None

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise UsageError(f"lambda must be positive and finite, got {self.lam}")
        for lo, hi, n in self.grid_spec:
            if n < 2:
                raise UsageError(f"grid needs at least 2 points per axis, got {n}")
            if not lo < hi:
                raise UsageError(f"grid needs lo < hi, got {lo}:{hi}")


def parse_grid(spec: str) -> list:
    axes = []
    for part in spec.split(","):
        bits = part.split(":")
        if len(bits) != 3:
            raise UsageError(f"grid axis {part!r} is not lo:hi:n")
        try:
            axes.append((float(bits[0]), float(bits[1]), int(bits[2])))
        except ValueError as exc:
            raise UsageError(f"bad grid axis {part!r}: {exc}") from None
    return axes


def parse_tols(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        if not sep or key not in TOL_KEYS:
            raise UsageError(f"--tol expects key=val with key in {', '.join(TOL_KEYS)}, got {item!r}")
        try:
            out[key] = float(val)
        except ValueError:
            raise UsageError(f"--tol {key}: {val!r} is not a number") from None
    return out


def grid_points(axes) -> np.ndarray:
    lines = [np.linspace(lo, hi, n) for lo, hi, n in axes]
    mesh = np.meshgrid(*lines, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _num(v) -> str:
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if math.isnan(v):
        return "nan"
    return repr(v)


def _point(p) -> str:
    return " ".join(_num(c) for c in np.atleast_1d(p))


def _workers() -> int:
    raw = os.environ.get("BREGMAN_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _kernel(name: str, dim: int = 1):
    if name not in KERNEL_NAMES:
        raise UsageError(f"unknown kernel {name!r}; choose from {', '.join(KERNEL_NAMES)}")
    # the euclidean kernel takes its dimension from the grid or probe
    return make_kernel(name, [dim]) if name == "euclidean" else make_kernel(name)


def _functions(k, spec: str):
    try:
        return parse_function(spec, k.domain, "left"), parse_function(spec, k.domain, "right")
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def eval_rows(cfg: RunConfig) -> tuple[list, list]:
    k = _kernel(cfg.kernel_name, len(cfg.grid_spec))
    if len(cfg.grid_spec) != k.dim:
        raise UsageError(f"kernel {k.name} is {k.dim}-dimensional, grid has {len(cfg.grid_spec)} axes")
    f, g = _functions(k, cfg.function_name)
    tol = cfg.tolerances.get("prox")
    pts = grid_points(cfg.grid_spec)
    inner = Envelope(k, f, cfg.lam, "left", -1.0)

    def row(p):
        env_l = env_r = hull = math.nan
        prox, status = "", ""
        try:
            if k.domain.contains_interior(p):
                res = left_prox(k, f, cfg.lam, p, tol=tol, seed=cfg.seed)
                env_l = float(res.inf_value)
                prox = ";".join(_point(m) for m in res.minimizers)
                status = res.status.value
            else:
                status = "outside_int_X"
            if k.domain.contains(p):
                env_r = float(right_env(k, g, cfg.lam, p, tol=tol, seed=cfg.seed))
                if k.dim == 1:
                    # nested multistart searches make the hull impractical beyond 1-D
                    hull = float(left_hull(k, f, cfg.lam, p, cache=inner))
        except (ValueError, ArithmeticError) as exc:
            status = f"error: {exc}".replace(",", ";")
        return [_num(c) for c in p] + [_num(env_l), _num(env_r), _num(hull), prox, status]

    with ThreadPoolExecutor(max_workers=_workers()) as pool:
        rows = list(pool.map(row, pts))
    head = ["point"] if k.dim == 1 else [f"point_{i + 1}" for i in range(k.dim)]
    return head + ["env_left", "env_right", "hull_left", "prox_set", "status"], rows


def _write_csv(header, rows, path) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def cmd_eval(args) -> int:
    cfg = RunConfig(args.kernel, args.fn, args.lam, parse_grid(args.grid), args.seed,
                    parse_tols(args.tol), args.out)
    header, rows = eval_rows(cfg)
    text = _write_csv(header, rows, cfg.output_path)
    if not cfg.output_path:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.suite not in SUITES + ("all",):
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES + ('all',))}")
    results = run_suite(args.suite, args.seed)
    text = format_report(results, args.seed)
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK if all_passed(results) else EXIT_FAIL


def cmd_scan_threshold(args) -> int:
    k = _kernel(args.kernel, 1 if args.probe is None else len(args.probe.split(",")))
    f, g = _functions(k, args.fn)
    if not (args.lambda_max > 0 and math.isfinite(args.lambda_max)):
        raise UsageError("--lambda-max must be positive")
    tols = parse_tols(args.tol)
    probe = None if args.probe is None else np.array([float(t) for t in args.probe.split(",")])
    if probe is not None and (probe.size != k.dim or not k.domain.contains_interior(probe)):
        raise UsageError(f"probe {args.probe} is not an interior point of dom {k.name}")
    width = tols.get("rel_width", 1e-3)
    if args.side == "left":
        rep = prox_bound_threshold(k, f, probe, args.lambda_max, width)
    else:
        rep = right_prox_bound_threshold(k, g, probe, args.lambda_max, width)
    rows = [[_num(lam), cls] for lam, cls in rep.trace]
    text = _write_csv(["lambda", "classification"], rows, args.out)
    if not args.out:
        sys.stdout.write(text)
    if rep.threshold_low == rep.threshold_high == args.lambda_max:
        summary = f"no upper bound found <= lambda_max = {_num(args.lambda_max)}"
    else:
        summary = f"threshold bracket [{_num(rep.threshold_low)}, {_num(rep.threshold_high)}]"
    sys.stdout.write(f"{summary} ({rep.method}; probe {_point(rep.probe_point)})\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bregman-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_lambda=True):
        sp.add_argument("--kernel", required=True, help=f"one of {', '.join(KERNEL_NAMES)}")
        sp.add_argument("--fn", required=True, help="catalog function, e.g. ln or linear:1,2")
        if need_lambda:
            sp.add_argument("--lambda", dest="lam", type=float, required=True)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None, help="CSV output path (default stdout)")
        sp.add_argument("--tol", action="append", metavar="KEY=VAL", help=f"keys: {', '.join(TOL_KEYS)}")

    ev = sub.add_parser("eval", help="envelopes, hull and prox over a grid, as CSV")
    common(ev)
    ev.add_argument("--grid", required=True, help="lo:hi:n[,lo:hi:n]")
    ev.set_defaults(run=cmd_eval)

    ve = sub.add_parser("verify", help="run a verification suite")
    ve.add_argument("suite", help=f"one of {', '.join(SUITES + ('all',))}")
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--out", default=None, help="also write the report here")
    ve.set_defaults(run=cmd_verify)

    sc = sub.add_parser("scan-threshold", help="bisect the prox-boundedness threshold")
    common(sc, need_lambda=False)
    sc.add_argument("--side", choices=("left", "right"), default="left")
    sc.add_argument("--probe", default=None, help="probe point, comma separated")
    sc.add_argument("--lambda-max", type=float, default=10.0)
    sc.set_defaults(run=cmd_scan_threshold)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except UsageError as exc:
        sys.stderr.write(f"bregman-lab: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
