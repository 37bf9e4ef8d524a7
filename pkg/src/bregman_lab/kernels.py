"""Distance-generating kernels, their conjugates, and structural certification."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import (MARGIN_FLOOR, Box, ObjectiveFn, as_batch, as_point, numeric_conjugate)

FAR = 1e16


@dataclass(frozen=True)
class KernelFlags:
    legendre: bool
    one_coercive: bool
    full_domain: bool
    essentially_smooth: bool


class Kernel:
    """A convex kernel on a box X, differentiable on int X.

    Callables act on (m, dim) arrays. ``value`` may assume its input lies in
    X, ``grad`` that it lies in int X; masking happens here. ``divergence``
    is an optional numerically stable Bregman distance for interior pairs.
    """

    def __init__(self, name: str, domain: Box, conj_domain: Box, value: Callable, grad: Callable,
                 flags: KernelFlags, conj_value: Callable | None = None,
                 conj_grad: Callable | None = None, divergence: Callable | None = None,
                 breakpoints: tuple = (), params: tuple = ()):
        self.name = name
        self.domain = domain
        self.conj_domain = conj_domain
        self._value = value
        self._grad = grad
        self._conj_value = conj_value
        self._conj_grad = conj_grad
        self._divergence = divergence
        self.flags = flags
        self.breakpoints = tuple(breakpoints)
        self.params = tuple(params)

    def __repr__(self):
        return f"Kernel({self.name}, X={self.domain})"

    @property
    def dim(self) -> int:
        return self.domain.dim

    # values -----------------------------------------------------------
    def value_many(self, xs) -> np.ndarray:
        a = as_batch(xs, self.dim)
        ok = self.domain.contains_many(a)
        out = np.full(a.shape[0], math.inf)
        if ok.any():
            with np.errstate(all="ignore"):
                out[ok] = self._value(a[ok])
        return out

    def value(self, x) -> float:
        return float(self.value_many(as_point(x, self.dim).reshape(1, -1))[0])

    def grad_many(self, ys) -> np.ndarray:
        a = as_batch(ys, self.dim)
        if not self.domain.interior_many(a).all():
            bad = a[~self.domain.interior_many(a)][0]
            raise ValueError(f"{self.name}: gradient requested outside int X at {bad}")
        with np.errstate(all="ignore"):
            return np.asarray(self._grad(a), dtype=float).reshape(a.shape)

    def grad(self, y) -> np.ndarray:
        return self.grad_many(as_point(y, self.dim).reshape(1, -1))[0]

    # conjugate --------------------------------------------------------
    def conj_many(self, xis) -> np.ndarray:
        a = as_batch(xis, self.dim)
        if self._conj_value is not None:
            ok = self.conj_domain.contains_many(a)
            out = np.full(a.shape[0], math.inf)
            if ok.any():
                with np.errstate(all="ignore"):
                    out[ok] = self._conj_value(a[ok])
            return out
        return np.array([self._numeric_conj(tuple(p)) for p in a])

    def conj(self, xi) -> float:
        return float(self.conj_many(as_point(xi, self.dim).reshape(1, -1))[0])

    @functools.lru_cache(maxsize=65536)
    def _numeric_conj(self, xi: tuple) -> float:
        return float(numeric_conjugate(self.as_objective(), np.array(xi)))

    @property
    def has_conj_grad(self) -> bool:
        return self._conj_grad is not None or (self.dim == 1 and self.flags.legendre)

    def conj_grad(self, xi) -> np.ndarray:
        p = as_point(xi, self.dim)
        if self._conj_grad is not None:
            if not self.conj_domain.contains_interior(p):
                raise ValueError(f"{self.name}: conjugate gradient outside int dom k* at {p}")
            with np.errstate(all="ignore"):
                return np.asarray(self._conj_grad(p.reshape(1, -1)), dtype=float).reshape(-1)
        if self.dim == 1 and self.flags.legendre:
            sols = solve_grad_1d(self, float(p[0]))
            if not sols:
                raise ValueError(f"{self.name}: {p[0]} is not in the range of the gradient")
            return np.array([sols[0][0]])
        raise ValueError(f"{self.name}: no conjugate gradient available")

    # distances --------------------------------------------------------
    def divergence_many(self, xs, ys) -> np.ndarray:
        """Bregman distance D(x, y) rowwise, +inf when x not in X or y not in int X."""
        a = as_batch(xs, self.dim)
        b = as_batch(ys, self.dim)
        a, b = np.broadcast_arrays(a, b)
        ok = self.domain.contains_many(a) & self.domain.interior_many(b)
        out = np.full(a.shape[0], math.inf)
        if ok.any():
            pa, pb = a[ok], b[ok]
            with np.errstate(all="ignore"):
                if self._divergence is not None:
                    d = np.asarray(self._divergence(pa, pb), dtype=float)
                else:
                    d = self._value(pa) - self._value(pb) - np.sum(self._grad(pb) * (pa - pb), axis=1)
            # rounding can push an exact zero slightly negative; overflow reads as +inf
            d = np.where(np.isnan(d), math.inf, np.maximum(d, 0.0))
            out[ok] = d
        return out

    def as_objective(self, side: str = "left") -> ObjectiveFn:
        return ObjectiveFn(self._value, self.domain, side=side, grad=lambda x: self.grad(x),
                           label=self.name)

    def conj_objective(self) -> ObjectiveFn:
        return ObjectiveFn(lambda a: self.conj_many(a), self.conj_domain, label=f"{self.name}*")

    def dual(self) -> "Kernel":
        """The conjugate kernel of a Legendre kernel, for distances on the dual side."""
        if not self.flags.legendre:
            raise ValueError(f"{self.name} is not Legendre; the dual identity does not apply")
        return Kernel(f"{self.name}*", self.conj_domain, self.domain, self.conj_many,
                      lambda a: np.vstack([self.conj_grad(p) for p in a]),
                      KernelFlags(True, self.flags.full_domain, self.flags.one_coercive, True),
                      conj_value=self.value_many, conj_grad=lambda a: self.grad_many(a))


# ------------------------------------------------------------------ catalog

def _euclidean(dim: int) -> Kernel:
    def sqn(a):
        return 0.5 * np.sum(a * a, axis=1)

    def div(a, b):
        return 0.5 * np.sum((a - b) ** 2, axis=1)

    return Kernel("euclidean", Box.real(dim), Box.real(dim), sqn, lambda a: a.copy(),
                  KernelFlags(True, True, True, True), conj_value=sqn, conj_grad=lambda a: a.copy(),
                  divergence=div, params=(dim,))


def _burg() -> Kernel:
    def div(a, b):
        r = a[:, 0] / b[:, 0]
        return r - np.log(r) - 1.0

    return Kernel("burg", Box.interval(0.0, math.inf), Box.interval(-math.inf, 0.0),
                  lambda a: -np.log(a[:, 0]), lambda a: -1.0 / a,
                  KernelFlags(True, False, False, True),
                  conj_value=lambda s: -1.0 - np.log(-s[:, 0]), conj_grad=lambda s: -1.0 / s,
                  divergence=div)


def _exp() -> Kernel:
    def conj(s):
        t = s[:, 0]
        return np.where(t > 0, t * np.log(np.where(t > 0, t, 1.0)) - t, 0.0)

    def div(a, b):
        # e^y (expm1(t) - t) near the diagonal; the direct form far from it,
        # where e^y may underflow while expm1(t) overflows
        t = a[:, 0] - b[:, 0]
        near = np.abs(t) <= 1
        phi = np.expm1(np.where(near, t, 0.0)) - np.where(near, t, 0.0)
        with np.errstate(over="ignore"):
            far = np.exp(a[:, 0]) - np.exp(b[:, 0]) * (1 + t)
        return np.where(near, np.where(phi == 0, 0.0, np.exp(b[:, 0]) * phi), far)

    return Kernel("exp", Box.real(1), Box.interval(0.0, math.inf, "left"),
                  lambda a: np.exp(a[:, 0]), lambda a: np.exp(a),
                  KernelFlags(True, False, True, True),
                  conj_value=conj, conj_grad=lambda s: np.log(s), divergence=div)


def _boxed_quadratic() -> Kernel:
    def conj(s):
        t = np.abs(s[:, 0])
        return np.where(t <= 1, 0.5 * t * t, t - 0.5)

    return Kernel("boxed_quadratic", Box.interval(-1.0, 1.0, "both"), Box.real(1),
                  lambda a: 0.5 * a[:, 0] ** 2, lambda a: a.copy(),
                  KernelFlags(False, True, False, False),
                  conj_value=conj, conj_grad=lambda s: np.clip(s, -1.0, 1.0),
                  divergence=lambda a, b: 0.5 * (a[:, 0] - b[:, 0]) ** 2)


def _piecewise_env_star() -> Kernel:
    def val(a):
        x = a[:, 0]
        safe = np.where(x >= 1, x, 1.0)
        return np.where(x < 1, x * x - 2 * x + 3, safe + 1.0 / safe)

    def grad(a):
        x = a[:, 0]
        safe = np.where(x >= 1, x, 1.0)
        return np.where(x < 1, 2 * x - 2, 1.0 - 1.0 / safe ** 2).reshape(-1, 1)

    def div(a, b):
        # branchwise closed forms; the generic formula cancels badly for large y
        x, y = a[:, 0], b[:, 0]
        sx = np.where(x >= 1, x, 1.0)
        sy = np.where(y >= 1, y, 1.0)
        kx = np.where(x < 1, x * x - 2 * x + 3, sx + 1.0 / sx)
        both_hi = (x - y) ** 2 / (sx * sy * sy)
        x_lo_y_hi = kx - x - 2.0 / sy + x / (sy * sy)
        x_hi_y_lo = 3 * x + 1.0 / sx + y * y - 2 * x * y - 3
        return np.where(y >= 1, np.where(x >= 1, both_hi, x_lo_y_hi),
                        np.where(x < 1, (x - y) ** 2, x_hi_y_lo))

    # conjugate left numeric on purpose: no closed form is supplied
    return Kernel("piecewise_env_star", Box.real(1), Box.interval(-math.inf, 1.0, "right"),
                  val, grad, KernelFlags(True, False, True, True), divergence=div, breakpoints=(1.0,))


def _dragomir_y(s):
    # positive root of Y^2 - u Y - 1; the second form avoids cancellation for u << 0
    u = s[:, 0] ** 2 + s[:, 1]
    r = np.sqrt(u * u + 4.0)
    return np.where(u >= 0, 0.5 * (u + r), 2.0 / (r - np.minimum(u, 0.0)))


def _dragomir2d() -> Kernel:
    def val(a):
        x1, x2 = a[:, 0], a[:, 1]
        return x1 ** 2 / (4 * x2) + 0.5 * x2 ** 2 - np.log(x2)

    def grad(a):
        x1, x2 = a[:, 0], a[:, 1]
        return np.column_stack([x1 / (2 * x2), -x1 ** 2 / (4 * x2 ** 2) + x2 - 1.0 / x2])

    def conj(s):
        y = _dragomir_y(s)
        return 0.5 * y * y - 1.0 + np.log(y)

    def conj_grad(s):
        y = _dragomir_y(s)
        return np.column_stack([2 * s[:, 0] * y, y])

    dom = Box.product(Box.real(1), Box.interval(0.0, math.inf))
    return Kernel("dragomir2d", dom, Box.real(2), val, grad, KernelFlags(True, True, False, True),
                  conj_value=conj, conj_grad=conj_grad)


KERNEL_NAMES = ("euclidean", "burg", "exp", "boxed_quadratic", "piecewise_env_star", "dragomir2d")


@functools.lru_cache(maxsize=None)
def _cached_kernel(name: str, params: tuple) -> Kernel:
    if name == "euclidean":
        dim = int(params[0]) if params else 1
        return _euclidean(dim)
    if params:
        raise ValueError(f"kernel {name!r} takes no parameters")
    builders = {"burg": _burg, "exp": _exp, "boxed_quadratic": _boxed_quadratic,
                "piecewise_env_star": _piecewise_env_star, "dragomir2d": _dragomir2d}
    if name not in builders:
        raise ValueError(f"unknown kernel {name!r}; choose from {', '.join(KERNEL_NAMES)}")
    return builders[name]()


def make_kernel(name: str, params=()) -> Kernel:
    """Build a catalog kernel. ``euclidean`` takes the dimension as its only parameter."""
    return _cached_kernel(name, tuple(params))


# ------------------------------------------------------- 1-D gradient solves

def _piece_ends(k: Kernel):
    a, b = k.domain.lo[0], k.domain.hi[0]
    cuts = [c for c in k.breakpoints if a < c < b]
    edges = [a] + cuts + [b]
    pieces = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        lo_open = lo == a
        hi_open = hi == b
        plo = (lo + MARGIN_FLOOR * max(1.0, abs(lo))) if math.isfinite(lo) and lo_open else (
            -FAR if math.isinf(lo) else lo)
        phi = (hi - MARGIN_FLOOR * max(1.0, abs(hi))) if math.isfinite(hi) and hi_open else (
            FAR if math.isinf(hi) else hi)
        pieces.append((plo, phi, lo_open, hi_open))
    return pieces


def _g(k: Kernel, y: float) -> float:
    return float(k._grad(np.array([[y]]))[0, 0])


def solve_grad_1d(k: Kernel, xi: float, tol: float = 1e-13) -> list[tuple[float, float]]:
    """All y in int X with k'(y) = xi, as closed intervals (points are degenerate intervals).

    The gradient is nondecreasing on each piece between breakpoints; ends of
    X are open, so a limit of the gradient there is never a solution.
    """
    if k.dim != 1:
        raise ValueError("solve_grad_1d is one-dimensional")
    out = []
    for plo, phi, lo_open, hi_open in _piece_ends(k):
        glo, ghi = _g(k, plo), _g(k, phi)
        if xi < glo or xi > ghi:
            continue
        if (lo_open and xi <= glo) or (hi_open and xi >= ghi):
            continue

        def first(pred):
            lo, hi = plo, phi
            for _ in range(400):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi) or hi - lo <= tol * max(1.0, abs(mid)):
                    break
                if pred(mid):
                    hi = mid
                else:
                    lo = mid
            return hi

        left = first(lambda t: _g(k, t) >= xi)
        right = first(lambda t: _g(k, t) > xi)
        if right < left:
            right = left
        # a jump in the derivative would leave xi unattained
        if min(abs(_g(k, left) - xi), abs(_g(k, right) - xi)) > 1e-8 * (1 + abs(xi)):
            lo_v = _g(k, max(left - 1e-9 * max(1, abs(left)), plo))
            if abs(lo_v - xi) > 1e-8 * (1 + abs(xi)):
                continue
        if right - left > 1e-9 * max(1.0, abs(left)):
            out.append((left, right))
            continue
        lo, hi = min(left, right), max(left, right)
        lo = max(plo, lo - 4 * tol * max(1.0, abs(lo)))
        glo, ghi = _g(k, lo), _g(k, hi)
        y = lo + (xi - glo) * (hi - lo) / (ghi - glo) if ghi != glo else left
        y = min(max(y, lo), hi)
        # a solution on a breakpoint is found from both adjacent pieces
        if not any(a <= y <= b for a, b in out):
            out.append((y, y))
    return out


# -------------------------------------------------------------- certificates

@dataclass
class GradRange:
    """Per-coordinate interval hull of the gradient image of int X."""

    lo: np.ndarray
    hi: np.ndarray
    lo_open: np.ndarray
    hi_open: np.ndarray

    def as_box(self) -> Box:
        return Box(tuple(self.lo), tuple(self.hi), tuple(~self.lo_open), tuple(~self.hi_open))

    def contains(self, other: "GradRange") -> bool:
        return self.as_box().contains_box(other.as_box())


def _snap(v: float) -> float:
    if abs(v) > 1e8:
        return math.copysign(math.inf, v)
    r = round(v)
    return float(r) if abs(v - r) < 1e-10 else v


def _interior_probes(k: Kernel, per_axis: int = 41) -> np.ndarray:
    axes = []
    for i in range(k.dim):
        a, b = k.domain.lo[i], k.domain.hi[i]
        if math.isfinite(a) and math.isfinite(b):
            w = b - a
            pts = np.concatenate([a + w * np.logspace(-12, -1, 12), np.linspace(a, b, per_axis)[1:-1],
                                  b - w * np.logspace(-12, -1, 12)])
        elif math.isfinite(a):
            pts = a + np.logspace(-12, 12, per_axis)
        elif math.isfinite(b):
            pts = b - np.logspace(-12, 12, per_axis)
        else:
            pos = np.logspace(-3, 12, per_axis // 2)
            pts = np.concatenate([-pos[::-1], [0.0], pos])
        axes.append(np.unique(pts))
    if k.dim == 1:
        return axes[0].reshape(-1, 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.reshape(-1) for m in mesh])


def kernel_grad_map_range(k: Kernel, probes=None) -> GradRange:
    """Estimate the range of the gradient over int X, ends open unless attained."""
    pts = _interior_probes(k) if probes is None else as_batch(probes, k.dim)
    pts = pts[k.domain.interior_many(pts)]
    g = k.grad_many(pts)
    g = np.where(np.isfinite(g), g, np.sign(g) * 1e300)
    lo = np.array([_snap(v) for v in g.min(axis=0)])
    hi = np.array([_snap(v) for v in g.max(axis=0)])
    lo_open = np.ones(k.dim, dtype=bool)
    hi_open = np.ones(k.dim, dtype=bool)
    return GradRange(lo, hi, lo_open, hi_open)


@dataclass
class KernelReport:
    name: str
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def agrees_with_flags(self, flags: KernelFlags) -> dict:
        out = {}
        for key in ("legendre", "one_coercive", "essentially_smooth"):
            if key in self.checks:
                out[key] = self.checks[key][0] == getattr(flags, key)
        return out


def certify_kernel(k: Kernel, probe_grid=None, tol: float = 1e-8, seed: int = 0) -> KernelReport:
    """Numerically probe convexity, 1-coercivity, essential smoothness and the gradient inverse.

    1-coercivity: along fixed rays from an interior point, k(x)/|x| is
    sampled at radii 10, 100, 1e3, 1e4 and must grow strictly at every step
    (or be +inf), without the increments collapsing. Essential smoothness:
    the gradient norm must exceed 1e6 and keep growing as finite boundary
    points are approached.
    """
    rng = np.random.default_rng(seed)
    rep = KernelReport(k.name)
    pts = _interior_probes(k, 15) if probe_grid is None else as_batch(probe_grid, k.dim)
    pts = pts[k.domain.interior_many(pts)]
    pts = pts[np.all(np.abs(pts) < 1e3, axis=1)]

    # midpoint convexity on random interior pairs
    i, j = rng.integers(0, len(pts), size=(2, 400))
    a, b = pts[i], pts[j]
    va, vb, vm = k.value_many(a), k.value_many(b), k.value_many(0.5 * (a + b))
    gap = 0.5 * (va + vb) - vm
    scale = 1 + np.abs(va) + np.abs(vb)
    worst = float(np.min(gap / scale))
    rep.checks["convex"] = (worst >= -tol, f"min scaled midpoint gap {worst:.3g}")

    # strict convexity on the sampled pairs
    distinct = np.linalg.norm(a - b, axis=1) > 1e-3
    strict = bool(np.all(gap[distinct] > 0))
    rep.checks["strictly_convex"] = (strict, "positive midpoint gap on distinct pairs" if strict
                                     else "zero midpoint gap found")

    # 1-coercivity
    base = k.domain.representative_interior_point
    dirs = [np.eye(k.dim)[d] * s for d in range(k.dim) for s in (1, -1)]
    if k.dim == 2:
        dirs += [np.array(v) / math.sqrt(2) for v in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
    radii = [10.0, 100.0, 1e3, 1e4]
    coercive, why = True, "k/|x| grows along all rays"
    for u in dirs:
        q = []
        for r in radii:
            x = base + r * u
            q.append(k.value(x) / np.linalg.norm(x))
        if math.isinf(q[-1]):
            continue
        # growth must not die out: the last increment keeps at least half the previous one
        d = np.diff(q)
        if not (np.all(d > 0) and d[-1] >= 0.5 * d[-2]):
            coercive, why = False, f"k/|x| stalls along direction {np.round(u, 3)}: {q[-1]:.3g}"
            break
    rep.checks["one_coercive"] = (coercive, why)

    # essential smoothness: blow-up of the gradient at finite boundary points
    smooth, why = True, "no finite boundary" if k.domain.is_full else "gradient blows up at boundary"
    for d in range(k.dim):
        for end, sign in ((k.domain.lo[d], 1.0), (k.domain.hi[d], -1.0)):
            if math.isinf(end):
                continue
            norms = []
            for m in (1e-4, 1e-6, 1e-8):
                y = base.copy()
                y[d] = end + sign * m
                norms.append(float(np.linalg.norm(k.grad(y))))
            if not (norms[-1] > 1e6 and norms[-1] > norms[0]):
                smooth, why = False, f"gradient stays bounded ({norms[-1]:.3g}) near coordinate {d} = {end:g}"
    rep.checks["essentially_smooth"] = (smooth, why)

    # gradient inverse through the conjugate
    if k.has_conj_grad:
        inner = pts[np.all(np.abs(pts) < 50, axis=1)]
        inner = inner[[k.domain.interior_margin(p) > 1e-6 for p in inner]]
        errs = []
        for y in inner[:: max(1, len(inner) // 60)]:
            try:
                errs.append(float(np.linalg.norm(k.conj_grad(k.grad(y)) - y) / (1 + np.linalg.norm(y))))
            except ValueError:
                errs.append(math.inf)
        e = max(errs) if errs else 0.0
        rep.checks["gradient_inverse"] = (e <= 1e-8, f"max relative error {e:.3g}")
    legendre = smooth and strict and rep.checks.get("gradient_inverse", (True, ""))[0]
    rep.checks["legendre"] = (legendre, "essentially smooth and strictly convex" if legendre
                              else "fails essential smoothness or strict convexity")
    return rep
