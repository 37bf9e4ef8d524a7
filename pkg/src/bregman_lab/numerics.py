"""Extended reals, box domains, objectives and the shared minimizers.

Every operator in the package reduces to one of the routines here:
``minimize_scalar`` (1-D, open or closed brackets, possibly unbounded),
``minimize_nd`` (multistart for dim <= 4), ``numeric_conjugate`` and the
exact ``grid_biconjugate``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

ESCAPE_THRESHOLD = 1e12
CLUSTER_TOL = 1e-6
MARGIN_FLOOR = 1e-12
TOL_1D = 1e-9
TOL_ND = 1e-7
DEFAULT_SEED = 0
MAX_DIM = 4


class IndeterminateForm(ArithmeticError):
    """Raised for inf - inf, 0 * inf and NaN."""


class ExtReal(float):
    """A float restricted to R u {+inf, -inf}.

    Arithmetic that would produce NaN raises ``IndeterminateForm`` instead.
    Ordering is the usual (total) float ordering.
    """

    __slots__ = ()

    def __new__(cls, value=0.0):
        v = float(value)
        if math.isnan(v):
            raise IndeterminateForm("NaN is not an extended real")
        return super().__new__(cls, v)

    @property
    def tag(self) -> str:
        if math.isinf(self):
            return "pos_inf" if self > 0 else "neg_inf"
        return "finite"

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self)

    def __add__(self, other):
        o = float(other)
        if math.isinf(self) and math.isinf(o) and (self > 0) != (o > 0):
            raise IndeterminateForm("inf - inf")
        return ExtReal(float(self) + o)

    __radd__ = __add__

    def __sub__(self, other):
        return self.__add__(-float(other))

    def __rsub__(self, other):
        return ExtReal(-float(self)).__add__(other)

    def __neg__(self):
        return ExtReal(-float(self))

    def __mul__(self, other):
        o = float(other)
        if (math.isinf(self) and o == 0) or (math.isinf(o) and float(self) == 0):
            raise IndeterminateForm("0 * inf")
        return ExtReal(float(self) * o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = float(other)
        if o == 0 or (math.isinf(self) and math.isinf(o)):
            raise IndeterminateForm(f"{float(self)} / {o}")
        return ExtReal(float(self) / o)

    def __repr__(self):
        if math.isinf(self):
            return "ExtReal(+inf)" if self > 0 else "ExtReal(-inf)"
        return f"ExtReal({float(self)!r})"


POS_INF = ExtReal(math.inf)
NEG_INF = ExtReal(-math.inf)


def as_point(x, dim: int) -> np.ndarray:
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size != dim:
        raise ValueError(f"expected a point of dimension {dim}, got shape {np.shape(x)}")
    return a


def as_batch(xs, dim: int) -> np.ndarray:
    """Coerce to an (m, dim) array. For dim 1 a flat array is a batch."""
    a = np.asarray(xs, dtype=float)
    if dim == 1 and a.ndim <= 1:
        return a.reshape(-1, 1)
    if a.ndim == 1 and a.size == dim:
        return a.reshape(1, dim)
    if a.ndim != 2 or a.shape[1] != dim:
        raise ValueError(f"expected shape (m, {dim}), got {a.shape}")
    return a


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:g}"


@dataclass(frozen=True)
class Box:
    """Product of intervals, each end open or closed. Infinite ends are open."""

    lo: tuple
    hi: tuple
    lo_closed: tuple
    hi_closed: tuple

    def __post_init__(self):
        n = len(self.lo)
        if not (len(self.hi) == len(self.lo_closed) == len(self.hi_closed) == n):
            raise ValueError("inconsistent box description")
        if not 1 <= n <= MAX_DIM:
            raise ValueError(f"dimension must be between 1 and {MAX_DIM}")
        for a, b in zip(self.lo, self.hi):
            if not a < b:
                raise ValueError(f"interval ({a}, {b}) has empty interior")
        object.__setattr__(self, "lo", tuple(float(a) for a in self.lo))
        object.__setattr__(self, "hi", tuple(float(b) for b in self.hi))
        object.__setattr__(
            self, "lo_closed",
            tuple(bool(c) and math.isfinite(a) for a, c in zip(self.lo, self.lo_closed)))
        object.__setattr__(
            self, "hi_closed",
            tuple(bool(c) and math.isfinite(b) for b, c in zip(self.hi, self.hi_closed)))

    @classmethod
    def interval(cls, lo=-math.inf, hi=math.inf, closed: str = "neither") -> "Box":
        if closed not in ("neither", "both", "left", "right"):
            raise ValueError(f"unknown closedness {closed!r}")
        return cls((lo,), (hi,), (closed in ("both", "left"),), (closed in ("both", "right"),))

    @classmethod
    def real(cls, dim: int = 1) -> "Box":
        return cls((-math.inf,) * dim, (math.inf,) * dim, (False,) * dim, (False,) * dim)

    @classmethod
    def product(cls, *boxes: "Box") -> "Box":
        return cls(sum((b.lo for b in boxes), ()), sum((b.hi for b in boxes), ()),
                   sum((b.lo_closed for b in boxes), ()), sum((b.hi_closed for b in boxes), ()))

    @property
    def dim(self) -> int:
        return len(self.lo)

    def axis(self, i: int) -> "Box":
        return Box((self.lo[i],), (self.hi[i],), (self.lo_closed[i],), (self.hi_closed[i],))

    def _inside(self, xs, strict: bool) -> np.ndarray:
        a = as_batch(xs, self.dim)
        lo, hi = np.array(self.lo), np.array(self.hi)
        lc = np.array(self.lo_closed) & (not strict)
        hc = np.array(self.hi_closed) & (not strict)
        ok = ((a > lo) | (lc & (a == lo))) & ((a < hi) | (hc & (a == hi)))
        return ok.all(axis=1)

    def contains(self, x) -> bool:
        return bool(self._inside(as_point(x, self.dim), False)[0])

    def contains_interior(self, x) -> bool:
        return bool(self._inside(as_point(x, self.dim), True)[0])

    def contains_many(self, xs) -> np.ndarray:
        return self._inside(xs, False)

    def interior_many(self, xs) -> np.ndarray:
        return self._inside(xs, True)

    def interior_margin(self, x) -> float:
        """Distance to the boundary for interior points, 0 otherwise."""
        p = as_point(x, self.dim)
        if not self.contains_interior(p):
            return 0.0
        gaps = np.minimum(p - np.array(self.lo), np.array(self.hi) - p)
        return float(gaps.min())

    @property
    def representative_interior_point(self) -> np.ndarray:
        out = []
        for a, b in zip(self.lo, self.hi):
            if math.isfinite(a) and math.isfinite(b):
                out.append(0.5 * (a + b))
            elif math.isfinite(a):
                out.append(a + 1.0)
            elif math.isfinite(b):
                out.append(b - 1.0)
            else:
                out.append(0.0)
        return np.array(out)

    @property
    def is_closed(self) -> bool:
        ends = [(c or math.isinf(a)) for a, c in zip(self.lo, self.lo_closed)]
        ends += [(c or math.isinf(b)) for b, c in zip(self.hi, self.hi_closed)]
        return all(ends)

    @property
    def is_open(self) -> bool:
        return not any(self.lo_closed) and not any(self.hi_closed)

    @property
    def is_full(self) -> bool:
        return all(math.isinf(a) for a in self.lo) and all(math.isinf(b) for b in self.hi)

    def interior(self) -> "Box":
        return Box(self.lo, self.hi, (False,) * self.dim, (False,) * self.dim)

    def closure(self) -> "Box":
        return Box(self.lo, self.hi, (True,) * self.dim, (True,) * self.dim)

    def contains_box(self, other: "Box") -> bool:
        if other.dim != self.dim:
            return False
        for i in range(self.dim):
            a, oa = self.lo[i], other.lo[i]
            if oa < a or (oa == a and other.lo_closed[i] and not self.lo_closed[i]):
                return False
            b, ob = self.hi[i], other.hi[i]
            if ob > b or (ob == b and other.hi_closed[i] and not self.hi_closed[i]):
                return False
        return True

    def clip_inside(self, x, margin: float = 1e-9) -> np.ndarray:
        """Nearest point at least ``margin`` inside the closure (coordinatewise)."""
        p = as_point(x, self.dim).copy()
        for i, (a, b) in enumerate(zip(self.lo, self.hi)):
            m = min(margin, 0.25 * (b - a)) if math.isfinite(b - a) else margin
            if math.isfinite(a):
                p[i] = max(p[i], a + m)
            if math.isfinite(b):
                p[i] = min(p[i], b - m)
        return p

    def __str__(self):
        parts = []
        for i in range(self.dim):
            a, b = self.lo[i], self.hi[i]
            if math.isinf(a) and math.isinf(b):
                parts.append("R")
                continue
            left = "[" if self.lo_closed[i] else "("
            right = "]" if self.hi_closed[i] else ")"
            parts.append(f"{left}{_fmt(a)}, {_fmt(b)}{right}")
        return " x ".join(parts)


class ObjectiveFn:
    """An extended-real function on a box, evaluated through its canonical extension.

    ``fn`` receives an (m, dim) array of points that lie in the relevant set
    (X for ``side="left"``, its interior for ``side="right"``) and returns m
    values; every other point evaluates to +inf. ``atoms`` lists isolated
    points of the effective domain that a sampling minimizer must visit.
    """

    def __init__(self, fn: Callable, domain: Box, side: str = "left", grad: Callable | None = None,
                 label: str = "", atoms: Sequence = (), vectorized: bool = True):
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        self.fn = fn
        self.domain = domain
        self.side = side
        self.grad = grad
        self.label = label
        self.atoms = tuple(as_point(a, domain.dim) for a in atoms)
        self.vectorized = vectorized

    @property
    def dim(self) -> int:
        return self.domain.dim

    def values(self, xs, allow_nan: bool = False) -> np.ndarray:
        a = as_batch(xs, self.dim)
        mask = self.domain.contains_many(a) if self.side == "left" else self.domain.interior_many(a)
        out = np.full(a.shape[0], math.inf)
        if mask.any():
            pts = a[mask]
            with np.errstate(all="ignore"):
                if self.vectorized:
                    vals = np.asarray(self.fn(pts), dtype=float).reshape(-1)
                else:
                    vals = np.array([float(self.fn(p)) for p in pts])
            out[mask] = vals
        if not allow_nan and np.isnan(out).any():
            bad = a[np.isnan(out)][0]
            raise IndeterminateForm(f"{self.label or 'objective'} is undefined at {bad}")
        return out

    def __call__(self, x) -> ExtReal:
        return ExtReal(self.values(as_point(x, self.dim).reshape(1, -1))[0])

    def gradient(self, x) -> np.ndarray:
        if self.grad is None:
            raise ValueError(f"{self.label or 'objective'} has no gradient")
        return np.asarray(self.grad(as_point(x, self.dim)), dtype=float).reshape(-1)

    def __repr__(self):
        return f"ObjectiveFn({self.label or '?'}, {self.side}, on {self.domain})"


def _as_objective(obj, domain: Box | None) -> ObjectiveFn:
    if isinstance(obj, ObjectiveFn):
        return obj
    if domain is None:
        raise ValueError("a plain callable needs an explicit domain")
    return ObjectiveFn(obj, domain, vectorized=False)


@dataclass(frozen=True)
class GridFn:
    """A function sampled on a finite point set (+inf allowed, -inf not)."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if pts.shape[0] != vals.size:
            raise ValueError("points and values differ in length")
        if np.isnan(vals).any() or (vals == -math.inf).any():
            raise ValueError("grid values must be finite or +inf")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)


class Status(str, enum.Enum):
    NONEMPTY = "nonempty"
    NOT_ATTAINED = "empty_inf_not_attained"
    UNBOUNDED = "unbounded_below"
    ALL_INFINITE = "all_infinite"


@dataclass(frozen=True)
class ProxResult:
    inf_value: ExtReal
    minimizers: tuple = ()
    status: Status = Status.NONEMPTY
    certificate: str = ""

    @property
    def nonempty(self) -> bool:
        return self.status is Status.NONEMPTY

    @property
    def x(self):
        """First minimizer; a float in one dimension."""
        if not self.minimizers:
            raise ValueError(f"no minimizer ({self.status.value})")
        p = self.minimizers[0]
        return float(p[0]) if p.size == 1 else p

    def points(self) -> np.ndarray:
        if not self.minimizers:
            return np.empty((0, 0))
        return np.vstack(self.minimizers)


def _status_result(status: Status, value: float, cert: str) -> ProxResult:
    return ProxResult(ExtReal(value), (), status, cert)


# ---------------------------------------------------------------- 1-D search

def _scalar_candidates(box: Box, anchors, n_grid, per_decade, far, margin_floor):
    a, b = box.lo[0], box.hi[0]
    anchors = [float(np.reshape(t, -1)[0]) for t in anchors if box.contains(t)]
    spread = max([abs(t) for t in anchors] + [1.0])
    if math.isfinite(a) and math.isfinite(b):
        ca, cb = a, b
    elif math.isfinite(a):
        ca, cb = a, a + max(10.0, 4.0 * (spread + abs(a)))
    elif math.isfinite(b):
        ca, cb = b - max(10.0, 4.0 * (spread + abs(b))), b
    else:
        ca, cb = -max(10.0, 2.0 * spread), max(10.0, 2.0 * spread)
    w = cb - ca
    core = np.linspace(ca, cb, n_grid)
    core = core[(core > a) & (core < b)]

    def tail(end, sign):
        if math.isfinite(end):
            k_max = int(math.ceil(per_decade * math.log10(w / margin_floor)))
            offs = w * 10.0 ** (-np.arange(1, k_max + 1) / per_decade)
            offs = np.append(offs[offs > margin_floor], margin_floor)
            return end - sign * offs
        k_max = int(math.ceil(per_decade * math.log10(far / w)))
        offs = w * 10.0 ** (np.arange(0, k_max + 1) / per_decade)
        base = cb if sign > 0 else ca
        return base + sign * offs

    lower = tail(a, -1.0)
    upper = tail(b, 1.0)
    ends = [e for e, c in ((a, box.lo_closed[0]), (b, box.hi_closed[0])) if c]
    return core, lower, upper, np.array(ends, dtype=float), np.array(anchors, dtype=float)


def _tail_diverges(vals: np.ndarray, noise: float) -> tuple[bool, str]:
    v = vals[np.isfinite(vals)]
    if v.size < 4:
        return False, ""
    d = (v[:-1] - v[1:])[-3:]
    if np.all(d > noise) and d[1] >= 0.9 * d[0] and d[2] >= 0.9 * d[1]:
        return True, f"decrease per step {d[-1]:.6g} is not shrinking"
    return False, ""


def minimize_scalar(obj, bracket: Box | None = None, tol: float = TOL_1D, *, anchors=(),
                    n_grid: int = 121, per_decade: int = 4, far: float = 1e16,
                    escape_threshold: float = ESCAPE_THRESHOLD, margin_floor: float = MARGIN_FLOOR,
                    cluster_tol: float = CLUSTER_TOL, max_local: int = 8) -> ProxResult:
    """Global 1-D minimization over an interval with open or closed ends.

    A deterministic sample (linear core plus geometric tails that approach
    each open end down to ``margin_floor`` or out to ``far``) locates the
    candidate basins; each basin is refined with bounded Brent. When the
    smallest samples sit against an open or infinite end, the tail trend
    decides between an unattained finite infimum and divergence to -inf.
    """
    f = _as_objective(obj, bracket)
    box = bracket if bracket is not None else f.domain
    if box.dim != 1:
        raise ValueError("minimize_scalar needs a one-dimensional bracket")
    anchors = list(anchors) + [float(p[0]) for p in f.atoms]
    core, lower, upper, ends, anc = _scalar_candidates(box, anchors, n_grid, per_decade, far,
                                                       margin_floor)
    xs = np.concatenate([core, lower, upper, ends, anc])
    vs = f.values(xs, allow_nan=True)
    n_lower, n_upper = lower.size, upper.size
    v_lower = vs[core.size:core.size + n_lower]
    v_upper = vs[core.size + n_lower:core.size + n_lower + n_upper]

    vs = np.where(np.isnan(vs), math.inf, vs)
    xs, idx = np.unique(xs, return_index=True)
    vs = vs[idx]
    if not np.isfinite(vs).any() and not (vs == -math.inf).any():
        return _status_result(Status.ALL_INFINITE, math.inf, "no finite value on the sample")
    i_min = int(np.argmin(vs))
    m = float(vs[i_min])
    if m < -escape_threshold:
        return _status_result(Status.UNBOUNDED, -math.inf,
                              f"value {m:.6g} at x={xs[i_min]:.6g} below -{escape_threshold:g}")
    noise = 1e-12 * (1.0 + abs(m))
    n = xs.size
    lo_open = not box.lo_closed[0]
    hi_open = not box.hi_closed[0]
    first = 0 if lo_open else 1
    last = n - 1 if hi_open else n - 2

    if np.all(vs[np.isfinite(vs)] <= m + noise) and np.isfinite(vs).sum() == n:
        mid = xs[n // 2]
        return ProxResult(ExtReal(m), (np.array([mid]),), Status.NONEMPTY, "flat objective")

    # local minima with neighbours outside the sample treated as +inf
    left = np.concatenate([[math.inf], vs[:-1]])
    right = np.concatenate([vs[1:], [math.inf]])
    is_min = np.isfinite(vs) & (vs <= left) & (vs <= right)

    # far samples carry rounding of order eps*|x| from cancelling linear terms
    slack = noise + 8 * np.finfo(float).eps * np.abs(xs)

    def plateau_reaches(i, step, stop):
        j = i
        while j != stop:
            if not vs[j + step] <= vs[i] + slack[j + step]:
                return False
            j += step
        return True

    escape_lo = escape_hi = False
    attained = []
    for i in np.flatnonzero(is_min):
        lo_blocked = (lo_open or not np.isfinite(vs[0])) and i >= first and plateau_reaches(i, -1, first)
        hi_blocked = (hi_open or not np.isfinite(vs[-1])) and i <= last and plateau_reaches(i, 1, last)
        if lo_blocked and (i != 0 or lo_open):
            escape_lo = True
        elif hi_blocked and (i != n - 1 or hi_open):
            escape_hi = True
        else:
            attained.append(int(i))

    certs = []
    escape_val = math.inf
    for flag, tail_vals, end_vals, name in ((escape_lo, v_lower, vs[first], "lower"),
                                            (escape_hi, v_upper, vs[last], "upper")):
        if not flag:
            continue
        div, why = _tail_diverges(tail_vals, noise)
        if div:
            return _status_result(Status.UNBOUNDED, -math.inf, f"{name} end: {why}")
        finite_tail = tail_vals[np.isfinite(tail_vals)]
        est = float(finite_tail.min()) if finite_tail.size else float(end_vals)
        escape_val = min(escape_val, est, float(end_vals))
        certs.append(f"{name} end: infimum approached, not attained")

    # refine attained basins, collapsing plateaus to one representative
    basins = []
    for i in sorted(attained, key=lambda j: (vs[j], j)):
        if any(abs(i - j) <= 1 or (abs(vs[i] - vs[j]) <= noise and _same_run(vs, i, j, noise))
               for j in basins):
            continue
        basins.append(i)
        if len(basins) >= max_local:
            break
    scalar = lambda t: float(f.values(np.array([t]), allow_nan=True)[0])
    refined = []
    for i in basins:
        bx, bv = xs[i], vs[i]
        lo_x = xs[i - 1] if i > 0 else xs[i]
        hi_x = xs[i + 1] if i < n - 1 else xs[i]
        if lo_x < hi_x and (np.isfinite(vs[max(i - 1, 0)]) or np.isfinite(vs[min(i + 1, n - 1)])):
            xatol = tol * max(1.0, abs(bx))

            def safe(t):
                v = scalar(t)
                return math.inf if math.isnan(v) else v

            with warnings.catch_warnings(), np.errstate(all="ignore"):
                warnings.simplefilter("ignore", RuntimeWarning)
                res = optimize.minimize_scalar(safe, bounds=(lo_x, hi_x), method="bounded",
                                               options={"xatol": xatol, "maxiter": 500})
            if np.isfinite(res.fun) and res.fun < bv:
                bx, bv = float(res.x), float(res.fun)
        refined.append((bv, bx))

    if refined:
        best = min(v for v, _ in refined)
        if best < -escape_threshold:
            return _status_result(Status.UNBOUNDED, -math.inf, f"refined value {best:.6g}")
        if best <= escape_val + noise:
            keep = sorted((x, v) for v, x in refined if v <= best + cluster_tol)
            pts = []
            for x, v in keep:
                if pts and abs(x - pts[-1][0]) <= cluster_tol:
                    if v < pts[-1][1]:
                        pts[-1] = (x, v)
                    continue
                pts.append((x, v))
            return ProxResult(ExtReal(best), tuple(np.array([x]) for x, _ in pts),
                              Status.NONEMPTY, "; ".join(certs))
    if escape_val < math.inf:
        return _status_result(Status.NOT_ATTAINED, escape_val, "; ".join(certs))
    return _status_result(Status.ALL_INFINITE, math.inf, "no usable minimum")


def _same_run(vs, i, j, noise):
    lo, hi = min(i, j), max(i, j)
    return bool(np.all(np.abs(vs[lo:hi + 1] - vs[i]) <= noise))


# ---------------------------------------------------------------- n-D search

def minimize_nd(obj, domain: Box | None = None, n_starts: int = 8, tol: float = TOL_ND,
                seed: int = DEFAULT_SEED, *, anchors=(), escape_threshold: float = ESCAPE_THRESHOLD,
                cluster_tol: float = CLUSTER_TOL, scale: float = 1.0) -> ProxResult:
    """Multistart Nelder-Mead with clustering of the local solutions.

    Points outside the domain evaluate to +inf, which keeps the simplex in
    the effective domain. Solutions drifting to the boundary of an open
    domain or beyond ``1e8`` in norm are reported as unattained infima.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be at least 1")
    f = _as_objective(obj, domain)
    box = domain if domain is not None else f.domain
    dim = box.dim
    rng = np.random.default_rng(seed)
    x0 = box.representative_interior_point
    starts = [x0] + [as_point(a, dim) for a in anchors] + [as_point(p, dim) for p in f.atoms]
    while len(starts) < n_starts + len(anchors) + len(f.atoms):
        cand = x0 + scale * rng.normal(size=dim) * (1 + len(starts) % 3)
        starts.append(box.clip_inside(cand, 1e-3))

    def fun(p):
        v = float(f.values(p.reshape(1, -1), allow_nan=True)[0])
        return math.inf if math.isnan(v) else v

    sample = np.array([fun(s) for s in starts])
    if not np.isfinite(sample).any():
        probe = box.clip_inside(x0, 1e-3) + rng.normal(size=(64, dim)) * scale
        vals = f.values(probe, allow_nan=True)
        if not np.isfinite(vals).any():
            return _status_result(Status.ALL_INFINITE, math.inf, "no finite value near the starts")
        starts.append(probe[int(np.nanargmin(np.where(np.isnan(vals), math.inf, vals)))])

    sols = []
    for s in starts:
        if not np.isfinite(fun(s)):
            continue
        x = np.array(s, dtype=float)
        fx = fun(x)
        for _ in range(3):
            with warnings.catch_warnings(), np.errstate(all="ignore"):
                warnings.simplefilter("ignore", RuntimeWarning)
                res = optimize.minimize(fun, x, method="Nelder-Mead",
                                        options={"xatol": tol, "fatol": 1e-14, "maxiter": 4000 * dim,
                                                 "maxfev": 8000 * dim, "adaptive": dim > 2})
            if res.fun < -escape_threshold:
                return _status_result(Status.UNBOUNDED, -math.inf,
                                      f"value {res.fun:.6g} at {np.array2string(res.x, precision=6)}")
            improved = res.fun < fx - 1e-15 * (1 + abs(fx))
            x, fx = res.x, min(fx, float(res.fun))
            if not improved:
                break
        sols.append((fx, x))
    best = min(v for v, _ in sols)
    keep = [(v, x) for v, x in sorted(sols, key=lambda t: (t[0], tuple(t[1])))
            if v <= best + cluster_tol]
    pts = []
    for v, x in keep:
        if any(np.linalg.norm(x - p) <= max(cluster_tol, 10 * tol) for p in pts):
            continue
        pts.append(x)
    xb = pts[0]
    margin = box.interior_margin(xb) if box.contains_interior(xb) else 0.0
    near_open_edge = any(
        (not c and math.isfinite(a) and xb[i] - a < 1e-7) or (not d and math.isfinite(b) and b - xb[i] < 1e-7)
        for i, (a, b, c, d) in enumerate(zip(box.lo, box.hi, box.lo_closed, box.hi_closed)))
    if np.linalg.norm(xb) > 1e8 or (near_open_edge and margin < 1e-7):
        return _status_result(Status.NOT_ATTAINED, best, f"minimizing sequence escapes near {xb}")
    return ProxResult(ExtReal(best), tuple(pts), Status.NONEMPTY, "")


def minimize(obj, domain: Box | None = None, *, tol: float | None = None, anchors=(),
             n_starts: int = 8, seed: int = DEFAULT_SEED) -> ProxResult:
    """Dispatch to the 1-D or n-D minimizer by dimension."""
    box = domain if domain is not None else obj.domain
    if box.dim == 1:
        return minimize_scalar(obj, box, TOL_1D if tol is None else tol, anchors=anchors)
    return minimize_nd(obj, box, n_starts, TOL_ND if tol is None else tol, seed, anchors=anchors)


# ---------------------------------------------------------------- conjugates

def numeric_conjugate(f: ObjectiveFn, xi, search_box: Box | None = None,
                      tol: float | None = None, anchors=()) -> ExtReal:
    """sup_x <x, xi> - f(x), with +inf once the supremum escapes."""
    box = search_box if search_box is not None else f.domain
    xi = as_point(xi, f.dim)

    def shifted(xs):
        return f.values(xs, allow_nan=True) - xs @ xi

    h = ObjectiveFn(shifted, box, side="left", label=f"{f.label} - <., xi>", atoms=f.atoms)
    res = minimize(h, box, tol=tol, anchors=anchors)
    if res.status is Status.UNBOUNDED:
        return POS_INF
    if res.status is Status.ALL_INFINITE:
        return NEG_INF
    return -res.inf_value


def _lower_hull_1d(x: np.ndarray, v: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    order = np.argsort(x, kind="stable")
    xs, vs = x[order], v[order]
    fin = np.isfinite(vs)
    px, pv = xs[fin], vs[fin]
    hull: list[int] = []
    for k in range(px.size):
        while len(hull) >= 2:
            i, j = hull[-2], hull[-1]
            # keep j only if it lies strictly below the chord from i to k
            chord = pv[i] + (pv[k] - pv[i]) * (px[j] - px[i]) / (px[k] - px[i])
            if pv[j] < chord - rtol * (1.0 + abs(chord)):
                break
            hull.pop()
        hull.append(k)
    hx, hv = px[hull], pv[hull]
    out = np.full(xs.size, math.inf)
    inside = (xs >= hx[0]) & (xs <= hx[-1])
    out[inside] = np.interp(xs[inside], hx, hv)
    is_vertex = np.zeros(xs.size, dtype=bool)
    vert_idx = np.flatnonzero(fin)[hull]
    is_vertex[vert_idx] = True
    out[is_vertex] = vs[is_vertex]
    res = np.empty_like(out)
    res[order] = out
    return res


def grid_biconjugate(f: GridFn) -> GridFn:
    """Exact convex biconjugate of a function supported on finitely many points.

    The function is +inf off its points, so its biconjugate is the lower
    convex envelope of the finite-valued points. One dimension uses a
    monotone-chain hull; higher dimensions solve a small LP per point.
    """
    fin = np.isfinite(f.values)
    if not fin.any():
        raise ValueError("grid function is identically +inf")
    if f.points.shape[1] == 1:
        return GridFn(f.points, _lower_hull_1d(f.points[:, 0], f.values))
    P, V = f.points[fin], f.values[fin]
    out = np.empty(f.values.size)
    for i, p in enumerate(f.points):
        a_eq = np.vstack([P.T, np.ones(P.shape[0])])
        b_eq = np.append(p, 1.0)
        res = optimize.linprog(V, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
        out[i] = res.fun if res.status == 0 else math.inf
        if fin[i]:
            out[i] = min(out[i], f.values[i])
    return GridFn(f.points, out)


def finite_diff_grad(f: ObjectiveFn, x, h: float = 1e-6) -> np.ndarray:
    """Central differences; every stencil point must lie inside the domain."""
    p = as_point(x, f.dim)
    g = np.empty(f.dim)
    for i in range(f.dim):
        e = np.zeros(f.dim)
        e[i] = h
        if not (f.domain.contains_interior(p + e) and f.domain.contains_interior(p - e)):
            raise ValueError(f"stencil leaves the domain along coordinate {i} "
                             f"(margin {f.domain.interior_margin(p):.3g} <= h={h:g})")
        g[i] = (float(f(p + e)) - float(f(p - e))) / (2 * h)
    return g
