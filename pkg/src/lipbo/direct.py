"""DIRECT (dividing rectangles) maximization over a box.

Works on the unit cube internally.  A rectangle is stored as its centre plus
an integer level per dimension: the side length along dimension ``j`` is
``3**-level[j]``.  Objectives are vectorized: they receive an ``(n, d)``
array of points in box coordinates and return ``n`` values.  Non-finite
values are treated as ``-inf``.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

EPSILON_DIRECT = 1e-4
DEFAULT_BUDGET = 2000


@dataclass(frozen=True)
class BoxDomain:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper bounds must be vectors of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box bounds must be finite")
        if not np.all(lo < hi):
            raise ValueError("need lower < upper in every dimension")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def from_unit(self, U) -> np.ndarray:
        return self.lower + np.asarray(U, dtype=float) * self.width

    def to_unit(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.lower) / self.width

    def contains(self, X, tol: float = 1e-12) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        slack = tol * self.width
        return np.all((X >= self.lower - slack) & (X <= self.upper + slack), axis=1)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + self.width * rng.random((n, self.dim))


@dataclass(frozen=True)
class Rectangle:
    """Unit-cube rectangle: centre, integer levels, and the objective at the centre."""

    center: np.ndarray
    levels: np.ndarray
    value: float

    @property
    def side_lengths(self) -> np.ndarray:
        return 3.0 ** -np.asarray(self.levels, dtype=float)

    @property
    def size(self) -> float:
        return _size(np.asarray(self.levels)[None, :])[0]


def _size(levels: np.ndarray) -> np.ndarray:
    """Half-diagonal of each rectangle."""
    return 0.5 * np.sqrt(np.sum(9.0 ** -levels.astype(float), axis=1))


def _clean(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    return np.where(np.isfinite(v) | (v == np.inf), v, -np.inf)


def potentially_optimal(sizes, values, f_best: float, epsilon: float = EPSILON_DIRECT) -> list[int]:
    """Indices of rectangles that could hold the maximum for some rate K > 0.

    A rectangle qualifies when it is the best of its size class (lowest index
    on ties) and some K > 0 puts ``value + K*size`` at or above every other
    rectangle and at or above ``f_best + epsilon*|f_best|``.  Rectangles with
    value ``-inf`` only qualify when every rectangle is ``-inf``, in which
    case the largest one (lowest index) is returned.
    """
    sizes = np.asarray(sizes, dtype=float)
    values = np.asarray(values, dtype=float)
    if sizes.size == 0:
        return []
    finite = np.isfinite(values)
    if not finite.any():
        return [int(np.flatnonzero(sizes == sizes.max())[0])]
    idx = np.flatnonzero(finite)
    keys = np.round(sizes[idx], 12)
    order = np.lexsort((-values[idx], keys))  # stable, so ties keep index order
    ks = keys[order]
    first = np.ones(len(ks), dtype=bool)
    first[1:] = ks[1:] != ks[:-1]
    reps = idx[order[first]]
    return _hull_select(reps, sizes[reps], values[reps], f_best, epsilon)


def _hull_select(reps, d, f, f_best: float, epsilon: float) -> list[int]:
    """K-interval test on one representative per size class, sorted by size."""
    m = len(reps)
    # slope[k, i] = (f_i - f_k) / (d_k - d_i): a lower bound on K for smaller i,
    # an upper bound for larger i
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = (f[None, :] - f[:, None]) / (d[:, None] - d[None, :])
    tri = np.tri(m, k=-1, dtype=bool)
    k_lo = np.max(np.where(tri, slope, -np.inf), axis=1, initial=0.0)
    k_hi = np.min(np.where(tri.T, slope, np.inf), axis=1, initial=np.inf)
    target = f_best + epsilon * abs(f_best)
    with np.errstate(divide="ignore", invalid="ignore"):
        k_eps = np.where(d > 0, (target - f) / d, np.where(f >= target, -np.inf, np.inf))
    k_lo = np.maximum(k_lo, k_eps)
    ok = (k_hi > 0) & (k_lo <= k_hi)
    return sorted(int(i) for i in np.asarray(reps)[ok])


class _SizeClasses:
    """Best rectangle per size class, kept up to date as rectangles shrink.

    One heap of ``(-value, index)`` per class; entries whose rectangle has
    since moved to a smaller class are dropped lazily.  Gives the same
    representatives as the sort in :func:`potentially_optimal`.
    """

    def __init__(self):
        self.heaps: dict[float, list] = {}
        self.key_of: dict[int, float] = {}
        self.any_finite = False

    def add(self, idx: int, size: float, value: float):
        key = round(size, 12)
        self.key_of[idx] = key
        if value > -math.inf:
            heapq.heappush(self.heaps.setdefault(key, []), (-value, idx))
            self.any_finite = True

    def reps(self):
        out = []
        for key in sorted(self.heaps):
            h = self.heaps[key]
            while h and self.key_of[h[0][1]] != key:
                heapq.heappop(h)
            if h:
                out.append(h[0][1])
            else:
                del self.heaps[key]
        return out


def _plan(center: np.ndarray, levels: np.ndarray):
    """Split dimensions (all longest sides) and the probe points for one rectangle."""
    low = levels.min()
    dims = np.flatnonzero(levels == low)
    delta = 3.0 ** -(low + 1.0)
    k = len(dims)
    pts = np.repeat(center[None, :], 2 * k, axis=0)
    rows = np.arange(2 * k)
    pts[rows, np.repeat(dims, 2)] += np.tile([delta, -delta], k)
    return dims, pts


def _finish(rect_levels: np.ndarray, dims: np.ndarray, pts: np.ndarray, vals: np.ndarray):
    """Children levels after splitting along ``dims`` in order of best probe first.

    Returns (parent_levels, [(point, levels, value), ...]).
    """
    best = np.maximum(vals[0::2], vals[1::2])
    order = sorted(range(len(dims)), key=lambda i: (-best[i], dims[i]))
    levels = rect_levels.copy()
    children = []
    for i in order:
        levels[dims[i]] += 1
        for k in (2 * i, 2 * i + 1):
            children.append((pts[k], levels.copy(), vals[k]))
    return levels, children


def trisect(rect: Rectangle, objective, box: BoxDomain | None = None) -> list[Rectangle]:
    """Split ``rect`` along its longest sides; returns the shrunken parent first.

    ``objective`` is called once on the new centres (mapped into ``box`` when given).
    """
    center = np.asarray(rect.center, dtype=float)
    dims, pts = _plan(center, np.asarray(rect.levels))
    X = box.from_unit(pts) if box is not None else pts
    vals = _clean(objective(X))
    levels, children = _finish(np.asarray(rect.levels).copy(), dims, pts, vals)
    out = [Rectangle(center, levels, rect.value)]
    out += [Rectangle(p, lv, float(v)) for p, lv, v in children]
    return out


@dataclass
class DirectResult:
    x: np.ndarray
    value: float
    n_evals: int
    history: list  # best value after each DIRECT iteration
    first_point: np.ndarray


def _size_py(levels) -> float:
    return 0.5 * math.sqrt(sum(9.0 ** -lv for lv in levels))


def _hull_select_py(reps, d, f, f_best: float, epsilon: float) -> list[int]:
    """Linear-time twin of :func:`_hull_select` for the representative lists DIRECT keeps.

    Only points on the upper hull to the right of the best representative can
    admit K > 0, and for those the K interval is bounded by the hull
    neighbours.  Collinear hull points are kept, matching the closed
    intervals of the reference test.
    """
    m = len(reps)
    start = 0
    for k in range(1, m):
        if f[k] >= f[start]:
            start = k
    hull = []
    for k in range(start, m):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it sits strictly below the chord from a to k
            if (f[b] - f[a]) * (d[k] - d[a]) < (f[k] - f[a]) * (d[b] - d[a]):
                hull.pop()
            else:
                break
        hull.append(k)
    target = f_best + epsilon * abs(f_best)
    out = []
    for pos, k in enumerate(hull):
        lo = (target - f[k]) / d[k]
        if pos > 0:
            i = hull[pos - 1]
            lo = max(lo, (f[i] - f[k]) / (d[k] - d[i]))
        hi = math.inf
        if pos + 1 < len(hull):
            i = hull[pos + 1]
            hi = (f[i] - f[k]) / (d[k] - d[i])
        if hi > 0 and lo <= hi:
            out.append(reps[k])
    return sorted(out)


def direct_maximize(objective, box: BoxDomain, budget: int = DEFAULT_BUDGET,
                    epsilon: float = EPSILON_DIRECT, max_iters: int | None = None) -> DirectResult:
    """Maximize ``objective`` over ``box`` with at most ``budget`` evaluations."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    d = box.dim
    eye = np.eye(d)
    cap = budget + 2 * d + 1
    centers = np.empty((cap, d))
    values = np.empty(cap)
    levels = [[0] * d]
    sizes = [_size_py(levels[0])]
    centers[0] = 0.5
    first = box.from_unit(centers[:1])
    values[0] = _clean(objective(first))[0]
    vals_py = [float(values[0])]
    classes = _SizeClasses()
    classes.add(0, sizes[0], vals_py[0])
    f_best = vals_py[0]
    n = 1
    history = [f_best]
    it = 0
    while n < budget and (max_iters is None or it < max_iters):
        it += 1
        if classes.any_finite:
            reps = classes.reps()
            chosen = _hull_select_py(reps, [sizes[i] for i in reps], [vals_py[i] for i in reps],
                                     f_best, epsilon)
        else:
            chosen = potentially_optimal(np.array(sizes), values[:n], 0.0, epsilon)
        plans, batch = [], []
        remaining = budget - n
        for idx in chosen:
            lv = levels[idx]
            low = min(lv)
            dims = [j for j in range(d) if lv[j] == low]
            k = len(dims)
            if 2 * k > remaining:
                break
            remaining -= 2 * k
            step = 3.0 ** -(low + 1.0) * eye[dims]
            pts = np.repeat(centers[idx][None, :], 2 * k, axis=0)
            pts[0::2] += step
            pts[1::2] -= step
            plans.append((idx, dims, pts))
            batch.append(pts)
        if not plans:
            break
        allvals = _clean(objective(box.from_unit(np.vstack(batch))))
        pos = 0
        for idx, dims, pts in plans:
            k = len(dims)
            vals = allvals[pos:pos + 2 * k].tolist()
            pos += 2 * k
            best = [max(vals[2 * i], vals[2 * i + 1]) for i in range(k)]
            lv = list(levels[idx])
            for i in sorted(range(k), key=lambda i: (-best[i], dims[i])):
                lv[dims[i]] += 1
                size = _size_py(lv)
                for c in (2 * i, 2 * i + 1):
                    centers[n] = pts[c]
                    values[n] = vals[c]
                    levels.append(list(lv))
                    sizes.append(size)
                    vals_py.append(vals[c])
                    classes.add(n, size, vals[c])
                    n += 1
            levels[idx] = lv
            sizes[idx] = _size_py(lv)
            classes.add(idx, sizes[idx], vals_py[idx])
        f_best = max(f_best, max(allvals.tolist()))
        history.append(f_best)
    best = int(np.argmax(values[:n]))
    return DirectResult(box.from_unit(centers[best]), float(values[best]), n, history, first[0])


def random_candidate_maximize(objective, box: BoxDomain, n: int, seed=None):
    """Best of ``n`` uniform points; returns ``(x, value)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    X = box.sample(rng, n)
    vals = _clean(objective(X))
    i = int(np.argmax(vals))
    return X[i], float(vals[i])
