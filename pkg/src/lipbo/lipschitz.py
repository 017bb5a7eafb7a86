"""Lipschitz envelopes, pruning, and Lipschitz-constant estimates.

Distances are Euclidean in the raw coordinates of the problem box.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

KAPPA_DEFAULT = 10.0
DUPLICATE_TOL = 1e-12
EXACT_PAIRS_MAX = 20_000
KNN_NEIGHBOURS = 32


class DegenerateHistoryWarning(UserWarning):
    """Slope estimate had no pair of distinct points, or saw coincident points with different values."""


@dataclass(frozen=True)
class EnvelopeValues:
    lower: float
    upper: float


@dataclass(frozen=True)
class LipschitzMode:
    """``kind`` is one of ``"known"``, ``"growing"``, ``"true"``.

    ``value`` is the constant for known/true modes and kappa for growing mode.
    """

    kind: str
    value: float = KAPPA_DEFAULT

    def __post_init__(self):
        if self.kind not in ("known", "growing", "true"):
            raise ValueError(f"unknown Lipschitz mode {self.kind!r}")
        if not self.value >= 0:
            raise ValueError("Lipschitz mode value must be nonnegative")


@dataclass(frozen=True)
class LipschitzState:
    mode: LipschitzMode
    current_value: float
    iteration: int


def _hist(X, y):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} points but {y.shape[0]} values")
    return X, y


def envelope_batch(X, y, L: float, Xq):
    """Lower and upper envelopes at each row of ``Xq``.

    ``L = inf`` gives the uninformative envelope ``(-inf, inf)``.
    """
    X, y = _hist(X, y)
    if X.shape[0] == 0:
        raise ValueError("envelope needs a nonempty history")
    if not L >= 0:
        raise ValueError(f"Lipschitz constant must be nonnegative, got {L}")
    Xq = np.asarray(Xq, dtype=float)
    if Xq.ndim == 1:
        Xq = Xq[None, :] if Xq.shape[0] == X.shape[1] else Xq[:, None]
    if math.isinf(L):
        n = Xq.shape[0]
        return np.full(n, -np.inf), np.full(n, np.inf)
    D = cdist(Xq, X)
    lower = np.max(y[None, :] - L * D, axis=1)
    upper = np.min(y[None, :] + L * D, axis=1)
    return lower, upper


def envelope(X, y, L: float, x) -> EnvelopeValues:
    lo, hi = envelope_batch(X, y, L, np.atleast_2d(np.asarray(x, dtype=float)))
    return EnvelopeValues(float(lo[0]), float(hi[0]))


def is_pruned(env: EnvelopeValues, y_star: float) -> bool:
    """True when no value inside the envelope can beat ``y_star``."""
    return env.upper <= y_star


def _pair_slopes(Xa, ya, Xb, yb):
    D = cdist(Xa, Xb)
    dy = np.abs(ya[:, None] - yb[None, :])
    close = D < DUPLICATE_TOL
    flagged = bool(np.any(close & (dy > 0)))
    D = np.where(close, np.inf, D)
    return float(np.max(dy / D, initial=0.0)), flagged


def estimate_L_lb(X, y, warn: bool = True) -> float:
    """Largest observed slope ``|y_i - y_j| / ||x_i - x_j||`` over distinct pairs.

    Coincident pairs (closer than 1e-12) are skipped.  Returns 0 when there is
    no usable pair.
    """
    X, y = _hist(X, y)
    n = X.shape[0]
    best, flagged = 0.0, False
    for start in range(0, n, 2048):
        stop = min(start + 2048, n)
        s, f = _pair_slopes(X[start:stop], y[start:stop], X[:stop], y[:stop])
        best, flagged = max(best, s), flagged or f
    if warn and flagged:
        warnings.warn("coincident points with different values were excluded", DegenerateHistoryWarning)
    if warn and n >= 2 and best == 0.0 and np.all(cdist(X[:1], X) < DUPLICATE_TOL):
        warnings.warn("all points coincide; slope estimate is 0", DegenerateHistoryWarning)
    return best


class RunningSlope:
    """Incremental version of :func:`estimate_L_lb` (O(t) per added point)."""

    def __init__(self, dim: int):
        self.X = np.empty((0, dim))
        self.y = np.empty(0)
        self.value = 0.0

    def add(self, x, y: float) -> float:
        x = np.asarray(x, dtype=float).reshape(1, -1)
        if self.y.size:
            s, _ = _pair_slopes(x, np.array([y]), self.X, self.y)
            self.value = max(self.value, s)
        self.X = np.vstack([self.X, x])
        self.y = np.append(self.y, y)
        return self.value


def growing_L(t: int, L_lb: float, kappa: float = KAPPA_DEFAULT) -> float:
    """Over-estimate ``kappa * t * L_lb`` that grows with the iteration count."""
    if t < 1 or kappa <= 0 or L_lb < 0:
        raise ValueError("need t >= 1, kappa > 0, L_lb >= 0")
    return kappa * t * L_lb


def estimate_true_L(f, lower, upper, n: int = 100_000, seed=0) -> float:
    """Offline slope estimate from ``n`` uniform evaluations of ``f`` in the box.

    ``f`` maps an ``(n, d)`` array to ``n`` values.  Up to 20,000 samples all
    pairs are compared; above that only each point's 32 nearest neighbours,
    which is where the largest slopes of a Lipschitz function are found.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    rng = np.random.default_rng(seed)
    X = lower + (upper - lower) * rng.random((n, lower.shape[0]))
    y = np.asarray(f(X), dtype=float)
    if n <= EXACT_PAIRS_MAX:
        return estimate_L_lb(X, y, warn=False)
    tree = cKDTree(X)
    dist, idx = tree.query(X, k=KNN_NEIGHBOURS + 1)
    dist, idx = dist[:, 1:], idx[:, 1:]
    dy = np.abs(y[:, None] - y[idx])
    ok = dist >= DUPLICATE_TOL
    return float(np.max(np.where(ok, dy / np.where(ok, dist, 1.0), 0.0)))
