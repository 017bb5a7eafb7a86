"""Synthetic global-optimization benchmarks, posed as maximization problems.

Closed forms and domains follow Jamil & Yang (2013), "A literature survey of
benchmark functions for global optimization problems".  Every classical
minimization form is negated, so ``ref_optimum`` is the negated minimum.
Reference optima were established with a dense-grid/multistart oracle (see
``tests/test_benchmarks.py``) and are re-checked by
:func:`reference_optima_audit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .direct import BoxDomain


class BenchmarkError(ValueError):
    pass


class OutOfBoxError(BenchmarkError):
    pass


@dataclass(frozen=True)
class BenchmarkFn:
    name: str
    dim: int
    box: BoxDomain
    fn: Callable[[np.ndarray], np.ndarray]
    ref_optimum: float
    log_scale_error: bool = False

    def __call__(self, X):
        return self.evaluate(X)

    def evaluate(self, X, check: bool = True):
        """Value(s) at ``X``: a single point returns a float, a 2-d array returns an array."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if X2.shape[1] != self.dim:
            raise BenchmarkError(f"{self.name} expects {self.dim} coordinates, got {X2.shape[1]}")
        if check:
            inside = self.box.contains(X2)
            if not inside.all():
                bad = X2[np.flatnonzero(~inside)[0]]
                raise OutOfBoxError(f"{self.name}: point {bad} outside box")
        vals = self.fn(X2)
        return float(vals[0]) if single else vals


# --- closed forms (minimization convention; negated at registration) ---------


def branin(X):
    x1, x2 = X[:, 0], X[:, 1]
    a, b, c = 1.0, 5.1 / (4 * math.pi**2), 5.0 / math.pi
    r, s, t = 6.0, 10.0, 1.0 / (8 * math.pi)
    return a * (x2 - b * x1**2 + c * x1 - r) ** 2 + s * (1 - t) * np.cos(x1) + s


def six_hump_camel(X):
    x1, x2 = X[:, 0], X[:, 1]
    return (4 - 2.1 * x1**2 + x1**4 / 3) * x1**2 + x1 * x2 + (4 * x2**2 - 4) * x2**2


def goldstein_price(X):
    x1, x2 = X[:, 0], X[:, 1]
    a = 1 + (x1 + x2 + 1) ** 2 * (19 - 14 * x1 + 3 * x1**2 - 14 * x2 + 6 * x1 * x2 + 3 * x2**2)
    b = 30 + (2 * x1 - 3 * x2) ** 2 * (18 - 32 * x1 + 12 * x1**2 + 48 * x2 - 36 * x1 * x2 + 27 * x2**2)
    return a * b


def michalewicz(X, m: int = 10):
    i = np.arange(1, X.shape[1] + 1)
    return -np.sum(np.sin(X) * np.sin(i * X**2 / math.pi) ** (2 * m), axis=1)


_H3_A = np.array([[3.0, 10, 30], [0.1, 10, 35], [3.0, 10, 30], [0.1, 10, 35]])
_H3_P = 1e-4 * np.array([[3689, 1170, 2673], [4699, 4387, 7470], [1091, 8732, 5547], [381, 5743, 8828]])
_H6_A = np.array([
    [10, 3, 17, 3.5, 1.7, 8],
    [0.05, 10, 17, 0.1, 8, 14],
    [3, 3.5, 1.7, 10, 17, 8],
    [17, 8, 0.05, 10, 0.1, 14],
])
_H6_P = 1e-4 * np.array([
    [1312, 1696, 5569, 124, 8283, 5886],
    [2329, 4135, 8307, 3736, 1004, 9991],
    [2348, 1451, 3522, 2883, 3047, 6650],
    [4047, 8828, 8732, 5743, 1091, 381],
])
_H_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])


def _hartmann(X, A, P):
    inner = np.sum(A[None, :, :] * (X[:, None, :] - P[None, :, :]) ** 2, axis=2)
    return -np.sum(_H_ALPHA * np.exp(-inner), axis=1)


def hartmann3(X):
    return _hartmann(X, _H3_A, _H3_P)


def hartmann6(X):
    return _hartmann(X, _H6_A, _H6_P)


def rosenbrock(X):
    return np.sum(100.0 * (X[:, 1:] - X[:, :-1] ** 2) ** 2 + (X[:, :-1] - 1.0) ** 2, axis=1)


def _negate(f):
    return lambda X: -f(X)


def _box(lo, hi, d):
    return BoxDomain(np.full(d, float(lo)), np.full(d, float(hi)))


# Negated minima from the audit oracle (grid + multistart local refinement).
_REGISTRY_SPECS = {
    "branin-2": (branin, BoxDomain(np.array([-5.0, 0.0]), np.array([10.0, 15.0])), -0.39788735772973816, False),
    "camel-2": (six_hump_camel, _box(-5, 5, 2), 1.0316284534898774, False),
    "goldstein-2": (goldstein_price, _box(-2, 2, 2), -3.0, True),
    "michalewicz-2": (michalewicz, _box(0, math.pi, 2), 1.8013034100985532, False),
    "michalewicz-5": (michalewicz, _box(0, math.pi, 5), 4.687658179088144, False),
    "michalewicz-10": (michalewicz, _box(0, math.pi, 10), 9.660151715641339, False),
    "hartmann-3": (hartmann3, _box(0, 1, 3), 3.862779787332663, False),
    "hartmann-6": (hartmann6, _box(0, 1, 6), 3.322368011415515, False),
    "rosenbrock-2": (rosenbrock, _box(-30, 30, 2), 0.0, True),
    "rosenbrock-3": (rosenbrock, _box(-30, 30, 3), 0.0, True),
    "rosenbrock-4": (rosenbrock, _box(-30, 30, 4), 0.0, True),
    "rosenbrock-5": (rosenbrock, _box(-30, 30, 5), 0.0, True),
}

REGISTRY = tuple(_REGISTRY_SPECS)


def lookup(name: str) -> BenchmarkFn:
    try:
        f, box, opt, log_scale = _REGISTRY_SPECS[name]
    except KeyError:
        raise BenchmarkError(f"unknown benchmark {name!r}; available: {', '.join(REGISTRY)}") from None
    return BenchmarkFn(name, box.dim, box, _negate(f), opt, log_scale)


def evaluate(fn: BenchmarkFn, x):
    return fn.evaluate(x)


@dataclass
class AuditReport:
    name: str
    ref_optimum: float
    max_found: float
    argmax: np.ndarray
    n_evaluated: int
    passed: bool

    @property
    def gap(self) -> float:
        return self.ref_optimum - self.max_found

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name:16s} ref={self.ref_optimum:.10g} max_found={self.max_found:.10g} "
                f"gap={self.gap:.3e} n={self.n_evaluated}")


def reference_optima_audit(fn: BenchmarkFn, n: int = 1_000_000, seed=0, tol: float = 1e-9,
                           chunk: int = 100_000) -> AuditReport:
    """Scan ``n`` uniform points plus a regular grid; fail if any exceeds ``ref_optimum``."""
    rng = np.random.default_rng(seed)
    best, arg, count = -math.inf, None, 0

    def scan(X):
        nonlocal best, arg, count
        v = fn.fn(X)
        i = int(np.argmax(v))
        count += X.shape[0]
        if v[i] > best:
            best, arg = float(v[i]), X[i].copy()

    done = 0
    while done < n:
        m = min(chunk, n - done)
        scan(fn.box.sample(rng, m))
        done += m
    per_axis = max(2, int(round(min(n, 1_000_000) ** (1.0 / fn.dim))))
    if per_axis ** fn.dim <= 2_000_000:
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(fn.box.lower, fn.box.upper)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, fn.dim)
        for s in range(0, grid.shape[0], chunk):
            scan(grid[s:s + chunk])
    return AuditReport(fn.name, fn.ref_optimum, best, arg, count, best <= fn.ref_optimum + tol)
