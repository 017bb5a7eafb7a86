"""Acquisition functions and their Lipschitz-aware variants.

All scoring functions accept scalars or numpy arrays (broadcast
elementwise) so the auxiliary optimizer can score a whole batch at once.
Zero posterior deviation is handled by explicit limits instead of jitter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .lipschitz import EnvelopeValues

INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

BASES = ("ucb", "ts", "ei", "pi")
LBO_MODES = ("off", "truncated", "ar")
_VALID = {
    "off": set(BASES),
    "truncated": {"ei", "pi", "ucb"},
    "ar": {"ucb", "ts"},
}


@dataclass(frozen=True)
class AcquisitionSpec:
    base: str
    lbo_mode: str = "off"

    def __post_init__(self):
        if self.base not in BASES:
            raise ValueError(f"unknown acquisition {self.base!r}; choose from {BASES}")
        if self.lbo_mode not in LBO_MODES:
            raise ValueError(f"unknown LBO mode {self.lbo_mode!r}; choose from {LBO_MODES}")
        if self.base not in _VALID[self.lbo_mode]:
            raise ValueError(f"{self.lbo_mode} mode is not defined for {self.base}")

    @property
    def label(self) -> str:
        name = self.base.upper()
        if self.lbo_mode == "truncated":
            return "T" + name
        if self.lbo_mode == "ar":
            return "AR-" + name
        return name


@dataclass(frozen=True)
class TruncationLimits:
    lo: float
    hi: float


def _phi(z):
    with np.errstate(over="ignore"):
        return INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def _ret(v):
    return float(v) if np.ndim(v) == 0 else v


def z_score(mu, sigma, v):
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("z_score needs sigma > 0")
    return _ret((np.asarray(mu, dtype=float) - v) / sigma)


def _z(mu, sigma, v):
    """z-score tolerant of infinite ``v`` and of sigma == 0 entries (filled with 0)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = (mu - v) / np.where(sigma > 0, sigma, 1.0)
    return np.where(sigma > 0, z, 0.0)


def ucb(mu, sigma, beta_t: float):
    if beta_t < 0:
        raise ValueError("beta must be nonnegative")
    return _ret(np.asarray(mu, dtype=float) + math.sqrt(beta_t) * np.asarray(sigma, dtype=float))


def ei(mu, sigma, y_star: float):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    z = _z(mu, sigma, y_star)
    with np.errstate(invalid="ignore"):
        val = sigma * (z * ndtr(z) + _phi(z))
    # subnormal sigma can overflow z; the sigma -> 0 limit is then exact to rounding
    use = (sigma > 0) & np.isfinite(val)
    return _ret(np.where(use, val, np.maximum(mu - y_star, 0.0)))


def pi(mu, sigma, y_star: float):
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    val = ndtr(_z(mu, sigma, y_star))
    return _ret(np.where(sigma > 0, val, (mu >= y_star).astype(float)))


def truncation_limits(env: EnvelopeValues, y_star: float) -> TruncationLimits:
    """Range of function values that can both occur and improve on ``y_star``.

    Upper end is always the envelope's upper bound; the lower end is
    ``y_star`` clamped into the envelope.
    """
    if env.lower > env.upper:
        raise ValueError("envelope lower bound exceeds upper bound")
    return TruncationLimits(min(max(y_star, env.lower), env.upper), env.upper)


def truncation_limits_batch(lower, upper, y_star: float):
    """Array form of :func:`truncation_limits`.

    Inconsistent envelopes (lower > upper, possible under an under-estimated
    constant) collapse to the empty range at ``upper``.
    """
    upper = np.asarray(upper, dtype=float)
    lo = np.minimum(np.maximum(y_star, lower), upper)
    return lo, upper


def _mass(z_lo, z_hi):
    """Phi(z_lo) - Phi(z_hi), evaluated on whichever tail keeps precision."""
    upper_tail = ndtr(-z_hi) - ndtr(-z_lo)
    lower_tail = ndtr(z_lo) - ndtr(z_hi)
    return np.where(z_hi > 0, upper_tail, lower_tail)


def tpi(mu, sigma, lo, hi):
    """Posterior probability that the value falls inside ``(lo, hi]``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("truncation limits need lo <= hi")
    z_lo, z_hi = _z(mu, sigma, lo), _z(mu, sigma, hi)
    val = np.clip(_mass(z_lo, z_hi), 0.0, 1.0)
    val = np.where(lo == hi, 0.0, val)
    limit = ((mu > lo) & (mu <= hi)).astype(float)
    return _ret(np.where(sigma > 0, val, limit))


def tei(mu, sigma, y_star: float, lo, hi):
    """Expected improvement over ``y_star`` restricted to values in ``[lo, hi]``.

    The improvement ``max(f - y_star, 0)`` is integrated against the posterior
    density over ``[max(lo, y_star), hi]``; with ``lo = y_star`` and
    ``hi = inf`` this is ordinary EI.
    """
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if np.any(lo > hi):
        raise ValueError("truncation limits need lo <= hi")
    a = np.maximum(lo, y_star)
    empty = a >= hi
    z = _z(mu, sigma, y_star)
    z_lo, z_hi = _z(mu, sigma, a), _z(mu, sigma, hi)
    with np.errstate(invalid="ignore"):
        val = sigma * (z * _mass(z_lo, z_hi) + _phi(z_lo) - _phi(z_hi))
    limit = np.where((mu >= a) & (mu <= hi), np.maximum(mu - y_star, 0.0), 0.0)
    val = np.where((sigma > 0) & np.isfinite(val), val, limit)
    return _ret(np.where(empty, 0.0, np.maximum(val, 0.0)))


def tucb(ucb_value, upper):
    return _ret(np.minimum(ucb_value, upper))


def accept_reject(g_value, lower, upper):
    """``g`` if it lies in the closed envelope ``[lower, upper]``, else ``-inf``."""
    g = np.asarray(g_value, dtype=float)
    ok = (g >= lower) & (g <= upper)
    return _ret(np.where(ok, g, -np.inf))


def beta_practical(t: int, d: int, c: float = 0.2) -> float:
    if t < 1:
        raise ValueError("t must be >= 1")
    return c * d * math.log(2 * t)


def pi_t(t: int) -> float:
    """Weights with sum over t of 1/pi_t equal to one."""
    return math.pi**2 * t**2 / 6.0


def beta_theorem(t: int, n_points: int, delta: float = 0.1, literal: bool = True) -> float:
    """Confidence parameter for a finite decision space of ``n_points``.

    ``literal=True`` reads the square root of beta as ``2 log(|D| pi_t / delta)``;
    ``literal=False`` uses beta itself equal to that quantity.
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    q = 2.0 * math.log(n_points * pi_t(t) / delta)
    return q * q if literal else q


def beta_schedule(t: int, d: int, kind: str = "practical", **kw) -> float:
    if kind == "practical":
        return beta_practical(t, d, kw.get("c", 0.2))
    if kind == "theorem":
        return beta_theorem(t, kw["n_points"], kw.get("delta", 0.1), kw.get("literal", True))
    if kind == "constant":
        return float(kw["beta"])
    raise ValueError(f"unknown beta schedule {kind!r}")
