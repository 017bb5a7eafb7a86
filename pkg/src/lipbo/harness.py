"""Experiment engine: BO / LBO / random-search loops over the benchmark suite.

One run = one (config, seed).  All randomness for a run comes from a single
``np.random.default_rng(seed)`` consumed in this order: initial design, then
per iteration the exploration draws, TS candidates and the TS sample.
Hyperparameter restarts use their own stream keyed on (seed, iteration) so
they never disturb the main one.
"""

from __future__ import annotations

import configparser
import logging
import math
import time
from dataclasses import dataclass, field, asdict, fields

import numpy as np

from . import acquisition as acq
from .benchmarks import BenchmarkFn, lookup
from .direct import DEFAULT_BUDGET, direct_maximize
from .gp import DEFAULT_NOISE_SD, FitConfig, KernelParams, build_posterior, fit_hyperparams, sample_joint
from .lipschitz import KAPPA_DEFAULT, RunningSlope, envelope_batch, estimate_true_L, growing_L

log = logging.getLogger(__name__)

STD_FLOOR = 1e-12
REDRAW_CAP = 10_000
REDRAW_CHUNK = 100
METHODS = ("ucb", "ts", "ei", "pi", "random")


@dataclass
class RunConfig:
    benchmark: str
    acquisition: str = "ei"
    lbo: str = "off"
    l_mode: str = "growing"
    kappa: float = KAPPA_DEFAULT
    iterations: int = 100
    seeds: tuple[int, ...] = tuple(range(1, 11))
    init_points: int = 2
    explore_every: int = 4
    direct_budget: int = DEFAULT_BUDGET
    ts_candidates: int = 1000
    beta: str = "practical"
    beta_c: float = 0.2
    noise_sd: float = DEFAULT_NOISE_SD
    n_starts: int = 5
    true_l_samples: int = 100_000
    out: str | None = None

    def __post_init__(self):
        self.seeds = tuple(int(s) for s in self.seeds)
        if self.acquisition not in METHODS:
            raise ValueError(f"unknown acquisition {self.acquisition!r}; choose from {METHODS}")
        if self.acquisition == "random":
            if self.lbo != "off":
                raise ValueError("random search has no LBO variant")
        else:
            acq.AcquisitionSpec(self.acquisition, self.lbo)
        if not self.iterations >= self.init_points >= 1:
            raise ValueError("need iterations >= init_points >= 1")
        if self.explore_every == 1 or self.explore_every < 0:
            raise ValueError("explore_every must be 0 (disabled) or >= 2")
        parse_l_mode(self.l_mode)
        if self.beta != "practical":
            float(self.beta)

    @property
    def uses_lipschitz(self) -> bool:
        return self.lbo != "off"

    @property
    def method(self) -> str:
        if self.acquisition == "random":
            return "random"
        label = acq.AcquisitionSpec(self.acquisition, self.lbo).label
        if self.uses_lipschitz and self.l_mode != "growing":
            label += "[L=" + self.l_mode + "]"
        return label


def parse_l_mode(text: str):
    """``growing`` | ``known:<value>`` | ``true`` -> (kind, value or None)."""
    if text == "growing":
        return "growing", None
    if text == "true":
        return "true", None
    if text.startswith("known:"):
        v = float(text.split(":", 1)[1])
        if not v > 0:
            raise ValueError("known Lipschitz constant must be positive")
        return "known", v
    raise ValueError(f"bad Lipschitz mode {text!r}; use growing, known:<v> or true")


# --------------------------------------------------------------------------
# standardization
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StandardizationState:
    mean: float
    std: float

    def apply(self, values):
        return (np.asarray(values, dtype=float) - self.mean) / self.std

    def invert(self, values):
        return np.asarray(values, dtype=float) * self.std + self.mean


def standardize(values):
    """Centre and scale by the population standard deviation (fallback 1)."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("cannot standardize an empty list")
    mean = float(np.mean(v))
    std = float(np.std(v))
    if std < STD_FLOOR:
        std = 1.0
    st = StandardizationState(mean, std)
    return st, st.apply(v)


# --------------------------------------------------------------------------
# traces
# --------------------------------------------------------------------------


@dataclass
class IterationRecord:
    t: int
    x: list
    y: float
    best_so_far: float
    L_hat: float | None
    acq_value: float | None
    selection_kind: str
    wall_time: float = 0.0


@dataclass
class RunTrace:
    benchmark: str
    method: str
    seed: int
    ref_optimum: float
    records: list = field(default_factory=list)
    failed: bool = False
    error: str | None = None

    @property
    def best_so_far(self) -> np.ndarray:
        return np.array([r.best_so_far for r in self.records])

    @property
    def abs_error(self) -> np.ndarray:
        return np.maximum(self.ref_optimum - self.best_so_far, 0.0)

    @property
    def final_error(self) -> float:
        return float(self.abs_error[-1])


# --------------------------------------------------------------------------
# the loop
# --------------------------------------------------------------------------


@dataclass
class LoopState:
    """Everything ``select_next`` needs at one iteration."""

    bench: BenchmarkFn
    X: np.ndarray
    y: np.ndarray
    t: int  # 1-based index of the evaluation being chosen
    rng: np.random.Generator
    seed: int
    slope: RunningSlope
    L_raw: float = math.inf
    params: KernelParams | None = None
    true_L: float | None = None

    @property
    def std_state(self) -> StandardizationState:
        return standardize(self.y)[0]


def current_L(state: LoopState, cfg: RunConfig) -> float:
    """Lipschitz estimate in raw units; ``inf`` means no usable information."""
    if not cfg.uses_lipschitz:
        return math.inf
    kind, value = parse_l_mode(cfg.l_mode)
    if kind == "known":
        return value
    if kind == "true":
        return state.true_L
    L = growing_L(max(len(state.y), 1), state.slope.value, cfg.kappa)
    return L if L > 0 else math.inf


def _beta(cfg: RunConfig, t: int, d: int) -> float:
    if cfg.beta == "practical":
        return acq.beta_practical(t, d, cfg.beta_c)
    return float(cfg.beta)


def _random_point(state: LoopState, cfg: RunConfig, ys, L_std):
    """Uniform draw; under LBO, redraw (without evaluating f) until it can improve."""
    box = state.bench.box
    if math.isinf(L_std):
        return box.sample(state.rng, 1)[0], "random"
    y_star = float(np.max(ys))
    drawn = 0
    last = None
    while drawn < REDRAW_CAP:
        m = min(REDRAW_CHUNK, REDRAW_CAP - drawn)
        saved = state.rng.bit_generator.state
        C = box.sample(state.rng, m)
        _, upper = envelope_batch(state.X, ys, L_std, C)
        ok = np.flatnonzero(upper > y_star)
        if ok.size:
            # consume only the draws actually used, so an unfiltered run and a
            # filtered one stay on the same stream when nothing is rejected
            state.rng.bit_generator.state = saved
            box.sample(state.rng, int(ok[0]) + 1)
            return C[ok[0]], "random_lipschitz_filtered"
        drawn += m
        last = C[-1]
    log.warning("redraw cap reached at t=%d; accepting last candidate", state.t)
    return last, "random_lipschitz_filtered"


def _fit(state: LoopState, cfg: RunConfig, ys):
    fc = FitConfig(
        widths=tuple(state.bench.box.width), noise_sd=cfg.noise_sd, n_starts=cfg.n_starts,
        seed=np.random.SeedSequence([state.seed, state.t]), init=state.params,
    )
    state.params = fit_hyperparams(state.X, ys, fc)
    return build_posterior(state.X, ys, state.params)


def acquisition_objective(post, cfg: RunConfig, X_hist, ys, L_std: float, t: int):
    """Vectorized acquisition over raw-coordinate points (standardized value units)."""
    y_star = float(np.max(ys))
    d = X_hist.shape[1]
    beta = _beta(cfg, t, d) if cfg.acquisition == "ucb" else 0.0
    lip = cfg.uses_lipschitz and not math.isinf(L_std)

    def objective(X):
        mu, sd = post.predict_batch(X)
        if lip:
            lower, upper = envelope_batch(X_hist, ys, L_std, X)
        if cfg.acquisition == "ucb":
            v = acq.ucb(mu, sd, beta)
            if lip and cfg.lbo == "truncated":
                v = acq.tucb(v, upper)
            elif lip and cfg.lbo == "ar":
                v = acq.accept_reject(v, lower, upper)
            return v
        if cfg.acquisition == "ei":
            if lip:
                lo, hi = acq.truncation_limits_batch(lower, upper, y_star)
                return acq.tei(mu, sd, y_star, lo, hi)
            return acq.ei(mu, sd, y_star)
        if cfg.acquisition == "pi":
            if lip:
                lo, hi = acq.truncation_limits_batch(lower, upper, y_star)
                return acq.tpi(mu, sd, lo, hi)
            return acq.pi(mu, sd, y_star)
        raise ValueError(f"{cfg.acquisition} is not optimized with DIRECT")

    return objective


def _thompson(state: LoopState, cfg: RunConfig, post, ys, L_std):
    box = state.bench.box
    C = np.vstack([box.sample(state.rng, cfg.ts_candidates), state.X[np.argmax(state.y)][None, :]])
    if cfg.ts_candidates == 1:
        C = C[:1]
    f_tilde = sample_joint(post, C, state.rng)
    score = f_tilde
    if cfg.lbo == "ar" and not math.isinf(L_std):
        lower, upper = envelope_batch(state.X, ys, L_std, C)
        score = acq.accept_reject(f_tilde, lower, upper)
        if not np.isfinite(score).any():
            log.warning("all TS candidates rejected at t=%d; using unfiltered sample", state.t)
            score = f_tilde
    i = int(np.argmax(score))
    return C[i], "acq", float(f_tilde[i])


def select_next(state: LoopState, cfg: RunConfig):
    """Choose the next point; returns ``(x, selection_kind, acq_value)``."""
    st, ys = standardize(state.y)
    L_std = state.L_raw / st.std
    explore = cfg.explore_every and state.t % cfg.explore_every == 0
    if cfg.acquisition == "random" or explore:
        x, kind = _random_point(state, cfg, ys, L_std)
        return x, kind, None
    post = _fit(state, cfg, ys)
    if cfg.acquisition == "ts":
        return _thompson(state, cfg, post, ys, L_std)
    obj = acquisition_objective(post, cfg, state.X, ys, L_std, state.t)
    res = direct_maximize(obj, state.bench.box, cfg.direct_budget)
    informative = res.value > 0 if cfg.acquisition in ("ei", "pi") else np.isfinite(res.value)
    if not informative:
        x, kind = _random_point(state, cfg, ys, L_std)
        return x, kind, None
    return res.x, "acq", float(res.value)


def run_single(cfg: RunConfig, seed: int, bench: BenchmarkFn | None = None,
               true_L: float | None = None) -> RunTrace:
    bench = bench or lookup(cfg.benchmark)
    trace = RunTrace(bench.name, cfg.method, seed, bench.ref_optimum)
    rng = np.random.default_rng(seed)
    slope = RunningSlope(bench.dim)
    best = -math.inf
    try:
        X = bench.box.sample(rng, cfg.init_points)
        y = np.asarray(bench.evaluate(X), dtype=float)
        for i in range(cfg.init_points):
            slope.add(X[i], y[i])
            best = max(best, float(y[i]))
            trace.records.append(IterationRecord(i + 1, X[i].tolist(), float(y[i]), best, None, None, "init"))
        state = LoopState(bench, X, y, cfg.init_points + 1, rng, seed, slope, true_L=true_L)
        for t in range(cfg.init_points + 1, cfg.iterations + 1):
            t0 = time.perf_counter()
            state.t = t
            state.L_raw = current_L(state, cfg)
            x, kind, value = select_next(state, cfg)
            x = np.clip(x, bench.box.lower, bench.box.upper)
            fx = float(bench.evaluate(x))
            state.X = np.vstack([state.X, x])
            state.y = np.append(state.y, fx)
            slope.add(x, fx)
            best = max(best, fx)
            L_rec = None if math.isinf(state.L_raw) else float(state.L_raw)
            trace.records.append(IterationRecord(t, x.tolist(), fx, best, L_rec, value, kind,
                                                 time.perf_counter() - t0))
    except Exception as exc:  # one bad seed must not sink the batch
        log.exception("run %s seed %d failed", cfg.method, seed)
        trace.failed = True
        trace.error = f"{type(exc).__name__}: {exc}"
    return trace


def run_experiment(cfg: RunConfig, progress=None) -> list[RunTrace]:
    bench = lookup(cfg.benchmark)
    true_L = None
    if cfg.uses_lipschitz and parse_l_mode(cfg.l_mode)[0] == "true":
        true_L = estimate_true_L(bench.fn, bench.box.lower, bench.box.upper, cfg.true_l_samples, seed=0)
    traces = []
    for seed in cfg.seeds:
        traces.append(run_single(cfg, seed, bench, true_L))
        if progress:
            progress(traces[-1])
    return traces


# --------------------------------------------------------------------------
# aggregation
# --------------------------------------------------------------------------


@dataclass
class SummaryRow:
    iteration: int
    method: str
    mean_abs_error: float
    std_abs_error: float
    q10: float
    q90: float


def aggregate(traces) -> list[SummaryRow]:
    """Per-iteration mean, population std and 10th/90th percentiles of the error, per method."""
    rows = []
    by_method: dict[str, list] = {}
    for tr in traces:
        if not tr.failed:
            by_method.setdefault(tr.method, []).append(tr.abs_error)
    for method, errs in by_method.items():
        n = min(len(e) for e in errs)
        E = np.vstack([e[:n] for e in errs])
        mean, std = E.mean(axis=0), E.std(axis=0)
        q10, q90 = np.percentile(E, [10, 90], axis=0)
        for i in range(n):
            rows.append(SummaryRow(i + 1, method, float(mean[i]), float(std[i]), float(q10[i]), float(q90[i])))
    return rows


def config_fields() -> dict:
    return {f.name: f.type for f in fields(RunConfig)}


def load_config_file(path) -> dict:
    """``key = value`` file (``#`` comments, optional ``[run]`` header) into RunConfig keyword arguments."""
    with open(path) as fh:
        text = fh.read()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        cp.read_string(text if text.lstrip().startswith("[") else "[run]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ValueError(f"{path}: {exc}") from None
    if not cp.has_section("run"):
        raise ValueError(f"{path}: expected a [run] section")
    out = {}
    for key, value in cp.items("run"):
        key = key.replace("-", "_")
        if key not in config_fields():
            raise ValueError(f"{path}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def _coerce(key: str, value: str):
    if key == "seeds":
        return parse_seeds(value)
    if key in ("iterations", "init_points", "explore_every", "direct_budget", "ts_candidates",
               "n_starts", "true_l_samples"):
        return int(value)
    if key in ("kappa", "beta_c", "noise_sd"):
        return float(value)
    return value


def parse_seeds(text) -> tuple[int, ...]:
    """``"10"`` -> seeds 1..10; ``"3,7,9"`` -> those seeds."""
    text = str(text).strip()
    if "," in text:
        return tuple(int(s) for s in text.split(",") if s.strip())
    n = int(text)
    if n < 1:
        raise ValueError("need at least one seed")
    return tuple(range(1, n + 1))


def record_to_dict(rec: IterationRecord) -> dict:
    d = asdict(rec)
    d.pop("wall_time")
    return d
