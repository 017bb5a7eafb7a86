"""Exact Gaussian-process regression with a Matérn-5/2 (ARD) kernel.

Everything here works on plain numpy arrays: an observation history is a
``(t, d)`` array of points plus a length-``t`` vector of values.  The
posterior object is immutable; :func:`rank_one_update` returns a new one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize
from scipy.spatial.distance import cdist

SQRT5 = math.sqrt(5.0)
DEFAULT_NOISE_SD = 1e-3  # variance 1e-6: jitter-level noise for noiseless objectives
MAX_JITTER = 1e-4
NEG_VARIANCE_TOL = 1e-10


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Kernel matrix could not be factorized even after adding maximal jitter."""


class HyperparameterFitWarning(UserWarning):
    """No start of the hyperparameter search improved on its initial point."""


@dataclass(frozen=True)
class KernelParams:
    length_scales: np.ndarray
    signal_scale: float = 1.0
    noise_sd: float = DEFAULT_NOISE_SD
    kernel: str = "matern52"  # "se" is reserved for the regret experiments

    def __post_init__(self):
        ls = np.atleast_1d(np.asarray(self.length_scales, dtype=float))
        object.__setattr__(self, "length_scales", ls)
        if not np.all(ls > 0) or not np.all(np.isfinite(ls)):
            raise ValueError(f"length scales must be positive and finite, got {ls}")
        if not self.signal_scale > 0:
            raise ValueError(f"signal scale must be positive, got {self.signal_scale}")
        if not self.noise_sd >= 0:
            raise ValueError(f"noise sd must be nonnegative, got {self.noise_sd}")
        if self.kernel not in ("matern52", "se"):
            raise ValueError(f"unknown kernel {self.kernel!r}")

    @property
    def dim(self) -> int:
        return self.length_scales.shape[0]


@dataclass(frozen=True)
class PredictiveMoments:
    mu: float
    sigma: float


def _as_points(x, dim: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :] if dim is None or x.shape[0] == dim else x[:, None]
    if x.ndim != 2:
        raise ValueError(f"expected a point or a 2-d array of points, got shape {x.shape}")
    if dim is not None and x.shape[1] != dim:
        raise ValueError(f"dimension mismatch: points have {x.shape[1]} coords, params expect {dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite coordinates")
    return x


def _profile(params: KernelParams, r2: np.ndarray) -> np.ndarray:
    s2 = params.signal_scale**2
    if params.kernel == "se":
        return s2 * np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    return s2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r)


def kernel_matrix(params: KernelParams, A, B) -> np.ndarray:
    """Cross-covariance matrix ``k(A_i, B_j)``."""
    A = _as_points(A, params.dim)
    B = _as_points(B, params.dim)
    r2 = cdist(A / params.length_scales, B / params.length_scales, "sqeuclidean")
    return _profile(params, r2)


def kernel_eval(params: KernelParams, a, b) -> float:
    return float(kernel_matrix(params, a, b)[0, 0])


def _cholesky(K: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, escalating diagonal jitter on failure."""
    try:
        return np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        pass
    scale = max(float(np.mean(np.diag(K))), 1e-300)
    jitter = 1e-10
    while jitter <= MAX_JITTER:
        try:
            return np.linalg.cholesky(K + jitter * scale * np.eye(K.shape[0]))
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise NotPositiveDefiniteError(f"matrix not positive definite after jitter {MAX_JITTER:g}")


def _check_history(X, y, dim: int):
    X = _as_points(X, dim) if len(X) else np.empty((0, dim))
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} points but {y.shape[0]} values")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite observed values")
    return X, y


def log_marginal_likelihood(X, y, params: KernelParams) -> float:
    X, y = _check_history(X, y, params.dim)
    if y.shape[0] == 0:
        raise ValueError("log marginal likelihood needs at least one observation")
    K = kernel_matrix(params, X, X)
    K[np.diag_indices_from(K)] += params.noise_sd**2
    L = _cholesky(K)
    alpha = cho_solve((L, True), y)
    t = y.shape[0]
    return float(-0.5 * y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * t * math.log(2 * math.pi))


@dataclass(frozen=True)
class GpPosterior:
    """Factorized ``K + noise^2 I`` over a fixed history."""

    X: np.ndarray
    y: np.ndarray
    params: KernelParams
    chol: np.ndarray
    alpha: np.ndarray

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def predict_batch(self, Xq, full_cov: bool = False):
        """Posterior mean and standard deviation (or covariance) at many points."""
        Xq = _as_points(Xq, self.params.dim)
        s2 = self.params.signal_scale**2
        if self.n == 0:
            mu = np.zeros(Xq.shape[0])
            if full_cov:
                return mu, kernel_matrix(self.params, Xq, Xq)
            return mu, np.full(Xq.shape[0], self.params.signal_scale)
        ls = self.params.length_scales
        Ks = _profile(self.params, cdist(self.X / ls, Xq / ls, "sqeuclidean"))
        mu = Ks.T @ self.alpha
        V = solve_triangular(self.chol, Ks, lower=True, check_finite=False)
        if full_cov:
            return mu, kernel_matrix(self.params, Xq, Xq) - V.T @ V
        var = s2 - np.einsum("ij,ij->j", V, V)
        return mu, np.sqrt(_clamp_variance(var, s2))

    def predict(self, x) -> PredictiveMoments:
        mu, sd = self.predict_batch(x)
        return PredictiveMoments(float(mu[0]), float(sd[0]))


def _clamp_variance(var: np.ndarray, prior_var: float) -> np.ndarray:
    tol = NEG_VARIANCE_TOL * max(1.0, prior_var)
    if np.any(var < -tol):
        raise FloatingPointError(f"posterior variance {var.min():.3e} is negative beyond round-off")
    return np.clip(var, 0.0, prior_var)


def build_posterior(X, y, params: KernelParams) -> GpPosterior:
    X, y = _check_history(X, y, params.dim)
    if y.shape[0] == 0:
        empty = np.empty((0, 0))
        return GpPosterior(X, y, params, empty, np.empty(0))
    K = kernel_matrix(params, X, X)
    K[np.diag_indices_from(K)] += params.noise_sd**2
    L = _cholesky(K)
    alpha = cho_solve((L, True), y, check_finite=False)
    return GpPosterior(X, y, params, L, alpha)


def predict(post: GpPosterior, x) -> PredictiveMoments:
    return post.predict(x)


def rank_one_update(post: GpPosterior, x, y: float) -> GpPosterior:
    """Append one observation in O(t^2) by extending the Cholesky factor."""
    x = _as_points(x, post.params.dim)
    if x.shape[0] != 1:
        raise ValueError("rank_one_update takes exactly one point")
    if not math.isfinite(y):
        raise ValueError("non-finite observed value")
    X = np.vstack([post.X, x])
    yy = np.append(post.y, float(y))
    if post.n == 0:
        return build_posterior(X, yy, post.params)
    k = kernel_matrix(post.params, post.X, x)[:, 0]
    kxx = post.params.signal_scale**2 + post.params.noise_sd**2
    row = solve_triangular(post.chol, k, lower=True, check_finite=False)
    d2 = kxx - row @ row
    if d2 <= 1e-12 * kxx:
        # new pivot too small to trust; refactorize with jitter instead
        return build_posterior(X, yy, post.params)
    n = post.n
    L = np.zeros((n + 1, n + 1))
    L[:n, :n] = post.chol
    L[n, :n] = row
    L[n, n] = math.sqrt(d2)
    alpha = cho_solve((L, True), yy, check_finite=False)
    return GpPosterior(X, yy, post.params, L, alpha)


def sample_joint(post: GpPosterior, candidates, seed=None) -> np.ndarray:
    """One joint draw of the posterior process at ``candidates``.

    ``seed`` may be an int, a SeedSequence or an existing ``np.random.Generator``.
    """
    C = _as_points(candidates, post.params.dim)
    if C.shape[0] == 0:
        raise ValueError("need at least one candidate")
    rng = np.random.default_rng(seed)
    mu, cov = post.predict_batch(C, full_cov=True)
    cov = 0.5 * (cov + cov.T)
    L = _cholesky(cov + 1e-10 * post.params.signal_scale**2 * np.eye(C.shape[0]))
    return mu + L @ rng.standard_normal(C.shape[0])


# --------------------------------------------------------------------------
# hyperparameter fitting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FitConfig:
    """MAP fitting of (length scales, signal scale) in log space.

    Priors are Gaussian in the log-parameters, centred on ``log(width/4)`` for
    each length scale and on ``log(signal_mode)`` for the signal scale.
    """

    widths: tuple[float, ...]
    noise_sd: float = DEFAULT_NOISE_SD
    n_starts: int = 5
    prior_log_sd: float = 1.0
    signal_mode: float = 1.0
    log_bounds_ls: tuple[float, float] = (-7.0, 5.0)
    log_bounds_signal: tuple[float, float] = (-7.0, 5.0)
    maxiter: int = 50
    kernel: str = "matern52"
    seed: int | np.random.SeedSequence | None = 0
    init: KernelParams | None = field(default=None, compare=False)

    def prior_mean(self) -> np.ndarray:
        ls = np.log(np.asarray(self.widths, dtype=float) / 4.0)
        return np.append(ls, math.log(self.signal_mode))


def _unpack(theta: np.ndarray, cfg: FitConfig) -> KernelParams:
    return KernelParams(np.exp(theta[:-1]), float(np.exp(theta[-1])), cfg.noise_sd, cfg.kernel)


def _neg_log_posterior(theta, D2, y, cfg: FitConfig, mean):
    """Negative log posterior (up to a constant) and its gradient.

    ``D2`` holds the per-dimension squared differences, shape ``(d, t, t)``.
    """
    d = D2.shape[0]
    inv_l2 = np.exp(-2.0 * theta[:d])
    s2 = math.exp(2.0 * theta[d])
    S = D2 * inv_l2[:, None, None]
    r2 = S.sum(axis=0)
    if cfg.kernel == "se":
        K0 = s2 * np.exp(-0.5 * r2)
        dfac = K0
    else:
        r = np.sqrt(r2)
        e = np.exp(-SQRT5 * r)
        K0 = s2 * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * e
        dfac = s2 * (5.0 / 3.0) * (1.0 + SQRT5 * r) * e
    K = K0.copy()
    K[np.diag_indices_from(K)] += cfg.noise_sd**2
    try:
        L = _cholesky(K)
    except NotPositiveDefiniteError:
        return 1e25, np.zeros_like(theta)
    alpha = cho_solve((L, True), y, check_finite=False)
    t = len(y)
    nll = 0.5 * y @ alpha + np.sum(np.log(np.diag(L))) + 0.5 * t * math.log(2 * math.pi)
    Linv = solve_triangular(L, np.eye(t), lower=True, check_finite=False)
    W = np.outer(alpha, alpha) - Linv.T @ Linv
    grad = np.empty_like(theta)
    # dk/dlog(l_j) = dfac * diff_j^2 / l_j^2 ; dk/dlog(s) = 2k
    grad[:d] = -0.5 * np.tensordot(S, W * dfac, axes=([1, 2], [0, 1]))
    grad[d] = -np.sum(W * K0)
    resid = (theta - mean) / cfg.prior_log_sd
    nll += 0.5 * resid @ resid
    grad += resid / cfg.prior_log_sd
    return float(nll), grad


def fit_hyperparams(X, y, config: FitConfig) -> KernelParams:
    """Multi-start MAP estimate of the kernel hyperparameters.

    The first start is ``config.init`` when given, otherwise the prior mode;
    the second is the prior mode, the rest are drawn from the prior.  Noise is
    held fixed at ``config.noise_sd``.
    """
    d = len(config.widths)
    X, y = _check_history(X, y, d)
    if y.shape[0] < 2:
        raise ValueError("need at least two observations to fit hyperparameters")
    mean = config.prior_mean()
    lo = np.array([config.log_bounds_ls[0]] * d + [config.log_bounds_signal[0]])
    hi = np.array([config.log_bounds_ls[1]] * d + [config.log_bounds_signal[1]])
    rng = np.random.default_rng(config.seed)
    D2 = (X.T[:, :, None] - X.T[:, None, :]) ** 2

    starts = []
    if config.init is not None:
        starts.append(np.append(np.log(config.init.length_scales), math.log(config.init.signal_scale)))
    starts.append(mean.copy())
    while len(starts) < max(config.n_starts, 1):
        starts.append(mean + config.prior_log_sd * rng.standard_normal(d + 1))
    starts = [np.clip(s, lo, hi) for s in starts]

    best_theta, best_val = None, math.inf
    improved = False
    for s in starts:
        seen = []

        def objective(theta):
            out = _neg_log_posterior(theta, D2, y, config, mean)
            if not seen:
                seen.append(out[0])
            return out

        res = minimize(
            objective, s, jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)),
            options={"maxiter": config.maxiter},
        )
        f0 = seen[0]
        theta, val = (res.x, float(res.fun)) if np.isfinite(res.fun) else (s, f0)
        if val < f0 - 1e-12:
            improved = True
        if val < best_val:
            best_theta, best_val = theta, val
    if not improved:
        warnings.warn("hyperparameter search did not improve on any start", HyperparameterFitWarning)
        best_theta = starts[0]
    return _unpack(best_theta, config)
