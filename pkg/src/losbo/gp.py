"""Exact Gaussian-process regression.

Stationary kernels (Matern-5/2 and squared exponential), Cholesky-backed
posterior inference, log marginal likelihood, multi-start hyperparameter
fitting, and joint posterior sampling for Thompson draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.spatial.distance import cdist

from .errors import InvalidInput, NumericalFailure

KERNEL_FAMILIES = ("matern52", "squared_exponential")

# Jitter added to every factorization diagonal, relative to the kernel
# output scale; escalated x10 until _JITTER_MAX before giving up.
_JITTER_BASE = 1e-10
_JITTER_MAX = 1e-4


@dataclass(frozen=True)
class KernelSpec:
    """Isotropic stationary kernel: output_scale * rho(|a - b| / lengthscale)."""

    family: str = "matern52"
    lengthscale: float = 1.0
    output_scale: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise InvalidInput(f"unknown kernel family {self.family!r}")
        if not (self.lengthscale > 0 and self.output_scale > 0):
            raise InvalidInput("lengthscale and output_scale must be positive")


@dataclass(frozen=True)
class GpDataset:
    """Observed inputs (n x d), noisy targets (n,) and the noise variance."""

    inputs: np.ndarray
    targets: np.ndarray
    noise_variance: float = 0.0

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.atleast_1d(np.asarray(self.targets, dtype=float))
        if X.size == 0:
            X = X.reshape(0, X.shape[1] if X.ndim == 2 and X.shape[1] else 1)
        if X.shape[0] != y.shape[0]:
            raise InvalidInput("inputs and targets disagree on sample count")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvalidInput("dataset entries must be finite")
        if self.noise_variance < 0:
            raise InvalidInput("noise_variance must be non-negative")
        object.__setattr__(self, "inputs", X)
        object.__setattr__(self, "targets", y)

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


def _correlation(family: str, r: np.ndarray) -> np.ndarray:
    """Correlation profile rho(r) with r = |a - b| / lengthscale."""
    if family == "squared_exponential":
        return np.exp(-0.5 * r * r)
    s = math.sqrt(5.0) * r
    return (1.0 + s + s * s / 3.0) * np.exp(-s)


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross-covariance matrix between two point sets."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise InvalidInput("kernel inputs disagree on dimension")
    r = cdist(a, b) / spec.lengthscale
    return spec.output_scale * _correlation(spec.family, r)


def kernel_eval(spec: KernelSpec, a, b) -> float:
    """Covariance between two single points."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise InvalidInput("kernel inputs disagree on dimension")
    return float(kernel_matrix(spec, a[None, :], b[None, :])[0, 0])


def _factor_with_jitter(matrix: np.ndarray, scale: float):
    """Cholesky factorization with escalating diagonal jitter.

    Returns (cho_factor result, jitter actually used).
    """
    limit = _JITTER_MAX * scale
    jitter = 0.0
    while True:
        try:
            cf = cho_factor(
                matrix + jitter * np.eye(matrix.shape[0]), lower=True
            )
            return cf, jitter
        except np.linalg.LinAlgError:
            jitter = _JITTER_BASE * scale if jitter == 0.0 else jitter * 10.0
            if jitter > limit:
                raise NumericalFailure(
                    "Cholesky factorization failed after jitter escalation"
                ) from None


@dataclass(frozen=True)
class GpPosterior:
    """Posterior over a latent function given a GpDataset.

    Caches the Cholesky factor of (K + noise * I + jitter * I) and the weight
    vector solving (K + noise * I) w = y.
    """

    dataset: GpDataset
    kernel: KernelSpec
    _chol: np.ndarray = field(repr=False)
    _weights: np.ndarray = field(repr=False)
    mean_offset: float = 0.0


def fit_posterior(
    data: GpDataset, kernel: KernelSpec, center: bool = False
) -> GpPosterior:
    """Condition the GP prior on the dataset.

    With center=True the empirical target mean is used as a constant prior
    mean: the GP is fitted to the residuals and queries add the mean back.
    """
    if data.n == 0:
        empty = np.zeros((0, 0))
        return GpPosterior(data, kernel, empty, np.zeros(0))
    offset = float(np.mean(data.targets)) if center else 0.0
    K = kernel_matrix(kernel, data.inputs, data.inputs)
    K[np.diag_indices_from(K)] += data.noise_variance
    (L, _), _ = _factor_with_jitter(K, kernel.output_scale)
    weights = cho_solve((L, True), data.targets - offset)
    return GpPosterior(data, kernel, L, weights, offset)


def _cross_and_solve(post: GpPosterior, queries: np.ndarray):
    Ks = kernel_matrix(post.kernel, post.dataset.inputs, queries)
    V = solve_triangular(post._chol, Ks, lower=True)
    return Ks, V


def _check_queries(post: GpPosterior, queries) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    if post.dataset.n > 0 and Q.shape[1] != post.dataset.dim:
        raise InvalidInput("query dimension does not match dataset dimension")
    return Q


def posterior_query(post: GpPosterior, queries) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and (clamped non-negative) variances at query points."""
    Q = _check_queries(post, queries)
    prior_var = np.full(Q.shape[0], post.kernel.output_scale)
    if post.dataset.n == 0:
        return np.full(Q.shape[0], post.mean_offset), prior_var
    Ks, V = _cross_and_solve(post, Q)
    mean = Ks.T @ post._weights + post.mean_offset
    var = prior_var - np.sum(V * V, axis=0)
    return mean, np.maximum(var, 0.0)


def posterior_cov(post: GpPosterior, queries) -> np.ndarray:
    """Posterior covariance matrix over a query set."""
    Q = _check_queries(post, queries)
    if Q.shape[0] < 1:
        raise InvalidInput("need at least one query point")
    Kss = kernel_matrix(post.kernel, Q, Q)
    if post.dataset.n == 0:
        return Kss
    _, V = _cross_and_solve(post, Q)
    cov = Kss - V.T @ V
    return 0.5 * (cov + cov.T)


def log_marginal_likelihood(data: GpDataset, kernel: KernelSpec) -> float:
    """Gaussian log evidence of the targets under kernel + noise."""
    if data.n < 1:
        raise InvalidInput("log marginal likelihood needs at least one sample")
    post = fit_posterior(data, kernel)
    L = post._chol
    quad = float(data.targets @ post._weights)
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    return -0.5 * (quad + logdet + data.n * math.log(2.0 * math.pi))


def joint_sample(
    post: GpPosterior,
    candidates,
    draws: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw joint samples from the posterior over the candidate set.

    Returns a (draws x m) matrix; one row per sample path restricted to the
    candidates. Dimensions whose posterior variance is numerically zero are
    pinned to the posterior mean.
    """
    if draws < 1:
        raise InvalidInput("draws must be >= 1")
    Q = _check_queries(post, candidates)
    m = Q.shape[0]
    if m < 1:
        raise InvalidInput("need at least one candidate")
    mean, var = posterior_query(post, Q)
    out = np.tile(mean, (draws, 1))
    active = var > 1e-9 * post.kernel.output_scale
    if np.any(active):
        cov = posterior_cov(post, Q)[np.ix_(active, active)]
        (L, _), _ = _factor_with_jitter(cov, post.kernel.output_scale)
        z = rng.standard_normal((draws, int(active.sum())))
        out[:, active] += z @ np.tril(L).T
    return out


@dataclass(frozen=True)
class HyperBounds:
    """Box constraints for hyperparameter fitting, as (lo, hi) pairs."""

    lengthscale: tuple[float, float] = (1e-3, 1e3)
    output_scale: tuple[float, float] = (1e-3, 1e3)
    noise_variance: tuple[float, float] = (1e-8, 1e1)

    def __post_init__(self):
        for lo, hi in (self.lengthscale, self.output_scale, self.noise_variance):
            if hi < lo or lo < 0:
                raise InvalidInput("degenerate hyperparameter bounds")


def fit_hyperparameters(
    data: GpDataset,
    bounds: HyperBounds,
    restarts: int = 5,
    seed: int = 0,
    iterations: int = 50,
    family: str = "matern52",
) -> KernelSpec:
    """Maximize log marginal likelihood by log-space coordinate ascent.

    Multi-start local search with numeric line steps; deterministic given the
    seed. Ties across starts break by start index. Returns the best
    (lengthscale, output_scale) as a KernelSpec; the fitted noise variance is
    attached to the evaluation dataset by the caller.
    """
    if data.n < 2:
        raise InvalidInput("hyperparameter fitting needs at least two samples")
    if data.noise_variance == 0.0 and bounds.noise_variance[0] <= 0.0:
        # exact duplicates make the noiseless Gram matrix singular
        if len(np.unique(data.inputs, axis=0)) < data.n:
            raise InvalidInput(
                "duplicate noiseless observations; raise the noise lower bound"
            )

    lo = np.log(
        np.maximum(
            [bounds.lengthscale[0], bounds.output_scale[0], bounds.noise_variance[0]],
            1e-12,
        )
    )
    hi = np.log(
        np.maximum(
            [bounds.lengthscale[1], bounds.output_scale[1], bounds.noise_variance[1]],
            1e-12,
        )
    )

    def objective(theta: np.ndarray) -> float:
        ls, os_, nv = np.exp(theta)
        try:
            return log_marginal_likelihood(
                GpDataset(data.inputs, data.targets, nv),
                KernelSpec(family, ls, os_),
            )
        except NumericalFailure:
            return -np.inf

    rng = np.random.default_rng(seed)
    starts = [0.5 * (lo + hi)]
    starts += [rng.uniform(lo, hi) for _ in range(max(restarts - 1, 0))]

    best = None  # (ll, -start_index, theta)
    for idx, theta in enumerate(starts):
        theta = np.clip(theta, lo, hi)
        value = objective(theta)
        steps = np.full(3, 0.5)
        for _ in range(iterations):
            moved = False
            for k in range(3):
                if hi[k] - lo[k] <= 0:
                    continue
                for sign in (1.0, -1.0):
                    trial = theta.copy()
                    trial[k] = np.clip(theta[k] + sign * steps[k], lo[k], hi[k])
                    trial_value = objective(trial)
                    if trial_value > value:
                        theta, value = trial, trial_value
                        steps[k] *= 1.2
                        moved = True
                        break
                else:
                    steps[k] *= 0.5
            if not moved and np.all(steps < 1e-6):
                break
        if np.isfinite(value) and (best is None or (value, -idx) > best[:2]):
            best = (value, -idx, theta)

    if best is None:
        raise NumericalFailure("every hyperparameter start failed numerically")
    ls, os_, nv = np.exp(best[2])
    return KernelSpec(family, float(ls), float(os_)), float(nv)
