"""Local optimistic safe Bayesian optimization loop.

Each iteration encodes the data into the latent space, refits GP surrogates
for the objective and the safety function, restricts the search to a trust
region around the incumbent, keeps the candidates whose safety upper bound
clears the threshold, and Thompson-samples a batch from the objective
posterior. Decoded proposals are evaluated by the caller and fed back through
`observe`, which advances the trust-region state machine.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .embedding import EmbeddingMap, decode, encode, identity_map, latent_bounds
from .errors import InvalidInput, SeedUnsafe
from .geometry import Box
from .gp import (
    GpDataset,
    HyperBounds,
    KernelSpec,
    fit_hyperparameters,
    fit_posterior,
    joint_sample,
)
from .safety import SafetyConfig, identify_safe, violation_metrics
from .trust_region import (
    BatchOutcome,
    TrustRegionConfig,
    TrustRegionState,
    initial_incumbent,
    make_local_region,
    safe_update,
)

SEARCH_MODES = ("local", "global")


@dataclass(frozen=True)
class OptimizerConfig:
    domain: Box
    budget: int
    seed: int = 0
    batch_size: int = 10
    candidate_count: int = 2000
    safety: SafetyConfig = field(default_factory=SafetyConfig)
    trust_region: TrustRegionConfig = field(default_factory=TrustRegionConfig)
    embedding: EmbeddingMap | None = None
    kernel_bounds: HyperBounds = field(default_factory=HyperBounds)
    kernel_family: str = "matern52"
    fit_restarts: int = 5
    fit_iterations: int = 50
    refit_stride: int = 1
    search_mode: str = "local"
    bootstrap_unsafe_seed: bool = False
    data_window: int | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidInput("batch_size must be >= 1")
        if self.candidate_count < self.batch_size:
            raise InvalidInput("candidate_count must be >= batch_size")
        if self.budget < 1:
            raise InvalidInput("budget must be >= 1")
        if self.search_mode not in SEARCH_MODES:
            raise InvalidInput(f"unknown search mode {self.search_mode!r}")
        if self.embedding is not None and (
            self.embedding.source_dim != self.domain.dim
        ):
            raise InvalidInput("embedding source dimension must match the domain")


@dataclass(frozen=True)
class Observation:
    x: np.ndarray
    y_f: float
    y_g: float
    iteration: int
    timestamp: float


@dataclass(frozen=True)
class StepProposal:
    """One proposed batch with its provenance."""

    points: np.ndarray
    latent_points: np.ndarray
    safety_bounds: np.ndarray
    safe_set_size: int
    region: Box
    fallback: bool
    iteration: int


@dataclass
class RunState:
    config: OptimizerConfig
    observations: list[Observation]
    trust: TrustRegionState
    n_initial: int
    iteration: int = 0
    unsafe_seed: bool = False
    trajectory: list[dict] = field(default_factory=list)
    _kernel_f: tuple[KernelSpec, float] | None = None
    _kernel_g: tuple[KernelSpec, float] | None = None

    @property
    def embedding(self) -> EmbeddingMap:
        return self.config.embedding or identity_map(self.config.domain.dim)

    def points(self) -> np.ndarray:
        return np.array([o.x for o in self.observations])

    def objective_values(self) -> np.ndarray:
        return np.array([o.y_f for o in self.observations])

    def safety_values(self) -> np.ndarray:
        return np.array([o.y_g for o in self.observations])

    def best_feasible(self) -> float:
        y_g = self.safety_values()
        y_f = self.objective_values()
        safe = y_g > self.config.safety.threshold
        return float(np.max(y_f[safe])) if np.any(safe) else float("nan")


def init_run(config: OptimizerConfig, points, y_f, y_g) -> RunState:
    """Seed a run with initial observations and zeroed counters."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    y_f = np.asarray(y_f, dtype=float)
    y_g = np.asarray(y_g, dtype=float)
    if points.shape[0] == 0:
        raise InvalidInput("initial data must be non-empty")
    if points.shape[0] != y_f.shape[0] or y_f.shape[0] != y_g.shape[0]:
        raise InvalidInput("initial data arrays disagree on length")
    h = config.safety.threshold
    unsafe_seed = False
    try:
        x_star, y_star = initial_incumbent(points, y_f, y_g, h)
    except SeedUnsafe:
        if not config.bootstrap_unsafe_seed:
            raise
        # fall back to the least unsafe seed, flagged on the run record
        idx = int(np.argmax(y_g))
        x_star, y_star = points[idx].copy(), float(y_f[idx])
        unsafe_seed = True
    trust = TrustRegionState(
        config=config.trust_region,
        length=config.trust_region.length_init,
        incumbent_point=x_star,
        incumbent_value=y_star,
    )
    now = time.time()
    obs = [
        Observation(points[i].copy(), float(y_f[i]), float(y_g[i]), 0, now)
        for i in range(points.shape[0])
    ]
    return RunState(
        config=config,
        observations=obs,
        trust=trust,
        n_initial=points.shape[0],
        unsafe_seed=unsafe_seed,
    )


def _rng_for(config: OptimizerConfig, iteration: int, stream: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(iteration, stream))
    return np.random.default_rng(ss)


def _seed_for(config: OptimizerConfig, iteration: int, stream: int) -> int:
    ss = np.random.SeedSequence(entropy=config.seed, spawn_key=(iteration, stream))
    return int(ss.generate_state(1)[0])


def _windowed(state: RunState):
    obs = state.observations
    window = state.config.data_window
    if window is not None and len(obs) > window:
        obs = obs[-window:]
    X = np.array([o.x for o in obs])
    y_f = np.array([o.y_f for o in obs])
    y_g = np.array([o.y_g for o in obs])
    return X, y_f, y_g


def _refit_surrogates(state: RunState, Z: np.ndarray, y_f, y_g, iteration: int):
    cfg = state.config
    due = (
        state._kernel_f is None
        or ((iteration - 1) % cfg.refit_stride == 0)
    )
    if due:
        for stream, targets, attr in ((1, y_f, "_kernel_f"), (2, y_g, "_kernel_g")):
            centered = targets - np.mean(targets)
            base = GpDataset(Z, centered, cfg.kernel_bounds.noise_variance[0])
            spec, noise = fit_hyperparameters(
                base,
                cfg.kernel_bounds,
                restarts=cfg.fit_restarts,
                seed=_seed_for(cfg, iteration, stream),
                iterations=cfg.fit_iterations,
                family=cfg.kernel_family,
            )
            setattr(state, attr, (spec, noise))
    spec_f, noise_f = state._kernel_f
    spec_g, noise_g = state._kernel_g
    post_f = fit_posterior(GpDataset(Z, y_f, noise_f), spec_f, center=True)
    post_g = fit_posterior(GpDataset(Z, y_g, noise_g), spec_g, center=True)
    return post_f, post_g


def _latent_domain(state: RunState) -> Box:
    emb = state.embedding
    if emb.kind == "identity":
        return state.config.domain
    return latent_bounds(emb, state.points())


def _distinct_argmax(draws: np.ndarray, count: int) -> list[int]:
    """One winner per draw; a repeated winner yields that draw's next rank."""
    chosen: list[int] = []
    for row in draws[:count]:
        for idx in np.argsort(-row):
            if int(idx) not in chosen:
                chosen.append(int(idx))
                break
    return chosen


def propose(state: RunState) -> StepProposal:
    """Compute the next proposal batch. Deterministic per (seed, iteration)."""
    cfg = state.config
    iteration = state.iteration + 1
    emb = state.embedding
    X, y_f, y_g = _windowed(state)
    Z = encode(emb, X)

    post_f, post_g = _refit_surrogates(state, Z, y_f, y_g, iteration)

    domain = _latent_domain(state)
    if cfg.search_mode == "global":
        region = domain
    else:
        center = encode(emb, state.trust.incumbent_point)
        half = 0.5 * state.trust.length * domain.width
        half = np.maximum(half, 1e-12)
        region = make_local_region(domain.clip(center), half, domain)

    sobol = qmc.Sobol(region.dim, scramble=True, seed=_rng_for(cfg, iteration, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        unit = sobol.random(cfg.candidate_count)
    candidates = region.lower + unit * region.width

    safe = identify_safe(post_g, candidates, cfg.safety)
    rng_ts = _rng_for(cfg, iteration, 4)
    if not safe.is_empty:
        pool = candidates[safe.indices]
        draws = joint_sample(post_f, pool, cfg.batch_size, rng_ts)
        local = _distinct_argmax(draws, cfg.batch_size)
        # fewer safe candidates than the batch: pad by cycling ranked draws
        while len(local) < cfg.batch_size:
            local.append(local[len(local) % max(len(local), 1)])
        chosen = safe.indices[np.array(local[: cfg.batch_size])]
        fallback = False
    else:
        order = np.argsort(-safe.bounds)
        chosen = order[: cfg.batch_size]
        fallback = True

    latent = candidates[chosen]
    return StepProposal(
        points=decode(emb, latent),
        latent_points=latent,
        safety_bounds=safe.bounds[chosen],
        safe_set_size=safe.size,
        region=region,
        fallback=fallback,
        iteration=iteration,
    )


def observe(state: RunState, proposal: StepProposal, results: BatchOutcome) -> RunState:
    """Record one evaluated batch and advance the trust region."""
    if results.y_f.shape[0] != proposal.points.shape[0]:
        raise InvalidInput("results do not align with the proposal batch")
    h = state.config.safety.threshold
    now = time.time()
    for i in range(proposal.points.shape[0]):
        state.observations.append(
            Observation(
                proposal.points[i].copy(),
                float(results.y_f[i]),
                float(results.y_g[i]),
                proposal.iteration,
                now,
            )
        )
    state.trust = safe_update(state.trust, results, proposal.points, h)
    state.iteration = proposal.iteration

    y_g_run = state.safety_values()[state.n_initial:]
    safe_ratio, cum_violation = violation_metrics(y_g_run, h)
    state.trajectory.append(
        {
            "iteration": proposal.iteration,
            "best_feasible": state.best_feasible(),
            "safe_ratio": safe_ratio,
            "cumulative_violation": cum_violation,
            "trust_region_length": state.trust.length,
            "safe_set_size": proposal.safe_set_size,
            "fallback": proposal.fallback,
            "n_observations": len(state.observations),
        }
    )
    return state


@dataclass
class RunRecord:
    """Full log of one optimization run."""

    config: OptimizerConfig
    observations: list[Observation]
    trajectory: list[dict]
    n_initial: int
    unsafe_seed: bool

    def final_metrics(self) -> dict:
        y_g = np.array([o.y_g for o in self.observations[self.n_initial:]])
        h = self.config.safety.threshold
        if y_g.size:
            safe_ratio, cum = violation_metrics(y_g, h)
        else:
            y_g_all = np.array([o.y_g for o in self.observations])
            safe_ratio, cum = violation_metrics(y_g_all, h)
        y_f = np.array([o.y_f for o in self.observations])
        g_all = np.array([o.y_g for o in self.observations])
        safe = g_all > h
        best = float(np.max(y_f[safe])) if np.any(safe) else float("nan")
        return {
            "objective": best,
            "safety": safe_ratio,
            "violation": cum,
        }


def run(oracle, config: OptimizerConfig, points, y_f, y_g) -> RunRecord:
    """Drive init/propose/observe until the sample budget is exhausted.

    `oracle(X)` maps a batch of points (q x D) to arrays (y_f, y_g).
    """
    state = init_run(config, points, y_f, y_g)
    remaining = config.budget - state.n_initial
    n_iter = max(0, math.ceil(remaining / config.batch_size))
    for _ in range(n_iter):
        proposal = propose(state)
        yf, yg = oracle(proposal.points)
        observe(state, proposal, BatchOutcome(np.asarray(yf), np.asarray(yg)))
    return RunRecord(
        config=config,
        observations=list(state.observations),
        trajectory=list(state.trajectory),
        n_initial=state.n_initial,
        unsafe_seed=state.unsafe_seed,
    )
