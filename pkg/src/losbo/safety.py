"""Probabilistic safety machinery.

Confidence scalar derived from the target safety probability, UCB/LCB safe-set
identification over a discrete candidate set, and violation accounting.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import InvalidInput
from .gp import GpPosterior, posterior_query

SAFETY_MODES = ("optimistic_ucb", "conservative_lcb", "none")


def confidence_scalar(alpha: float) -> float:
    """Largest beta with Phi(beta) <= 1 - alpha, i.e. the (1-alpha) quantile.

    Negative for alpha > 0.5: the bound turns conservative.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidInput("alpha must lie strictly inside (0, 1)")
    return float(norm.ppf(1.0 - alpha))


@dataclass(frozen=True)
class SafetyConfig:
    """Safety probability threshold and bound mode.

    beta_override, when set, wins over the alpha-derived scalar (experiments
    typically fix beta = 2). threshold is the safety level h the bound is
    compared against.
    """

    alpha: float = 0.5
    beta_override: float | None = 2.0
    mode: str = "optimistic_ucb"
    threshold: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInput("alpha must lie strictly inside (0, 1)")
        if self.mode not in SAFETY_MODES:
            raise InvalidInput(f"unknown safety mode {self.mode!r}")

    @property
    def beta(self) -> float:
        if self.beta_override is not None:
            return float(self.beta_override)
        return confidence_scalar(self.alpha)


@dataclass(frozen=True)
class SafeSet:
    """Candidate indices deemed safe and the bound values behind the call."""

    indices: np.ndarray
    bounds: np.ndarray

    @property
    def size(self) -> int:
        return int(self.indices.shape[0])

    @property
    def is_empty(self) -> bool:
        return self.size == 0


def safety_bounds(
    post_g: GpPosterior, candidates: np.ndarray, cfg: SafetyConfig
) -> np.ndarray:
    """Per-candidate bound value used for the safe/unsafe decision."""
    mean, var = posterior_query(post_g, candidates)
    sd = np.sqrt(var)
    if cfg.mode == "conservative_lcb":
        return mean - abs(cfg.beta) * sd
    return mean + cfg.beta * sd


def identify_safe(
    post_g: GpPosterior, candidates, cfg: SafetyConfig
) -> SafeSet:
    """Flag the candidates whose bound clears the safety threshold."""
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise InvalidInput("candidate set is empty")
    bounds = safety_bounds(post_g, candidates, cfg)
    if cfg.mode == "none":
        mask = np.ones(candidates.shape[0], dtype=bool)
    else:
        mask = bounds >= cfg.threshold
    return SafeSet(np.flatnonzero(mask), bounds)


def violation_metrics(g_values, threshold: float = 0.0) -> tuple[float, float]:
    """Safe-decision ratio and cumulative violation of a trajectory."""
    g = np.atleast_1d(np.asarray(g_values, dtype=float))
    if g.shape[0] < 1:
        raise InvalidInput("need at least one safety observation")
    safe_ratio = float(np.mean(g >= threshold))
    cumulative = float(np.sum(np.maximum(threshold - g, 0.0)))
    return safe_ratio, cumulative
