"""Trust-region state machine with safe restart.

Incumbent tracking, success/failure streak counters, and side-length
doubling/halving. When a halving run pins the side length at its minimum the
length resets to its initial value while every observation is retained.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInput, SeedUnsafe
from .geometry import Box


@dataclass(frozen=True)
class TrustRegionConfig:
    success_tolerance: int = 3
    failure_tolerance: int = 3
    length_init: float = 0.8
    length_max: float = 1.6
    length_min: float = 0.5 * 2.0**-7

    def __post_init__(self):
        if self.success_tolerance < 1 or self.failure_tolerance < 1:
            raise InvalidInput("tolerances must be positive integers")
        if not 0 < self.length_min <= self.length_init <= self.length_max:
            raise InvalidInput("need 0 < length_min <= length_init <= length_max")


@dataclass(frozen=True)
class TrustRegionState:
    """Side length, streak counters and the incumbent (best safe) sample."""

    config: TrustRegionConfig
    length: float
    success_count: int = 0
    failure_count: int = 0
    incumbent_point: np.ndarray | None = None
    incumbent_value: float = -np.inf


@dataclass(frozen=True)
class BatchOutcome:
    """Objective/safety observations for one proposal batch."""

    y_f: np.ndarray
    y_g: np.ndarray

    def __post_init__(self):
        y_f = np.atleast_1d(np.asarray(self.y_f, dtype=float))
        y_g = np.atleast_1d(np.asarray(self.y_g, dtype=float))
        if y_f.shape != y_g.shape or y_f.shape[0] == 0:
            raise InvalidInput("batch outcome must be non-empty and aligned")
        object.__setattr__(self, "y_f", y_f)
        object.__setattr__(self, "y_g", y_g)


def make_local_region(center_latent, length, domain: Box) -> Box:
    """Axis-aligned box [center - l, center + l] clipped to the domain.

    length may be a scalar or a per-dimension half-width vector.
    """
    center = np.atleast_1d(np.asarray(center_latent, dtype=float))
    half = np.broadcast_to(np.asarray(length, dtype=float), center.shape)
    if np.any(half <= 0):
        raise InvalidInput("region length must be positive")
    if not domain.contains(center, atol=1e-12):
        raise InvalidInput("region center lies outside the domain")
    return Box(center - half, center + half).intersect(domain)


def initial_incumbent(
    points: np.ndarray, y_f: np.ndarray, y_g: np.ndarray,
    safety_threshold: float = 0.0,
) -> tuple[np.ndarray, float]:
    """Best objective among strictly safe samples."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    y_f = np.asarray(y_f, dtype=float)
    y_g = np.asarray(y_g, dtype=float)
    if points.shape[0] == 0:
        raise InvalidInput("dataset is empty")
    safe = y_g > safety_threshold
    if not np.any(safe):
        raise SeedUnsafe("no initial sample satisfies the safety condition")
    idx = np.flatnonzero(safe)[np.argmax(y_f[safe])]
    return points[idx].copy(), float(y_f[idx])


def safe_update(
    state: TrustRegionState,
    batch: BatchOutcome,
    batch_points,
    safety_threshold: float = 0.0,
) -> TrustRegionState:
    """Advance the state machine by one batch.

    The batch counts as a success iff it contains a strictly safe sample that
    strictly improves the incumbent.
    """
    cfg = state.config
    points = np.atleast_2d(np.asarray(batch_points, dtype=float))
    if points.shape[0] != batch.y_f.shape[0]:
        raise InvalidInput("batch points and outcomes disagree on size")

    improving = (batch.y_g > safety_threshold) & (batch.y_f > state.incumbent_value)
    if np.any(improving):
        best = np.flatnonzero(improving)[np.argmax(batch.y_f[improving])]
        state = replace(
            state,
            incumbent_point=points[best].copy(),
            incumbent_value=float(batch.y_f[best]),
            success_count=state.success_count + 1,
            failure_count=0,
        )
    else:
        state = replace(
            state, success_count=0, failure_count=state.failure_count + 1
        )

    if state.success_count == cfg.success_tolerance:
        state = replace(
            state,
            length=min(2.0 * state.length, cfg.length_max),
            success_count=0,
            failure_count=0,
        )
    elif state.failure_count == cfg.failure_tolerance:
        length = max(0.5 * state.length, cfg.length_min)
        if length == cfg.length_min:
            length = cfg.length_init
        state = replace(
            state, length=length, success_count=0, failure_count=0
        )
    return state
