"""Axis-aligned boxes used as search domains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput


@dataclass(frozen=True)
class Box:
    """Axis-aligned box ``{x : lower <= x <= upper}``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInput("box bounds must be 1-d arrays of equal length")
        if np.any(hi < lo):
            raise InvalidInput("box upper bound below lower bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol)
        )

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lower, self.upper)

    def intersect(self, other: "Box") -> "Box":
        return Box(
            np.maximum(self.lower, other.lower),
            np.minimum(self.upper, other.upper),
        )

    @staticmethod
    def cube(lo: float, hi: float, dim: int) -> "Box":
        return Box(np.full(dim, float(lo)), np.full(dim, float(hi)))

    @staticmethod
    def bounding(points: np.ndarray) -> "Box":
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return Box(points.min(axis=0), points.max(axis=0))
