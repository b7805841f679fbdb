"""Optimization tasks and evaluation archives.

All geometry outside this module lives in the common space ``[0, 1]^d``;
problem units appear only inside :class:`Task`, which owns the bound maps
and the evaluation counter.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass
class Task:
    """A box-bounded minimization problem with a counted black-box objective."""

    dim: int
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    objective: Callable[[np.ndarray], float]
    name: str = ""
    eval_counter: int = field(default=0, init=False)

    def __post_init__(self):
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=float)
        self.upper_bounds = np.asarray(self.upper_bounds, dtype=float)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.lower_bounds.shape != (self.dim,) or self.upper_bounds.shape != (self.dim,):
            raise ValueError("bounds must be length-dim vectors")
        if not np.all(self.lower_bounds < self.upper_bounds):
            raise ValueError("each lower bound must be strictly below its upper bound")

    def normalize(self, x) -> np.ndarray:
        """Problem units -> common space. Out-of-bound input is clamped with a warning."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower_bounds) or np.any(x > self.upper_bounds):
            warnings.warn("point outside task bounds was clamped", RuntimeWarning, stacklevel=2)
            x = np.clip(x, self.lower_bounds, self.upper_bounds)
        return (x - self.lower_bounds) / (self.upper_bounds - self.lower_bounds)

    def denormalize(self, z) -> np.ndarray:
        """Common space -> problem units."""
        z = np.asarray(z, dtype=float)
        return self.lower_bounds + z * (self.upper_bounds - self.lower_bounds)

    def evaluate(self, x) -> float:
        """Evaluate the objective in problem units; counts one evaluation."""
        y = float(self.objective(np.asarray(x, dtype=float)))
        self.eval_counter += 1
        return y

    def evaluate_common(self, z) -> float:
        """Evaluate at a common-space point; counts one evaluation."""
        return self.evaluate(self.denormalize(z))

    def replica(self) -> "Task":
        """A fresh copy with the evaluation counter reset to zero."""
        return Task(self.dim, self.lower_bounds.copy(), self.upper_bounds.copy(),
                    self.objective, name=self.name)


class Database:
    """Evaluation archive in common space; insertion order is evaluation time."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self._points: list[np.ndarray] = []
        self._values: list[float] = []

    def append(self, x, y: float) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}")
        if not np.all(np.isfinite(x)):
            raise ValueError("point must be finite")
        self._points.append(x.copy())
        self._values.append(float(y))

    def __len__(self) -> int:
        return len(self._values)

    @property
    def X(self) -> np.ndarray:
        if not self._points:
            return np.empty((0, self.dim))
        return np.vstack(self._points)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self._values, dtype=float)

    def best_value(self) -> float:
        if not self._values:
            raise ValueError("empty database")
        return float(min(self._values))

    def best_point(self) -> np.ndarray:
        if not self._values:
            raise ValueError("empty database")
        return self._points[int(np.argmin(self._values))].copy()

    def best_so_far(self) -> np.ndarray:
        """Running minimum of the value sequence, one entry per evaluation."""
        if not self._values:
            return np.empty(0)
        return np.minimum.accumulate(self.y)
