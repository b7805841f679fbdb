"""Families of related test problems for exercising knowledge reuse.

A scenario is one target task plus k source tasks, all sharing the unit
box as their search space.  Every task is a classical test function
recentered so its optimum sits at a chosen spot; sources differ from the
target only in where that optimum lies.  How far the source optima sit
from the target's controls how much their archives are worth:

* high-similarity scenarios place every source optimum within a small
  Chebyshev ball around the target's,
* low-similarity scenarios place them in a distant annulus, and
* mixed scenarios split the sources half and half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .rng import RngStream
from .task import Task

BASE_FUNCTIONS = ("sphere", "rastrigin", "griewank", "quartic", "ackley")
CATEGORIES = ("HS", "MS", "LS")

# half-width of each function's classical domain; unit-box offsets are
# scaled by this so the landscapes keep their usual character
_WIDTHS = {
    "sphere": 5.12,
    "rastrigin": 5.12,
    "griewank": 600.0,
    "quartic": 1.28,
    "ackley": 32.768,
}

_PLACEMENT_LOW = 0.2
_PLACEMENT_HIGH = 0.8
_MAX_DRAW_ATTEMPTS = 10_000


def _sphere(U):
    return np.sum(U * U, axis=-1)


def _rastrigin(U):
    return 10.0 * U.shape[-1] + np.sum(
        U * U - 10.0 * np.cos(2.0 * np.pi * U), axis=-1)


def _griewank(U):
    roots = np.sqrt(np.arange(1.0, U.shape[-1] + 1.0))
    return (1.0 + np.sum(U * U, axis=-1) / 4000.0
            - np.prod(np.cos(U / roots), axis=-1))


def _quartic(U):
    weights = np.arange(1.0, U.shape[-1] + 1.0)
    return np.sum(weights * U ** 4, axis=-1)


def _ackley(U):
    d = U.shape[-1]
    return (-20.0 * np.exp(-0.2 * np.sqrt(np.sum(U * U, axis=-1) / d))
            - np.exp(np.sum(np.cos(2.0 * np.pi * U), axis=-1) / d)
            + 20.0 + math.e)


_BASES = {
    "sphere": _sphere,
    "rastrigin": _rastrigin,
    "griewank": _griewank,
    "quartic": _quartic,
    "ackley": _ackley,
}


class RecenteredObjective:
    """A classical test function whose optimum is moved to a chosen point.

    Evaluates ``base(width * R @ (x - optimum))``; the minimum value is 0
    at the optimum.  Plain data plus arrays, so instances pickle."""

    def __init__(self, base: str, optimum, rotation=None):
        self.base = base
        self.optimum = np.asarray(optimum, dtype=float)
        self.rotation = None if rotation is None else np.asarray(rotation, float)

    def __call__(self, x):
        u = np.asarray(x, dtype=float) - self.optimum
        if self.rotation is not None:
            u = self.rotation @ u
        return float(_BASES[self.base](_WIDTHS[self.base] * u))


class TranslatedView:
    """The same landscape seen through a shifted lens:
    ``value(x) = inner(x + shift)``."""

    def __init__(self, inner, shift):
        self.inner = inner
        self.shift = np.asarray(shift, dtype=float)

    def __call__(self, x):
        return self.inner(np.asarray(x, dtype=float) + self.shift)


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe for a target-plus-sources problem family.

    Optima live in the unit box.  The target's optimum is drawn uniformly
    from ``[0.2, 0.8]^d`` so there is always room to place shifted source
    optima inside the box.  ``hs_radius`` bounds the Chebyshev shift of
    high-similarity sources; low-similarity sources land in the Chebyshev
    annulus ``[ls_inner, ls_outer]``.  Mixed scenarios give the first
    ``ceil(k/2)`` sources the near shift and the rest the far one."""

    base: str = "sphere"
    dim: int = 2
    category: str = "HS"
    k: int = 5
    hs_radius: float = 0.05
    ls_inner: float = 0.3
    ls_outer: float = 0.5
    rotation: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.base not in BASE_FUNCTIONS:
            raise ValueError(f"base must be one of {BASE_FUNCTIONS}")
        if self.category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.k < 1:
            raise ValueError("k must be at least one source")
        if not (0.0 < self.hs_radius < self.ls_inner < self.ls_outer):
            raise ValueError(
                "shift radii must nest: 0 < hs_radius < ls_inner < ls_outer")
        if self.hs_radius > _PLACEMENT_LOW:
            raise ValueError(
                f"hs_radius above {_PLACEMENT_LOW} can push source optima "
                "outside the box")
        if self.ls_outer > 0.5:
            raise ValueError(
                "ls_outer above 0.5 is incompatible with the placement margin")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class Scenario:
    """A generated problem family: the target, its sources, and where
    every optimum was placed."""

    spec: ScenarioSpec
    target: Task
    sources: list[Task]
    target_optimum: np.ndarray
    source_optima: np.ndarray
    source_categories: list[str] = field(default_factory=list)

    def metadata(self) -> dict:
        """Self-describing summary for persisting alongside results."""
        return {
            "base": self.spec.base,
            "dim": self.spec.dim,
            "category": self.spec.category,
            "k": self.spec.k,
            "hs_radius": self.spec.hs_radius,
            "ls_inner": self.spec.ls_inner,
            "ls_outer": self.spec.ls_outer,
            "rotation": self.spec.rotation,
            "seed": self.spec.seed,
            "target_optimum": [float(v) for v in self.target_optimum],
            "source_optima": [[float(v) for v in row]
                              for row in self.source_optima],
            "source_categories": list(self.source_categories),
        }


def _draw_near_shift(radius, optimum, gen):
    # any point of the Chebyshev ball is in the box: radius <= margin
    return gen.uniform(-radius, radius, size=optimum.shape)


def _draw_far_shift(inner, outer, optimum, gen):
    for _ in range(_MAX_DRAW_ATTEMPTS):
        shift = gen.uniform(-outer, outer, size=optimum.shape)
        distance = np.max(np.abs(shift))
        if distance < inner or distance > outer:
            continue
        moved = optimum + shift
        if np.all(moved >= 0.0) and np.all(moved <= 1.0):
            return shift
    raise RuntimeError("could not place a far source optimum inside the box")


def _haar_rotation(dim, gen):
    matrix = gen.normal(size=(dim, dim))
    q, r = np.linalg.qr(matrix)
    return q * np.sign(np.diag(r))


def gen_scenario(spec: ScenarioSpec) -> Scenario:
    """Build the target task and its k source tasks, deterministically."""
    rng = RngStream(spec.seed)
    target_opt = _PLACEMENT_LOW + (_PLACEMENT_HIGH - _PLACEMENT_LOW) \
        * rng.child(0).gen.random(spec.dim)

    n_near = {"HS": spec.k, "LS": 0,
              "MS": math.ceil(spec.k / 2)}[spec.category]
    categories = ["HS"] * n_near + ["LS"] * (spec.k - n_near)

    lower, upper = np.zeros(spec.dim), np.ones(spec.dim)
    target = Task(spec.dim, lower.copy(), upper.copy(),
                  RecenteredObjective(spec.base, target_opt),
                  name=f"{spec.base}-target")

    sources, optima = [], []
    for i, kind in enumerate(categories):
        gen = rng.child(1, i).gen
        if kind == "HS":
            shift = _draw_near_shift(spec.hs_radius, target_opt, gen)
        else:
            shift = _draw_far_shift(spec.ls_inner, spec.ls_outer,
                                    target_opt, gen)
        optimum = target_opt + shift
        rot = _haar_rotation(spec.dim, rng.child(2, i).gen) \
            if spec.rotation else None
        sources.append(Task(spec.dim, lower.copy(), upper.copy(),
                            RecenteredObjective(spec.base, optimum, rot),
                            name=f"{spec.base}-src-{i:02d}"))
        optima.append(optimum)

    return Scenario(spec=spec, target=target, sources=sources,
                    target_optimum=target_opt,
                    source_optima=np.array(optima),
                    source_categories=categories)


def translated_copy_pair(base: str, dim: int, shift, seed: int):
    """A target and one source that is the target seen through a shifted
    lens: ``source(x) = target(x + shift)``.

    The source's optimum then sits at ``target_optimum - shift``, and
    mapping its solutions back to the target frame means adding ``shift``.
    Returns ``(target, source, target_optimum)``."""
    if base not in BASE_FUNCTIONS:
        raise ValueError(f"base must be one of {BASE_FUNCTIONS}")
    shift = np.asarray(shift, dtype=float)
    if shift.shape != (dim,):
        raise ValueError("shift must have one component per dimension")
    if np.max(np.abs(shift)) >= 1.0:
        raise ValueError("shift must stay inside the unit box")
    # keep both optima inside the box: the target's in the usual margin,
    # the source's (target optimum - shift) within [0, 1]
    low = np.maximum(_PLACEMENT_LOW, shift)
    high = np.minimum(_PLACEMENT_HIGH, 1.0 + shift)
    if np.any(low >= high):
        raise ValueError("shift is incompatible with the placement margin")
    gen = RngStream(seed).child(0).gen
    target_opt = low + (high - low) * gen.random(dim)
    lower, upper = np.zeros(dim), np.ones(dim)
    target_fn = RecenteredObjective(base, target_opt)
    target = Task(dim, lower.copy(), upper.copy(), target_fn,
                  name=f"{base}-target")
    source = Task(dim, lower.copy(), upper.copy(),
                  TranslatedView(target_fn, shift),
                  name=f"{base}-translated")
    return target, source, target_opt
