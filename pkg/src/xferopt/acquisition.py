"""Choosing the next point to evaluate.

An infill criterion turns surrogate predictions into a score to minimize;
an evolutionary search hunts for the minimizer inside the unit box. No real
objective evaluations happen here, only surrogate predictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .rng import RngStream
from .task import Database

_SQRT_2PI = np.sqrt(2.0 * np.pi)
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class InfillCriterion:
    """Infill score; all three kinds are minimized.

    - ``pov``: the predicted value itself.
    - ``ei``: negated expected improvement below the incumbent, expressed so
      that smaller is better; it is non-positive everywhere and needs a
      predictive spread.
    - ``lcb``: mean minus ``weight`` times the predictive spread.
    """

    kind: str = "lcb"
    weight: float = 2.0

    def __post_init__(self):
        if self.kind not in ("pov", "ei", "lcb"):
            raise ValueError(f"unknown infill criterion {self.kind!r}")
        if self.weight <= 0.0:
            raise ValueError("weight must be positive")


def infill_values(criterion: InfillCriterion, mean, std, best_y: float) -> np.ndarray:
    """Vectorized criterion scores for predictions (mean, std)."""
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    if criterion.kind == "pov":
        return mean.copy()
    if criterion.kind == "lcb":
        return mean - criterion.weight * std
    # expected shortfall below the incumbent, negative when promising
    safe = np.maximum(std, _STD_FLOOR)
    z = (best_y - mean) / safe
    dens = np.exp(-0.5 * z * z) / _SQRT_2PI
    vals = (mean - best_y) * ndtr(z) - safe * dens
    collapsed = np.minimum(mean - best_y, 0.0)
    return np.where(std < _STD_FLOOR, collapsed, vals)


@dataclass(frozen=True)
class EvoConfig:
    """Settings for the inner evolutionary search.

    ``operator_set`` picks the recombination style: "sbx" runs simulated
    binary crossover plus polynomial mutation with roulette-wheel parent
    selection and a half-random half-elite start; "de" runs best/1
    differential evolution from an elite start.
    """

    operator_set: str = "sbx"
    pop_size: int = 50
    n_iter: int = 50
    crossover_prob: float = 1.0
    crossover_eta: float = 15.0
    mutation_prob: float | None = None  # default 1/d
    mutation_eta: float = 15.0
    de_weight: float = 0.5
    de_crossover: float = 0.8

    def __post_init__(self):
        if self.operator_set not in ("sbx", "de"):
            raise ValueError(f"unknown operator_set {self.operator_set!r}")
        if self.pop_size < 4:
            raise ValueError("pop_size must be >= 4")
        if self.n_iter < 0:
            raise ValueError("n_iter must be >= 0")


@dataclass
class AcquisitionResult:
    point: np.ndarray
    value: float
    db_baseline: float
    internal_improvement: float
    best_history: list[float] = field(default_factory=list)


def _roulette_probs(fit: np.ndarray) -> np.ndarray:
    # max-shifted so the best (lowest) score gets the largest slice
    span = float(fit.max() - fit.min())
    if span <= 0.0:
        return np.full(fit.size, 1.0 / fit.size)
    w = fit.max() - fit
    return w / w.sum()


def _sbx_offspring(parents: np.ndarray, cfg: EvoConfig, rng: RngStream) -> np.ndarray:
    half = parents.shape[0] // 2
    p1 = parents[:half]
    p2 = parents[half : 2 * half]
    u = rng.gen.random(p1.shape)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (cfg.crossover_eta + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (cfg.crossover_eta + 1.0)),
    )
    apply = (rng.gen.random(half) < cfg.crossover_prob)[:, None]
    c1 = np.where(apply, 0.5 * ((1 + beta) * p1 + (1 - beta) * p2), p1)
    c2 = np.where(apply, 0.5 * ((1 - beta) * p1 + (1 + beta) * p2), p2)
    return np.clip(np.vstack([c1, c2]), 0.0, 1.0)


def _poly_mutate(pop: np.ndarray, cfg: EvoConfig, rng: RngStream) -> np.ndarray:
    d = pop.shape[1]
    pm = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / d
    mask = rng.gen.random(pop.shape) < pm
    u = rng.gen.random(pop.shape)
    delta = np.where(
        u < 0.5,
        (2.0 * u) ** (1.0 / (cfg.mutation_eta + 1.0)) - 1.0,
        1.0 - (2.0 * (1.0 - u)) ** (1.0 / (cfg.mutation_eta + 1.0)),
    )
    return np.clip(np.where(mask, pop + delta, pop), 0.0, 1.0)


def _init_population(dim: int, n_random: int, elites: np.ndarray, rng: RngStream,
                     pop_size: int) -> np.ndarray:
    take = min(pop_size - n_random, elites.shape[0])
    rand_count = pop_size - take
    parts = []
    if take > 0:
        parts.append(elites[:take])
    if rand_count > 0:
        parts.append(rng.gen.random((rand_count, dim)))
    return np.vstack(parts)


def _search_sbx(f, dim, cfg, rng, elites):
    pop = _init_population(dim, cfg.pop_size - cfg.pop_size // 2, elites, rng, cfg.pop_size)
    fit = f(pop)
    best_idx = int(np.argmin(fit))
    best_x, best_v = pop[best_idx].copy(), float(fit[best_idx])
    history = [best_v]
    for _ in range(cfg.n_iter):
        probs = _roulette_probs(fit)
        n_parents = cfg.pop_size + (cfg.pop_size % 2)
        idx = rng.gen.choice(cfg.pop_size, size=n_parents, p=probs)
        offspring = _sbx_offspring(pop[idx], cfg, rng)[: cfg.pop_size]
        offspring = _poly_mutate(offspring, cfg, rng)
        off_fit = f(offspring)
        # strict elitism: the incumbent replaces the worst offspring
        worst = int(np.argmax(off_fit))
        offspring[worst] = best_x
        off_fit[worst] = best_v
        pop, fit = offspring, off_fit
        i = int(np.argmin(fit))
        if float(fit[i]) < best_v:
            best_x, best_v = pop[i].copy(), float(fit[i])
        history.append(best_v)
    return best_x, best_v, history


def _search_de(f, dim, cfg, rng, elites):
    pop = _init_population(dim, 0, elites, rng, cfg.pop_size)
    fit = f(pop)
    best_idx = int(np.argmin(fit))
    best_x, best_v = pop[best_idx].copy(), float(fit[best_idx])
    history = [best_v]
    n = cfg.pop_size
    for _ in range(cfg.n_iter):
        r1 = (np.arange(n) + 1 + rng.gen.integers(0, n - 1, size=n)) % n
        r2 = (np.arange(n) + 1 + rng.gen.integers(0, n - 1, size=n)) % n
        clash = r2 == r1
        while np.any(clash):
            r2[clash] = (np.arange(n)[clash] + 1
                         + rng.gen.integers(0, n - 1, size=int(clash.sum()))) % n
            clash = r2 == r1
        mutant = best_x[None, :] + cfg.de_weight * (pop[r1] - pop[r2])
        cross = rng.gen.random((n, dim)) < cfg.de_crossover
        jrand = rng.gen.integers(0, dim, size=n)
        cross[np.arange(n), jrand] = True
        trial = np.clip(np.where(cross, mutant, pop), 0.0, 1.0)
        t_fit = f(trial)
        better = t_fit <= fit
        pop = np.where(better[:, None], trial, pop)
        fit = np.where(better, t_fit, fit)
        i = int(np.argmin(fit))
        if float(fit[i]) < best_v:
            best_x, best_v = pop[i].copy(), float(fit[i])
        history.append(best_v)
    return best_x, best_v, history


def acquire_candidate(model, db: Database, criterion: InfillCriterion,
                      evo: EvoConfig, rng: RngStream) -> AcquisitionResult:
    """Minimize the infill criterion over the unit box.

    Returns the proposed point together with the internal improvement: the
    criterion's best value over the archive minus its value at the proposal.
    """
    if len(db) == 0:
        raise ValueError("cannot acquire from an empty database")
    best_y = db.best_value()

    def score(X: np.ndarray) -> np.ndarray:
        mean, std = model.predict(X, return_std=True)
        return infill_values(criterion, mean, std, best_y)

    db_scores = score(db.X)
    baseline = float(np.min(db_scores))
    elites = db.X[np.argsort(db_scores, kind="mergesort")]

    search = _search_sbx if evo.operator_set == "sbx" else _search_de
    x_best, v_best, history = search(score, db.dim, evo, rng, elites)
    return AcquisitionResult(
        point=x_best,
        value=v_best,
        db_baseline=baseline,
        internal_improvement=baseline - v_best,
        best_history=history,
    )
