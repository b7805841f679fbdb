"""Translation maps that align a finished task's space with the target's.

A completed source task may be a shifted copy of the target.  When that is
the case, ranking the source surrogate's predictions at translated inputs
``x - shift`` against the target's observed values recovers the shift: the
right translation makes the rank agreement jump.  The fitted map is then
used two ways: its regularized agreement score replaces the raw similarity
of the source, and the source's best solution is translated into the
target's frame before it competes for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import RngStream
from .stats import spearman_with_flag

_POP_SIZE = 20
_MAX_ITER = 50
_DE_WEIGHT = 0.5
_DE_CROSSOVER = 0.8


@dataclass(frozen=True)
class AdaptationMap:
    """A fitted translation between a source task and the target.

    shift
        Additive offset in the unit-box frame; a source solution ``x`` maps
        to the target as ``clip(x + shift, 0, 1)``.
    similarity
        Regularized rank agreement achieved by the shift: the Spearman
        correlation of source predictions at ``X - shift`` with the target
        values, damped by ``1 - max(|shift|)`` so large offsets must earn
        their keep.
    damping
        The regularizer factor ``1 - max(|shift|)`` of the fitted shift,
        in ``[0, 1]``.
    degenerate
        True when every candidate shift produced constant predictions and
        the score carried no ranking information.
    evaluations
        Number of candidate shifts scored while fitting.
    """

    shift: np.ndarray
    similarity: float
    damping: float
    degenerate: bool
    evaluations: int


def shifted_similarity(shift, surrogate, X, y):
    """Score one candidate translation.

    Returns ``(value, degenerate)`` where value is
    ``(1 - max(|shift|)) * spearman(surrogate.predict(X - shift), y)``.
    """
    shift = np.asarray(shift, dtype=float)
    preds = surrogate.predict(np.asarray(X, dtype=float) - shift)
    rho, degenerate = spearman_with_flag(preds, np.asarray(y, dtype=float))
    damping = 1.0 - float(np.max(np.abs(shift)))
    return damping * rho, degenerate


def fit_translation_map(surrogate, X, y, rng: RngStream,
                        eval_budget: int = 2000) -> AdaptationMap:
    """Search for the translation that best aligns a source with the target.

    Runs a small differential-evolution loop over shifts in ``[-1, 1]^d``,
    maximizing the regularized rank agreement of the source surrogate's
    shifted predictions with the target data ``(X, y)``.  The zero shift is
    always part of the initial population, so the fitted map never scores
    below the unshifted source.  Each candidate costs one surrogate
    prediction sweep over ``X``; at most ``eval_budget`` candidates are
    scored.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one target value per row")
    if eval_budget < 2 * _POP_SIZE:
        raise ValueError(f"eval_budget must be at least {2 * _POP_SIZE}")
    d = X.shape[1]
    gen = rng.gen
    n_iter = min(_MAX_ITER, eval_budget // _POP_SIZE - 1)

    pop = gen.uniform(-1.0, 1.0, size=(_POP_SIZE, d))
    pop[0] = 0.0
    scores = np.empty(_POP_SIZE)
    flags = np.empty(_POP_SIZE, dtype=bool)
    for i in range(_POP_SIZE):
        scores[i], flags[i] = shifted_similarity(pop[i], surrogate, X, y)
    evaluations = _POP_SIZE
    any_informative = bool(np.any(~flags))

    for _ in range(n_iter):
        best = pop[int(np.argmax(scores))]
        for i in range(_POP_SIZE):
            r1 = (i + 1 + int(gen.integers(_POP_SIZE - 1))) % _POP_SIZE
            r2 = (i + 1 + int(gen.integers(_POP_SIZE - 1))) % _POP_SIZE
            while r2 == r1:
                r2 = (i + 1 + int(gen.integers(_POP_SIZE - 1))) % _POP_SIZE
            donor = best + _DE_WEIGHT * (pop[r1] - pop[r2])
            cross = gen.uniform(size=d) < _DE_CROSSOVER
            cross[int(gen.integers(d))] = True
            trial = np.clip(np.where(cross, donor, pop[i]), -1.0, 1.0)
            value, flag = shifted_similarity(trial, surrogate, X, y)
            evaluations += 1
            if not flag:
                any_informative = True
            if value >= scores[i]:
                pop[i] = trial
                scores[i] = value
                flags[i] = flag

    best_index = int(np.argmax(scores))
    if not any_informative:
        return AdaptationMap(shift=np.zeros(d), similarity=0.0, damping=1.0,
                             degenerate=True, evaluations=evaluations)
    shift = pop[best_index].copy()
    return AdaptationMap(shift=shift, similarity=float(scores[best_index]),
                         damping=1.0 - float(np.max(np.abs(shift))),
                         degenerate=False, evaluations=evaluations)


def adapt_solution(point, adaptation: AdaptationMap):
    """Translate a source solution into the target frame, clipped to the box."""
    point = np.asarray(point, dtype=float)
    return np.clip(point + adaptation.shift, 0.0, 1.0)
