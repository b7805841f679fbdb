"""The surrogate-assisted optimization loop.

Each cycle refits the surrogate from scratch on the full archive, acquires a
candidate by minimizing the infill criterion, optionally lets an external
competitor replace the candidate (see :mod:`xferopt.transfer`), guards the
point against near-duplicates, and spends one real evaluation. Latin
hypercube initialization counts against the same budget.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .acquisition import AcquisitionResult, EvoConfig, InfillCriterion, acquire_candidate
from .exceptions import RunAbortError, TrainingError
from .rng import RngStream
from .sampling import lhs_sample
from .surrogates import GprRegressor, RbfInterpolator
from .task import Database, Task

_GUARD_ATTEMPTS = 100


@dataclass(frozen=True)
class BackboneConfig:
    """Shape of the plain search: surrogate family, criterion, inner search,
    initialization size, total evaluation budget, duplicate tolerance."""

    name: str = "bo-lcb"
    surrogate: str = "gpr"
    criterion: InfillCriterion = field(default_factory=InfillCriterion)
    evo: EvoConfig = field(default_factory=EvoConfig)
    n_init: int = 50
    budget: int = 500
    dedup_tol: float = 1e-6

    def __post_init__(self):
        if self.surrogate not in ("gpr", "rbf"):
            raise ValueError(f"unknown surrogate {self.surrogate!r}")
        if self.n_init < 1:
            raise ValueError("n_init must be >= 1")
        if self.budget <= self.n_init:
            raise ValueError("budget must exceed n_init")
        if self.dedup_tol <= 0.0:
            raise ValueError("dedup_tol must be positive")


@dataclass
class EvalRecord:
    """One evaluation: its index (1-based), location, value, running best,
    and the competition outcome if one was held for this slot."""

    fe: int
    point: np.ndarray
    value: float
    best_value: float
    transferred: bool = False
    source_id: Optional[int] = None
    internal_improvement: Optional[float] = None
    max_external_improvement: Optional[float] = None


@dataclass
class RunTrace:
    seed: int
    rng_path: tuple
    records: list[EvalRecord] = field(default_factory=list)
    fallback_fes: list[int] = field(default_factory=list)
    # (fe, decision) pairs kept by a competitor that records its reasoning
    competitions: list[tuple] = field(default_factory=list)
    wall_time_s: float = 0.0


@dataclass
class CompetitionOutcome:
    """What a competitor wants evaluated instead of the search's proposal."""

    point: np.ndarray
    transferred: bool
    source_id: Optional[int]
    max_external_improvement: Optional[float]


# A competitor sees the archive, the fresh acquisition, and a private stream;
# it returns None outside its checkpoints.
Competitor = Callable[[Database, AcquisitionResult, RngStream], Optional[CompetitionOutcome]]


def dedup_guard(x: np.ndarray, db: Database, tol: float, rng: RngStream) -> np.ndarray:
    """Keep evaluations apart: if ``x`` is within Chebyshev ``tol`` of an
    archived point, resample uniformly (up to 100 tries), then fall back to
    the attempt farthest from the archive."""
    x = np.asarray(x, dtype=float)
    if len(db) == 0:
        return x
    pts = db.X

    def clearance(p):
        return float(np.min(np.max(np.abs(pts - p), axis=1)))

    if clearance(x) > tol:
        return x
    best_p, best_c = None, -1.0
    for _ in range(_GUARD_ATTEMPTS):
        cand = rng.gen.random(db.dim)
        c = clearance(cand)
        if c > tol:
            return cand
        if c > best_c:
            best_p, best_c = cand, c
    return best_p


def _fit_surrogate(cfg: BackboneConfig, db: Database, rng: RngStream,
                   trace: RunTrace, fe: int):
    X, y = db.X, db.y
    if cfg.surrogate == "gpr":
        try:
            return GprRegressor(random_state=rng).fit(X, y)
        except TrainingError:
            # single-cycle fallback to the interpolant, noted in the trace
            trace.fallback_fes.append(fe)
            try:
                return RbfInterpolator().fit(X, y)
            except TrainingError as exc:
                raise RunAbortError(f"surrogate fallback failed: {exc}", trace) from exc
    try:
        return RbfInterpolator().fit(X, y)
    except TrainingError as exc:
        raise RunAbortError(f"surrogate fit failed: {exc}", trace) from exc


def _spend_evaluation(task: Task, db: Database, trace: RunTrace, x: np.ndarray,
                      **outcome) -> None:
    y = task.evaluate_common(x)
    if not np.isfinite(y):
        raise RunAbortError(f"objective returned non-finite value {y!r}", trace)
    db.append(x, y)
    trace.records.append(EvalRecord(
        fe=len(db), point=x.copy(), value=y, best_value=db.best_value(), **outcome))


def run_loop(task: Task, cfg: BackboneConfig, rng: RngStream,
             competitor: Optional[Competitor] = None) -> RunTrace:
    """Run the loop to its budget, returning one record per evaluation."""
    d = task.dim
    if cfg.n_init < d + 2:
        raise ValueError("n_init must be at least dim + 2 for the surrogates")
    started = time.perf_counter()
    db = Database(d)
    trace = RunTrace(seed=rng.seed, rng_path=rng.path)

    init_pts = lhs_sample(cfg.n_init, d, rng.child(0))
    for i in range(cfg.n_init):
        x = dedup_guard(init_pts[i], db, cfg.dedup_tol, rng.child(3, i))
        _spend_evaluation(task, db, trace, x)

    while len(db) < cfg.budget:
        idx = len(db)  # evaluations spent so far; this cycle produces fe idx+1
        model = _fit_surrogate(cfg, db, rng.child(1, idx), trace, idx + 1)
        acq = acquire_candidate(model, db, cfg.criterion, cfg.evo, rng.child(2, idx))
        outcome = None
        if competitor is not None:
            outcome = competitor(db, acq, rng.child(4, idx))
        if outcome is None:
            x_e = acq.point
            info = dict(transferred=False, source_id=None,
                        internal_improvement=acq.internal_improvement,
                        max_external_improvement=None)
        else:
            x_e = outcome.point
            info = dict(transferred=outcome.transferred,
                        source_id=outcome.source_id,
                        internal_improvement=acq.internal_improvement,
                        max_external_improvement=outcome.max_external_improvement)
        x_e = dedup_guard(x_e, db, cfg.dedup_tol, rng.child(3, idx))
        _spend_evaluation(task, db, trace, x_e, **info)

    trace.wall_time_s = time.perf_counter() - started
    return trace


def run_search(task: Task, cfg: BackboneConfig, rng: RngStream) -> RunTrace:
    """Plain surrogate-assisted search with no knowledge reuse."""
    return run_loop(task, cfg, rng, competitor=None)
