"""Competitive reuse of solutions from previously finished searches.

When expensive optimization tasks arrive in sequence, every finished task
leaves behind its evaluated data, a surrogate fitted to that data, the
decay curve of its convergence trace, and its best solution.  This module
lets a new search draw on that history: at fixed checkpoints the search's
own proposal competes against the best solutions of the stored sources,
and whichever promises the larger improvement gets the next evaluation.

The two sides of the competition are put on equal footing as improvement
estimates over the current archive:

* the internal estimate is how much the search's own proposal improves on
  the archive under the infill criterion, and
* the external estimate, per source, reads the target's own fitted decay
  curve at a similarity-discounted future time.  The discount is the rank
  agreement between the source surrogate's predictions and the target's
  observations; the time credit is how much further along its own decay
  curve the source had gotten than the target's sampled region suggests.

Each source may win at most once per run, so a misleading source cannot
dominate the evaluation budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adaptation import AdaptationMap, adapt_solution, fit_translation_map
from .decay import DecayModel, fit_decay
from .engine import (BackboneConfig, CompetitionOutcome, RunTrace, run_loop)
from .exceptions import TrainingError
from .rng import RngStream
from .stats import spearman_with_flag
from .surrogates import GprRegressor, RbfInterpolator
from .task import Database, Task

_ADAPTATION_MODES = ("off", "offline", "online")


@dataclass
class SourceRecord:
    """Everything kept from one finished task.

    All coordinates live in the shared unit box.  ``tau_max`` is the
    number of evaluations the source spent, which is also the time its
    decay curve is credited with having reached."""

    source_id: int
    X: np.ndarray
    y: np.ndarray
    surrogate: object
    decay: DecayModel
    best_point: np.ndarray
    best_value: float
    tau_max: int
    name: str = ""
    # original-space box of the source task, kept for bookkeeping; the
    # archive coordinates themselves always live in the unit box
    lower_bounds: Optional[np.ndarray] = None
    upper_bounds: Optional[np.ndarray] = None
    # a translation map carried over from an earlier fit; offline
    # adaptation reuses it instead of fitting again
    adaptation: Optional[AdaptationMap] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.best_point = np.asarray(self.best_point, dtype=float)
        if self.X.ndim != 2 or self.y.ndim != 1 or len(self.X) != len(self.y):
            raise ValueError("X must be (n, d) with one value per row")
        if self.best_point.shape != (self.X.shape[1],):
            raise ValueError("best_point must match the task dimension")
        if self.tau_max < 1:
            raise ValueError("tau_max must be a positive evaluation count")
        if self.lower_bounds is not None:
            self.lower_bounds = np.asarray(self.lower_bounds, dtype=float)
        if self.upper_bounds is not None:
            self.upper_bounds = np.asarray(self.upper_bounds, dtype=float)

    @property
    def dim(self) -> int:
        return self.X.shape[1]


@dataclass
class KnowledgeBase:
    """An ordered collection of source records sharing one search space."""

    dim: int
    records: list[SourceRecord] = field(default_factory=list)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        seen = set()
        for rec in self.records:
            if rec.dim != self.dim:
                raise ValueError(
                    f"source {rec.source_id} has dim {rec.dim}, expected {self.dim}")
            if rec.source_id in seen:
                raise ValueError(f"duplicate source_id {rec.source_id}")
            seen.add(rec.source_id)

    @property
    def k(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class TransferConfig:
    """Knobs of the competitive reuse mechanism.

    interval
        A competition is held whenever the archive size is a multiple of
        this many evaluations, checked after the search proposes a point
        and before anything is evaluated.
    min_improvements_for_fit
        The target's decay curve is only trusted once its running best has
        strictly improved this many times; before that, checkpoints pass
        without a competition.
    adaptation
        "off" uses each source's best solution as stored.  "offline" fits
        one translation map per source against the initial archive and
        reuses it all run.  "online" refits the maps at every checkpoint
        against the full archive.
    adaptation_budget
        Candidate-shift evaluations granted to each translation-map fit.
    """

    interval: int = 20
    min_improvements_for_fit: int = 3
    adaptation: str = "off"
    adaptation_budget: int = 2000

    def __post_init__(self):
        if self.interval < 1:
            raise ValueError("interval must be a positive evaluation count")
        if self.min_improvements_for_fit < 1:
            raise ValueError("min_improvements_for_fit must be at least 1")
        if self.adaptation not in _ADAPTATION_MODES:
            raise ValueError(f"adaptation must be one of {_ADAPTATION_MODES}")
        if self.adaptation_budget < 40:
            raise ValueError("adaptation_budget must be at least 40")


@dataclass(frozen=True)
class SourceDiagnostics:
    """One source's side of a single competition.

    similarity is the raw rank agreement of the source surrogate with the
    target archive; similarity_used is what entered the improvement
    estimate (the translation map's regularized score when adaptation is
    on, otherwise the same value).  candidate_point is what would be
    evaluated if this source won."""

    source_id: int
    similarity: float
    similarity_used: float
    value_margin: float
    reach_time: float
    time_advantage: float
    external_improvement: float
    candidate_point: np.ndarray


@dataclass(frozen=True)
class TransferDecision:
    """Outcome of one checkpoint competition, with per-source reasoning."""

    internal_improvement: float
    entries: tuple[SourceDiagnostics, ...]
    transferred: bool
    winner_id: Optional[int]
    point: np.ndarray
    max_external_improvement: Optional[float]


def surrogate_rank_similarity(surrogate, X, y):
    """Rank agreement between a surrogate's predictions and observed values.

    Returns ``(rho, degenerate)``: the Spearman correlation of
    ``surrogate.predict(X)`` with ``y``, and a flag that is True when
    either side is constant in ranks, in which case rho is 0."""
    preds = np.asarray(surrogate.predict(np.asarray(X, dtype=float)), dtype=float)
    return spearman_with_flag(preds, np.asarray(y, dtype=float))


def source_improvement(record: SourceRecord, X):
    """How much spare convergence a source has over the target's region.

    The source surrogate is evaluated on the target's archive points; the
    best (lowest) prediction is the level the target's sampled region lets
    the source reach.  Inverting the source's decay curve at that level
    gives the time the source itself needed to get there, and the
    remainder of its budget is the time credit it brings.

    Returns ``(value_margin, reach_time, time_advantage)`` where
    value_margin is the best prediction minus the source's own best value,
    reach_time is the inverted curve time clamped to ``[0, tau_max]``, and
    time_advantage is ``tau_max - reach_time``."""
    if record.decay.degenerate:
        raise ValueError("source decay fit is degenerate; no time credit defined")
    preds = np.asarray(record.surrogate.predict(np.asarray(X, dtype=float)),
                       dtype=float)
    level = float(np.min(preds))
    value_margin = level - record.best_value
    excess = level - record.decay.floor
    if excess <= 0.0:
        # the curve only reaches this level in the limit; no credit left
        reach_time = float(record.tau_max)
    else:
        reach_time = math.log(record.decay.amplitude / excess) / record.decay.rate
        reach_time = min(max(reach_time, 0.0), float(record.tau_max))
    return value_margin, reach_time, float(record.tau_max) - reach_time


def external_improvement(similarity, target_decay: DecayModel, tau,
                         time_advantage, best_y):
    """Expected gain from evaluating a source's solution now.

    Reads the target's own decay curve at the similarity-discounted future
    time ``similarity * (tau + time_advantage)`` and takes the difference
    from the current best.  Sources with no positive rank agreement get
    exactly zero."""
    if similarity <= 0.0:
        return 0.0
    horizon = similarity * (float(tau) + float(time_advantage))
    return float(similarity) * (float(best_y) - target_decay.value(horizon))


def compete(internal_improvement, proposal, entries) -> TransferDecision:
    """Pick the point to evaluate: the search's proposal or a source's best.

    The largest external estimate challenges the internal one; the source
    solution is taken only when it is strictly larger, so ties keep the
    search's own proposal.  Ties between sources go to the one listed
    first."""
    proposal = np.asarray(proposal, dtype=float)
    entries = tuple(entries)
    internal_improvement = float(internal_improvement)
    if not entries:
        return TransferDecision(internal_improvement, entries, False, None,
                                proposal, None)
    gains = np.array([e.external_improvement for e in entries])
    winner = int(np.argmax(gains))
    best_gain = float(gains[winner])
    if internal_improvement < best_gain:
        chosen = entries[winner]
        return TransferDecision(internal_improvement, entries, True,
                                chosen.source_id, chosen.candidate_point.copy(),
                                best_gain)
    return TransferDecision(internal_improvement, entries, False, None,
                            proposal, best_gain)


def make_source_record(source_id: int, db: Database, rng: RngStream,
                       name: str = "", lower_bounds=None,
                       upper_bounds=None) -> SourceRecord:
    """Package a finished search's archive into a reusable source record.

    Fits a fresh surrogate on all of the source's data (falling back to
    the interpolant when the probabilistic fit fails) and a decay curve on
    its running best trace.  The decay fit may come out degenerate for
    traces that never improved; such records are stored but sit out of
    competitions."""
    X, y = db.X, db.y
    try:
        surrogate = GprRegressor(random_state=rng).fit(X, y)
    except TrainingError:
        surrogate = RbfInterpolator().fit(X, y)
    decay = fit_decay(db.best_so_far())
    return SourceRecord(source_id=source_id, X=X, y=y, surrogate=surrogate,
                        decay=decay, best_point=db.best_point().copy(),
                        best_value=float(db.best_value()), tau_max=len(db),
                        name=name, lower_bounds=lower_bounds,
                        upper_bounds=upper_bounds)


def run_search_with_transfer(task: Task, kb: KnowledgeBase,
                             cfg: BackboneConfig, rng: RngStream,
                             transfer: TransferConfig = TransferConfig()
                             ) -> RunTrace:
    """Surrogate-assisted search that lets stored sources compete for
    evaluations.

    Behaves exactly like the plain search except at checkpoints, where the
    proposal just produced competes against the not-yet-used sources'
    solutions.  With an empty knowledge base the run is identical to the
    plain search, stream for stream.  Per-checkpoint decisions, with full
    per-source diagnostics, are kept on the returned trace as
    ``(fe, TransferDecision)`` pairs."""
    if kb.dim != task.dim:
        raise ValueError(f"knowledge base dim {kb.dim} != task dim {task.dim}")
    used: set[int] = set()
    offline_maps: dict[int, AdaptationMap] = {}
    decisions: list[tuple[int, TransferDecision]] = []

    def fit_map(record, X, y, stream):
        return fit_translation_map(record.surrogate, X, y, stream,
                                   eval_budget=transfer.adaptation_budget)

    def competitor(db: Database, acq, crng: RngStream):
        if len(db) % transfer.interval != 0:
            return None
        active = [r for r in kb.records
                  if r.source_id not in used and not r.decay.degenerate]
        if not active:
            return None
        best_trace = db.best_so_far()
        if int(np.sum(np.diff(best_trace) < 0)) < transfer.min_improvements_for_fit:
            return None
        target_decay = fit_decay(best_trace)
        if target_decay.degenerate:
            return None
        tau = len(db)
        best_y = db.best_value()
        entries = []
        for record in active:
            rho, _ = surrogate_rank_similarity(record.surrogate, db.X, db.y)
            candidate = record.best_point
            s_used = rho
            if transfer.adaptation == "offline":
                amap = offline_maps.get(record.source_id)
                if amap is None and record.adaptation is not None:
                    amap = record.adaptation
                    offline_maps[record.source_id] = amap
                if amap is None:
                    # fitted once, against the initial design only
                    amap = fit_map(record, db.X[:cfg.n_init],
                                   db.y[:cfg.n_init],
                                   rng.child(5, record.source_id))
                    offline_maps[record.source_id] = amap
                s_used = amap.similarity
                candidate = adapt_solution(record.best_point, amap)
            elif transfer.adaptation == "online":
                amap = fit_map(record, db.X, db.y,
                               crng.child(record.source_id))
                s_used = amap.similarity
                candidate = adapt_solution(record.best_point, amap)
            margin, reach, advantage = source_improvement(record, db.X)
            gain = external_improvement(s_used, target_decay, tau, advantage,
                                        best_y)
            entries.append(SourceDiagnostics(
                source_id=record.source_id, similarity=rho,
                similarity_used=s_used, value_margin=margin, reach_time=reach,
                time_advantage=advantage, external_improvement=gain,
                candidate_point=np.asarray(candidate, dtype=float)))
        decision = compete(acq.internal_improvement, acq.point, entries)
        decisions.append((len(db) + 1, decision))
        if decision.transferred:
            used.add(decision.winner_id)
        return CompetitionOutcome(point=decision.point,
                                  transferred=decision.transferred,
                                  source_id=decision.winner_id,
                                  max_external_improvement=decision.max_external_improvement)

    trace = run_loop(task, cfg, rng, competitor=competitor)
    trace.competitions.extend(decisions)
    return trace
