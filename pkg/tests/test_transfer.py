from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

import xferopt.transfer as xfer
from xferopt.acquisition import EvoConfig, InfillCriterion
from xferopt.adaptation import AdaptationMap
from xferopt.decay import DecayModel
from xferopt.engine import BackboneConfig, run_search
from xferopt.rng import RngStream
from xferopt.sampling import lhs_sample
from xferopt.surrogates import RbfInterpolator
from xferopt.task import Database, Task
from xferopt.transfer import (KnowledgeBase, SourceRecord, TransferConfig,
                              compete, external_improvement,
                              make_source_record, run_search_with_transfer,
                              source_improvement, surrogate_rank_similarity)

# --------------------------------------------------------------- fixtures


class FixedSurrogate:
    """Returns a preset prediction vector regardless of the query points."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    def predict(self, X, return_std=False):
        assert len(np.atleast_2d(X)) == len(self.values)
        if return_std:
            return self.values, np.zeros_like(self.values)
        return self.values


class FnSurrogate:
    def __init__(self, fn):
        self.fn = fn

    def predict(self, X, return_std=False):
        vals = np.asarray(self.fn(np.atleast_2d(X)), dtype=float)
        if return_std:
            return vals, np.zeros_like(vals)
        return vals


def sphere_task(dim=2):
    return Task(dim, np.full(dim, -5.0), np.full(dim, 5.0),
                lambda x: float(np.sum((x - 1.0) ** 2)))


def small_cfg(surrogate="gpr", n_init=8, budget=24):
    return BackboneConfig(
        surrogate=surrogate,
        criterion=InfillCriterion("lcb") if surrogate == "gpr" else InfillCriterion("pov"),
        evo=EvoConfig(operator_set="sbx" if surrogate == "gpr" else "de",
                      pop_size=12, n_iter=8),
        n_init=n_init,
        budget=budget,
    )


def trace_equal(a, b):
    if len(a.records) != len(b.records):
        return False
    for ra, rb in zip(a.records, b.records):
        if ra.fe != rb.fe or not np.array_equal(ra.point, rb.point):
            return False
        if ra.value != rb.value or ra.best_value != rb.best_value:
            return False
        if (ra.transferred, ra.source_id) != (rb.transferred, rb.source_id):
            return False
        if ra.internal_improvement != rb.internal_improvement:
            return False
        if ra.max_external_improvement != rb.max_external_improvement:
            return False
    return True


def unit_sphere_values(X):
    # the sphere task above, seen in the unit frame
    task = sphere_task()
    Z = task.lower_bounds + np.atleast_2d(X) * (task.upper_bounds - task.lower_bounds)
    return np.sum((Z - 1.0) ** 2, axis=1)


def helpful_source_record(source_id=0, seed=99):
    # a source that solved the very same function: its surrogate ranks the
    # target perfectly and its best point is the target's true optimum
    Xs = lhs_sample(40, 2, RngStream(seed, (7,)))
    ys = unit_sphere_values(Xs)
    return SourceRecord(
        source_id=source_id, X=Xs, y=ys,
        surrogate=RbfInterpolator().fit(Xs, ys),
        decay=DecayModel(0.0, 10.0, 0.2, 1.0, False),
        best_point=np.array([0.6, 0.6]), best_value=0.0, tau_max=120)


def make_record(**overrides):
    base = dict(source_id=0, X=np.zeros((4, 2)), y=np.arange(4.0),
                surrogate=FixedSurrogate(np.arange(4.0)),
                decay=DecayModel(0.0, 10.0, 0.1, 1.0, False),
                best_point=np.array([0.5, 0.5]), best_value=0.0, tau_max=100)
    base.update(overrides)
    return SourceRecord(**base)


def make_entry(source_id, gain, point=(0.5, 0.5)):
    return xfer.SourceDiagnostics(
        source_id=source_id, similarity=0.5, similarity_used=0.5,
        value_margin=1.0, reach_time=10.0, time_advantage=90.0,
        external_improvement=gain, candidate_point=np.asarray(point, float))


# ------------------------------------------------------------- similarity


def test_similarity_tracks_rank_agreement():
    X = lhs_sample(25, 2, RngStream(1, (7,)))
    y = unit_sphere_values(X)
    agree, flag = surrogate_rank_similarity(FnSurrogate(unit_sphere_values), X, y)
    assert not flag
    assert agree == pytest.approx(1.0, abs=1e-12)
    oppose, flag = surrogate_rank_similarity(
        FnSurrogate(lambda Z: -unit_sphere_values(Z)), X, y)
    assert not flag
    assert oppose == pytest.approx(-1.0, abs=1e-12)


def test_similarity_flags_constant_predictions():
    X = lhs_sample(10, 2, RngStream(2, (7,)))
    y = unit_sphere_values(X)
    rho, flag = surrogate_rank_similarity(FixedSurrogate(np.ones(10)), X, y)
    assert flag
    assert rho == 0.0


# ----------------------------------------------------- source improvement


def test_source_time_credit_matches_hand_inverted_curve():
    # curve 10 * exp(-0.1 t) reaches level 1 at t = ln(10)/0.1
    preds = np.array([4.0, 1.0, 2.5, 9.0])
    record = make_record(surrogate=FixedSurrogate(preds), best_value=0.5)
    margin, reach, advantage = source_improvement(record, np.zeros((4, 2)))
    assert margin == pytest.approx(0.5, abs=1e-12)
    assert reach == pytest.approx(23.025850929940457, rel=1e-12)
    assert advantage == pytest.approx(76.97414907005954, rel=1e-12)


def test_source_time_credit_clamps_at_both_ends():
    # level at or below the curve's floor: never reached, no credit left
    record = make_record(surrogate=FixedSurrogate(np.array([0.0, 3.0, 5.0, 7.0])))
    _, reach, advantage = source_improvement(record, np.zeros((4, 2)))
    assert reach == 100.0
    assert advantage == 0.0
    # level above the curve's start: reached before the source even began
    record = make_record(surrogate=FixedSurrogate(np.array([50.0, 60.0, 70.0, 80.0])))
    _, reach, advantage = source_improvement(record, np.zeros((4, 2)))
    assert reach == 0.0
    assert advantage == 100.0


def test_source_improvement_requires_usable_decay():
    record = make_record(decay=DecayModel(0.0, 0.0, 1e-6, 0.0, True))
    with pytest.raises(ValueError, match="degenerate"):
        source_improvement(record, np.zeros((4, 2)))


# --------------------------------------------------- external improvement


def test_external_improvement_frozen_value():
    decay = DecayModel(0.0, 10.0, 0.1, 1.0, False)
    best_y = 3.6787944117144233  # the curve's own level at time 10
    gain = external_improvement(0.8, decay, tau=10, time_advantage=40.0,
                                best_y=best_y)
    assert gain == pytest.approx(2.7965104182616654, rel=1e-12)


def test_external_improvement_zero_without_positive_agreement():
    decay = DecayModel(0.0, 10.0, 0.1, 1.0, False)
    assert external_improvement(0.0, decay, 10, 40.0, 5.0) == 0.0
    assert external_improvement(-0.7, decay, 10, 40.0, 5.0) == 0.0


def test_external_improvement_grows_with_agreement_and_credit():
    decay = DecayModel(0.0, 10.0, 0.1, 1.0, False)
    best_y = decay.value(10)
    gains_s = [external_improvement(s, decay, 10, 40.0, best_y)
               for s in (0.2, 0.5, 0.9)]
    assert gains_s == sorted(gains_s)
    gains_adv = [external_improvement(0.8, decay, 10, adv, best_y)
                 for adv in (5.0, 20.0, 80.0)]
    assert gains_adv == sorted(gains_adv)


# ----------------------------------------------------------------- compete


def test_compete_strict_win_takes_the_source_point():
    proposal = np.array([0.1, 0.2])
    decision = compete(0.5, proposal, [make_entry(3, 0.8, point=(0.7, 0.7))])
    assert decision.transferred
    assert decision.winner_id == 3
    assert np.array_equal(decision.point, np.array([0.7, 0.7]))
    assert decision.max_external_improvement == 0.8


def test_compete_tie_keeps_the_proposal():
    proposal = np.array([0.1, 0.2])
    decision = compete(0.8, proposal, [make_entry(3, 0.8)])
    assert not decision.transferred
    assert decision.winner_id is None
    assert np.array_equal(decision.point, proposal)
    assert decision.max_external_improvement == 0.8


def test_compete_ties_between_sources_go_to_the_first_listed():
    entries = [make_entry(7, 0.9, point=(0.3, 0.3)),
               make_entry(2, 0.9, point=(0.8, 0.8))]
    decision = compete(0.1, np.zeros(2), entries)
    assert decision.winner_id == 7
    assert np.array_equal(decision.point, np.array([0.3, 0.3]))


def test_compete_with_no_entries_keeps_the_proposal():
    proposal = np.array([0.4, 0.4])
    decision = compete(0.3, proposal, [])
    assert not decision.transferred
    assert decision.winner_id is None
    assert decision.max_external_improvement is None
    assert np.array_equal(decision.point, proposal)


# --------------------------------------------------------- loop behaviour


def test_empty_knowledge_base_degrades_to_plain_search():
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=16)
    plain = run_search(sphere_task(), cfg, RngStream(5))
    with_kb = run_search_with_transfer(task, KnowledgeBase(2, []), cfg,
                                       RngStream(5))
    assert trace_equal(plain, with_kb)
    assert with_kb.competitions == []


def test_untrusted_target_decay_suppresses_all_competitions():
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=16)
    kb = KnowledgeBase(2, [helpful_source_record()])
    strict = TransferConfig(interval=4, min_improvements_for_fit=99)
    plain = run_search(sphere_task(), cfg, RngStream(6))
    gated = run_search_with_transfer(task, kb, cfg, RngStream(6),
                                     transfer=strict)
    assert trace_equal(plain, gated)
    assert gated.competitions == []


def test_sources_with_degenerate_decay_sit_out():
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=16)
    flat = replace(helpful_source_record(),
                   decay=DecayModel(0.0, 0.0, 1e-6, 0.0, True))
    kb = KnowledgeBase(2, [flat])
    plain = run_search(sphere_task(), cfg, RngStream(7))
    gated = run_search_with_transfer(task, kb, cfg, RngStream(7),
                                     transfer=TransferConfig(interval=4))
    assert trace_equal(plain, gated)


@pytest.mark.parametrize("seed", [8, 15])
def test_checkpoint_cadence_and_single_use(seed):
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=24)
    kb = KnowledgeBase(2, [helpful_source_record()])
    trace = run_search_with_transfer(
        task, kb, cfg, RngStream(seed),
        transfer=TransferConfig(interval=4, min_improvements_for_fit=2))
    checkpoint_fes = {9, 13, 17, 21}
    for rec in trace.records:
        if rec.max_external_improvement is not None or rec.transferred:
            assert rec.fe in checkpoint_fes
    assert all(fe in checkpoint_fes for fe, _ in trace.competitions)
    transfers = [rec for rec in trace.records if rec.transferred]
    assert len(transfers) == 1  # seeds picked so the source wins, and only once
    assert transfers[0].source_id == 0
    assert transfers[0].value == pytest.approx(0.0, abs=1e-12)
    # once spent, the source leaves the competition entirely
    last_transfer_fe = transfers[0].fe
    assert all(fe <= last_transfer_fe for fe, _ in trace.competitions)


def test_decisions_carry_per_source_diagnostics():
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=24)
    kb = KnowledgeBase(2, [helpful_source_record()])
    # seed 15 yields both a losing and a winning competition in one trace
    trace = run_search_with_transfer(
        task, kb, cfg, RngStream(15),
        transfer=TransferConfig(interval=4, min_improvements_for_fit=2))
    outcomes = {decision.transferred for _, decision in trace.competitions}
    assert outcomes == {False, True}
    for fe, decision in trace.competitions:
        assert len(decision.entries) == 1
        entry = decision.entries[0]
        assert entry.source_id == 0
        assert entry.similarity == pytest.approx(1.0, abs=1e-6)
        assert entry.similarity_used == entry.similarity
        assert 0.0 <= entry.reach_time <= 120.0
        assert entry.time_advantage == pytest.approx(120.0 - entry.reach_time)
        # a losing offer may be negative; the decision rule is strict
        assert np.isfinite(entry.external_improvement)
        assert decision.transferred == (
            decision.internal_improvement < entry.external_improvement)
        assert decision.max_external_improvement == entry.external_improvement
    # the trace rows mirror the decisions
    by_fe = {rec.fe: rec for rec in trace.records}
    for fe, decision in trace.competitions:
        assert by_fe[fe].max_external_improvement == decision.max_external_improvement
        assert by_fe[fe].transferred == decision.transferred


def test_helpful_source_speeds_up_the_search():
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=24)
    kb = KnowledgeBase(2, [helpful_source_record()])
    # seed 8 wins the first competition, importing the true optimum
    plain = run_search(sphere_task(), cfg, RngStream(8))
    boosted = run_search_with_transfer(
        task, kb, cfg, RngStream(8),
        transfer=TransferConfig(interval=4, min_improvements_for_fit=2))
    assert boosted.records[-1].best_value < plain.records[-1].best_value


# ---------------------------------------------------------- rank scaling


def test_objective_scaling_changes_neither_gains_nor_winner():
    X = lhs_sample(30, 2, RngStream(11, (7,)))
    y = unit_sphere_values(X)
    target_decay = DecayModel(0.5, 5.0, 0.1, 1.0, False)
    tau, best_y = 30, float(np.min(y))
    noise = RngStream(12, (7,)).gen.normal(0.0, 0.3 * np.std(y), size=len(y))

    def build_entries(scale):
        specs = [
            make_record(source_id=0, X=X, y=scale * y,
                        surrogate=FnSurrogate(lambda Z: scale * (2.0 * unit_sphere_values(Z) + 1.0)),
                        decay=DecayModel(0.0, 10.0 * scale, 0.1, 1.0, False),
                        best_value=-0.3 * scale, tau_max=100),
            make_record(source_id=1, X=X, y=scale * y,
                        surrogate=FixedSurrogate(scale * (y + noise)),
                        decay=DecayModel(0.0, 8.0 * scale, 0.15, 1.0, False),
                        best_value=0.2 * scale, tau_max=80),
        ]
        entries = []
        for rec in specs:
            s, _ = surrogate_rank_similarity(rec.surrogate, X, y)
            _, reach, advantage = source_improvement(rec, X)
            gain = external_improvement(s, target_decay, tau, advantage, best_y)
            entries.append(make_entry(rec.source_id, gain))
        return entries

    plain_entries = build_entries(1.0)
    scaled_entries = build_entries(10.0)
    for a, b in zip(plain_entries, scaled_entries):
        assert a.external_improvement == pytest.approx(b.external_improvement,
                                                       rel=1e-9, abs=1e-12)
    d1 = compete(0.05, np.zeros(2), plain_entries)
    d2 = compete(0.05, np.zeros(2), scaled_entries)
    assert d1.winner_id == d2.winner_id
    assert d1.transferred == d2.transferred


# ------------------------------------------------------------- adaptation


def unattractive_map(*args, **kwargs):
    return AdaptationMap(shift=np.zeros(2), similarity=-1.0, damping=1.0,
                         degenerate=False, evaluations=0)


def test_offline_adaptation_fits_each_source_once(monkeypatch):
    calls = []

    def counting_fit(surrogate, X, y, rng, eval_budget):
        calls.append(len(X))
        return unattractive_map()

    monkeypatch.setattr(xfer, "fit_translation_map", counting_fit)
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=24)
    kb = KnowledgeBase(2, [helpful_source_record()])
    trace = run_search_with_transfer(
        task, kb, cfg, RngStream(0),
        transfer=TransferConfig(interval=4, min_improvements_for_fit=2,
                                adaptation="offline"))
    assert len(trace.competitions) >= 2  # nothing is ever attractive enough
    assert calls == [8]  # one fit, against the initial design only
    assert not any(rec.transferred for rec in trace.records)


def test_online_adaptation_refits_at_every_checkpoint(monkeypatch):
    calls = []

    def counting_fit(surrogate, X, y, rng, eval_budget):
        calls.append(len(X))
        return unattractive_map()

    monkeypatch.setattr(xfer, "fit_translation_map", counting_fit)
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=24)
    kb = KnowledgeBase(2, [helpful_source_record()])
    trace = run_search_with_transfer(
        task, kb, cfg, RngStream(0),
        transfer=TransferConfig(interval=4, min_improvements_for_fit=2,
                                adaptation="online"))
    assert len(calls) == len(trace.competitions)
    # online fits see the full archive as it grows past each checkpoint
    assert calls == [8, 12, 16, 20]


def test_offline_adaptation_reuses_a_stored_map(monkeypatch):
    def forbidden_fit(*args, **kwargs):
        raise AssertionError("stored maps must not be refitted")

    monkeypatch.setattr(xfer, "fit_translation_map", forbidden_fit)
    stored = AdaptationMap(shift=np.array([0.05, -0.05]), similarity=0.9,
                           damping=0.95, degenerate=False, evaluations=123)
    record = replace(helpful_source_record(), adaptation=stored)
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=24)
    trace = run_search_with_transfer(
        task, KnowledgeBase(2, [record]), cfg, RngStream(0),
        transfer=TransferConfig(interval=4, min_improvements_for_fit=2,
                                adaptation="offline"))
    assert trace.competitions
    entry = trace.competitions[0][1].entries[0]
    assert entry.similarity_used == stored.similarity


def test_adapted_candidate_point_is_the_shifted_best(monkeypatch):
    shift = np.array([0.2, 0.1])
    monkeypatch.setattr(
        xfer, "fit_translation_map",
        lambda *a, **k: AdaptationMap(shift=shift, similarity=0.7, damping=0.8,
                                      degenerate=False, evaluations=0))
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=24)
    record = helpful_source_record()
    trace = run_search_with_transfer(
        task, KnowledgeBase(2, [record]), cfg, RngStream(0),
        transfer=TransferConfig(interval=4, min_improvements_for_fit=2,
                                adaptation="offline"))
    assert trace.competitions
    entry = trace.competitions[0][1].entries[0]
    assert np.allclose(entry.candidate_point,
                       np.clip(record.best_point + shift, 0.0, 1.0),
                       atol=1e-12)
    assert entry.similarity_used == 0.7


# ------------------------------------------------------- record packaging


def test_make_source_record_captures_the_archive():
    X = lhs_sample(25, 2, RngStream(30, (7,)))
    y = unit_sphere_values(X)
    order = np.argsort(-y)  # shuffle so the best is not first
    db = Database(2)
    for i in order:
        db.append(X[i], float(y[i]))
    record = make_source_record(4, db, RngStream(31, (7,)), name="sphere")
    assert record.source_id == 4
    assert record.tau_max == 25
    assert record.best_value == pytest.approx(float(np.min(y)))
    assert np.array_equal(record.best_point, X[int(np.argmin(y))])
    assert record.name == "sphere"
    preds = record.surrogate.predict(record.X)
    rho, flag = surrogate_rank_similarity(record.surrogate, record.X, record.y)
    assert not flag and rho > 0.95
    assert len(preds) == 25


# -------------------------------------------------------------- validation


def test_knowledge_base_rejects_bad_records():
    with pytest.raises(ValueError, match="dim"):
        KnowledgeBase(0, [])
    rec = make_record()
    with pytest.raises(ValueError, match="dim"):
        KnowledgeBase(3, [rec])
    with pytest.raises(ValueError, match="duplicate"):
        KnowledgeBase(2, [rec, make_record()])


def test_source_record_shape_validation():
    with pytest.raises(ValueError, match="one value per row"):
        make_record(y=np.arange(3.0))
    with pytest.raises(ValueError, match="dimension"):
        make_record(best_point=np.array([0.5]))
    with pytest.raises(ValueError, match="tau_max"):
        make_record(tau_max=0)


def test_transfer_config_validation():
    with pytest.raises(ValueError, match="interval"):
        TransferConfig(interval=0)
    with pytest.raises(ValueError, match="min_improvements"):
        TransferConfig(min_improvements_for_fit=0)
    with pytest.raises(ValueError, match="adaptation must be"):
        TransferConfig(adaptation="sometimes")
    with pytest.raises(ValueError, match="adaptation_budget"):
        TransferConfig(adaptation_budget=10)


def test_run_rejects_dimension_mismatch():
    with pytest.raises(ValueError, match="dim"):
        run_search_with_transfer(sphere_task(3), KnowledgeBase(2, []),
                                 small_cfg(), RngStream(0))
