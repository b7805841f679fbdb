from __future__ import annotations

import numpy as np
import pytest

import xferopt.engine as eng
from xferopt.acquisition import EvoConfig, InfillCriterion
from xferopt.engine import BackboneConfig, dedup_guard, run_search
from xferopt.exceptions import RunAbortError, TrainingError
from xferopt.rng import RngStream
from xferopt.task import Database, Task


def sphere_task(dim=2):
    return Task(dim, np.full(dim, -5.0), np.full(dim, 5.0),
                lambda x: float(np.sum((x - 1.0) ** 2)))


def small_cfg(surrogate="gpr", n_init=8, budget=14):
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


# ------------------------------------------------------------- dedup guard


def test_guard_passes_clear_points_through():
    db = Database(2)
    db.append(np.array([0.5, 0.5]), 1.0)
    x = np.array([0.2, 0.9])
    out = dedup_guard(x, db, 1e-6, RngStream(1))
    assert np.array_equal(out, x)


def test_guard_resamples_collisions():
    db = Database(2)
    db.append(np.array([0.5, 0.5]), 1.0)
    out = dedup_guard(np.array([0.5, 0.5]), db, 1e-6, RngStream(2))
    assert np.max(np.abs(out - 0.5)) > 1e-6


def test_guard_empty_db_is_identity():
    x = np.array([0.3])
    assert np.array_equal(dedup_guard(x, Database(1), 1e-6, RngStream(0)), x)


def test_guard_exhaustion_returns_farthest_attempt():
    db = Database(1)
    db.append(np.array([0.5]), 0.0)
    # impossible tolerance: every unit-box point is within 2.0 of the archive
    out = dedup_guard(np.array([0.5]), db, 2.0, RngStream(3))
    assert out is not None
    assert 0.0 <= out[0] <= 1.0
    assert abs(out[0] - 0.5) > 0.3  # the farthest of 100 uniform draws


# ------------------------------------------------------------- plain run


@pytest.mark.parametrize("surrogate", ["gpr", "rbf"])
def test_run_produces_exact_budget(surrogate):
    task = sphere_task()
    cfg = small_cfg(surrogate)
    trace = run_search(task, cfg, RngStream(42))
    assert len(trace.records) == cfg.budget
    assert task.eval_counter == cfg.budget
    assert [r.fe for r in trace.records] == list(range(1, cfg.budget + 1))


def test_best_values_monotone_and_points_in_box():
    task = sphere_task()
    trace = run_search(task, small_cfg(), RngStream(7))
    best = [r.best_value for r in trace.records]
    assert all(a >= b for a, b in zip(best, best[1:]))
    for r in trace.records:
        assert np.all(r.point >= 0.0) and np.all(r.point <= 1.0)
    assert best == [float(np.min([r.value for r in trace.records[: i + 1]]))
                    for i in range(len(trace.records))]


def test_archived_points_respect_dedup_tolerance():
    task = sphere_task()
    cfg = small_cfg()
    trace = run_search(task, cfg, RngStream(13))
    pts = np.vstack([r.point for r in trace.records])
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            assert np.max(np.abs(pts[i] - pts[j])) > cfg.dedup_tol


def test_init_rows_have_no_improvement_fields():
    task = sphere_task()
    cfg = small_cfg()
    trace = run_search(task, cfg, RngStream(3))
    for r in trace.records[: cfg.n_init]:
        assert r.internal_improvement is None and not r.transferred
    for r in trace.records[cfg.n_init :]:
        assert r.internal_improvement is not None


def test_same_seed_reproduces_trace_bitwise():
    cfg = small_cfg()
    a = run_search(sphere_task(), cfg, RngStream(99))
    b = run_search(sphere_task(), cfg, RngStream(99))
    assert trace_equal(a, b)
    assert a.wall_time_s > 0.0


def test_different_seeds_differ():
    cfg = small_cfg()
    a = run_search(sphere_task(), cfg, RngStream(1))
    b = run_search(sphere_task(), cfg, RngStream(2))
    assert not trace_equal(a, b)


def test_search_actually_improves_on_sphere():
    task = sphere_task()
    cfg = small_cfg(n_init=10, budget=30)
    trace = run_search(task, cfg, RngStream(5))
    init_best = trace.records[cfg.n_init - 1].best_value
    assert trace.records[-1].best_value < init_best


def test_gpr_failure_falls_back_to_rbf_for_one_cycle(monkeypatch):
    calls = {"n": 0}
    real_fit = eng.GprRegressor.fit

    def flaky_fit(self, X, y):
        calls["n"] += 1
        if calls["n"] == 2:  # fail on the first acquisition cycle only
            raise TrainingError("forced")
        return real_fit(self, X, y)

    monkeypatch.setattr(eng.GprRegressor, "fit", flaky_fit)
    task = sphere_task()
    cfg = small_cfg(n_init=8, budget=12)
    trace = run_search(task, cfg, RngStream(21))
    assert len(trace.records) == 12
    assert trace.fallback_fes == [10]


def test_nonfinite_objective_aborts_with_partial_trace():
    count = {"n": 0}

    def bad(x):
        count["n"] += 1
        if count["n"] > 10:
            return float("nan")
        return float(np.sum(x**2))

    task = Task(2, np.full(2, -1.0), np.full(2, 1.0), bad)
    cfg = small_cfg(n_init=8, budget=20)
    with pytest.raises(RunAbortError) as exc_info:
        run_search(task, cfg, RngStream(17))
    assert len(exc_info.value.trace.records) == 10


def test_n_init_must_support_surrogates():
    task = sphere_task(dim=4)
    cfg = small_cfg(n_init=5, budget=9)  # 5 < dim + 2
    with pytest.raises(ValueError):
        run_search(task, cfg, RngStream(0))


def test_config_validation():
    with pytest.raises(ValueError):
        BackboneConfig(surrogate="forest")
    with pytest.raises(ValueError):
        BackboneConfig(n_init=50, budget=50)
    with pytest.raises(ValueError):
        BackboneConfig(dedup_tol=0.0)
