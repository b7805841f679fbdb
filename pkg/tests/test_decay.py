from __future__ import annotations

import numpy as np
import pytest

from xferopt.decay import DecayModel, fit_decay


def synthetic_trace(floor, amplitude, rate, t_max):
    taus = np.arange(1, t_max + 1, dtype=float)
    return floor + amplitude * np.exp(-rate * taus)


def test_recovers_noiseless_parameters_unknown_floor():
    trace = synthetic_trace(2.0, 8.0, 0.05, 100)
    model = fit_decay(trace)
    assert not model.degenerate
    assert abs(model.floor - 2.0) < 1e-4
    assert abs(model.amplitude - 8.0) < 1e-4
    assert abs(model.rate - 0.05) < 1e-4
    assert model.fit_quality > 0.999


def test_recovers_noiseless_parameters_known_floor():
    trace = synthetic_trace(2.0, 8.0, 0.05, 60)
    model = fit_decay(trace, known_optimum=2.0)
    assert abs(model.floor - 2.0) < 1e-12
    assert abs(model.amplitude - 8.0) < 1e-9
    assert abs(model.rate - 0.05) < 1e-9


def test_value_evaluates_the_curve():
    m = DecayModel(floor=1.0, amplitude=3.0, rate=0.2, fit_quality=1.0)
    assert m.value(0.0) == pytest.approx(4.0)
    assert m.value(np.array([1.0, 2.0]))[0] == pytest.approx(1.0 + 3.0 * np.exp(-0.2))


def test_plateaus_are_ignored():
    # running-minimum style trace: improvements separated by flat stretches;
    # the fit regresses on the improving steps only and stays sane
    base = synthetic_trace(0.5, 4.0, 0.1, 40)
    trace = np.minimum.accumulate(np.repeat(base[::2], 2))[:40]
    model = fit_decay(trace)
    assert not model.degenerate
    assert 0.03 < model.rate < 0.3
    assert abs(model.floor - 0.5) < 1.0


def test_flat_trace_is_degenerate():
    model = fit_decay(np.full(10, 3.25))
    assert model.degenerate
    assert model.floor == 3.25
    assert model.amplitude == 0.0
    assert model.rate == pytest.approx(1e-6)


def test_single_drop_is_degenerate():
    trace = np.array([5.0, 5.0, 4.0, 4.0, 4.0])
    model = fit_decay(trace)
    assert model.degenerate
    assert model.floor == 4.0


def test_increasing_trace_rejected():
    with pytest.raises(ValueError):
        fit_decay([3.0, 2.0, 2.5, 1.0])


def test_too_short_or_bad_input_rejected():
    with pytest.raises(ValueError):
        fit_decay([2.0, 1.0])
    with pytest.raises(ValueError):
        fit_decay([2.0, np.nan, 1.0])


def test_known_floor_at_trace_level_degenerate():
    model = fit_decay(np.array([2.0, 2.0, 2.0, 2.0]), known_optimum=2.0)
    assert model.degenerate


def test_noisy_trace_sensible_fit():
    rng = np.random.default_rng(19)
    clean = synthetic_trace(1.0, 6.0, 0.08, 80)
    jitter = rng.uniform(0.0, 0.05, size=80)
    trace = np.minimum.accumulate(clean + jitter)
    model = fit_decay(trace)
    assert not model.degenerate
    assert 0.02 < model.rate < 0.3
    assert abs(model.floor - 1.0) < 0.5
    assert model.fit_quality > 0.8


def test_shifted_traces_shift_only_the_floor():
    trace = synthetic_trace(0.0, 5.0, 0.07, 50)
    a = fit_decay(trace)
    b = fit_decay(trace + 11.0)
    assert abs((b.floor - a.floor) - 11.0) < 1e-8
    assert abs(b.rate - a.rate) < 1e-10
    assert abs(b.amplitude - a.amplitude) < 1e-8
