"""Exponential-decay models of best-so-far convergence traces.

A trace of running minima is summarized as value(tau) = floor +
amplitude * exp(-rate * tau), where tau counts objective evaluations
starting at 1. The fit gives the transfer logic a clock: it can read off
how long a search would need to reach a given level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Rate assigned when a trace carries too little signal to regress on.
_DEGENERATE_RATE = 1e-6


@dataclass(frozen=True)
class DecayModel:
    floor: float
    amplitude: float
    rate: float
    fit_quality: float
    degenerate: bool = False

    def value(self, tau):
        """Model value at evaluation count ``tau`` (scalar or array)."""
        tau = np.asarray(tau, dtype=float)
        out = self.floor + self.amplitude * np.exp(-self.rate * tau)
        return float(out) if out.ndim == 0 else out


def _r_squared(y: np.ndarray, pred: np.ndarray) -> float:
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot <= 0.0:
        return 1.0 if ss_res < 1e-30 else 0.0
    return 1.0 - ss_res / ss_tot


def _degenerate(y: np.ndarray) -> DecayModel:
    floor = float(y.min())
    pred = np.full_like(y, floor)
    return DecayModel(floor=floor, amplitude=0.0, rate=_DEGENERATE_RATE,
                      fit_quality=_r_squared(y, pred), degenerate=True)


def fit_decay(best_so_far, known_optimum: float | None = None) -> DecayModel:
    """Fit the decay summary of a non-increasing best-so-far trace.

    Entry ``i`` of the trace corresponds to tau = i + 1. With a known
    optimum the floor is pinned and only the rate is regressed (log-linear,
    through the origin). Without one, first differences eliminate the floor:
    their magnitudes are log-linear in tau, giving rate and amplitude, and
    the floor follows as the mean residual level. Flat steps carry no
    information and are dropped; a trace with fewer than two informative
    steps yields a degenerate model.
    """
    y = np.asarray(best_so_far, dtype=float)
    if y.ndim != 1 or y.size < 3:
        raise ValueError("need a 1-D trace with at least 3 entries")
    if not np.all(np.isfinite(y)):
        raise ValueError("trace must be finite")
    if np.any(np.diff(y) > 0.0):
        raise ValueError("best-so-far trace must be non-increasing")
    taus = np.arange(1, y.size + 1, dtype=float)

    if known_optimum is not None:
        floor = float(known_optimum)
        excess = y - floor
        keep = excess > 0.0
        if keep.sum() < 2:
            return _degenerate(y)
        # log-linear fit of the excess over the pinned floor; slope and
        # intercept must be estimated jointly, otherwise the tau=1 start of
        # the trace biases the rate
        slope, intercept = np.polyfit(taus[keep], np.log(excess[keep]), 1)
        rate = -float(slope)
        if rate <= 0.0:
            return _degenerate(y)
        amplitude = float(np.exp(intercept))
        pred = floor + amplitude * np.exp(-rate * taus)
        return DecayModel(floor, amplitude, rate, _r_squared(y, pred), False)

    model = _first_difference_fit(y, taus)
    if model.degenerate or model.fit_quality >= 0.9:
        return model
    # the first-difference form recovers clean exponentials exactly but can
    # fall apart on long-plateaued traces (it may place the floor far below
    # every observation); when its own quality is poor, a least-squares
    # polish over the rate keeps whichever fit explains the trace better
    refined = _profile_ls(y, taus, model.rate)
    if refined is not None and refined.fit_quality > model.fit_quality:
        return refined
    return model


def _first_difference_fit(y: np.ndarray, taus: np.ndarray) -> DecayModel:
    """Closed-form fit: log-linear regression on first-difference sizes."""
    mags = -np.diff(y)
    usable = mags > 0.0
    if usable.sum() < 2:
        return _degenerate(y)
    t = taus[:-1][usable]
    slope, intercept = np.polyfit(t, np.log(mags[usable]), 1)
    rate = -float(slope)
    if rate <= 0.0:
        return _degenerate(y)
    amplitude = float(np.exp(intercept) / (1.0 - np.exp(-rate)))
    floor = float(np.mean(y - amplitude * np.exp(-rate * taus)))
    pred = floor + amplitude * np.exp(-rate * taus)
    return DecayModel(floor, amplitude, rate, _r_squared(y, pred), False)


def _profile_ls(y: np.ndarray, taus: np.ndarray, rate_seed: float):
    """Best least-squares (floor, amplitude) over a grid of rates.

    For a fixed rate the model is linear in (floor, amplitude), so each
    candidate costs one 2-column solve; the grid spans well past the seed
    on both sides. Rates whose amplitude comes out non-positive are not
    valid decay models and are skipped."""
    lo = max(1e-4, rate_seed / 100.0)
    hi = min(50.0, max(rate_seed * 100.0, 1.0))
    if lo >= hi:
        return None
    best = None
    for rate in np.geomspace(lo, hi, 120):
        basis = np.column_stack([np.ones_like(taus), np.exp(-rate * taus)])
        coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
        floor, amplitude = float(coef[0]), float(coef[1])
        if amplitude <= 0.0:
            continue
        quality = _r_squared(y, basis @ coef)
        if best is None or quality > best.fit_quality:
            best = DecayModel(floor, amplitude, float(rate), quality, False)
    return best
