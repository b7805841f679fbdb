"""When is competing for the next evaluation worth it?

The analysis treats the target's convergence as an exponential decay with a
given floor, amplitude, and rate, after ``tau`` evaluations. A candidate
imported from a finished task is summarized by a similarity score ``s`` and
the extra converged time it would buy (the time advantage). ``net_gain``
is the payoff of evaluating that import instead of the search's own
proposal; the threshold similarity is where the payoff turns positive.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .rng import RngStream

_BISECT_TOL = 1e-10
_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class TheoryParams:
    """Decay state of the target search plus the import's time advantage."""

    floor: float
    amplitude: float
    rate: float
    tau: float
    time_advantage: float

    def __post_init__(self):
        if not np.isfinite(self.floor):
            raise ValueError("floor must be finite")
        if self.amplitude <= 0.0:
            raise ValueError("amplitude must be positive")
        if self.rate <= 0.0 or not np.isfinite(self.rate):
            raise ValueError("rate must be positive and finite")
        if self.tau < 1.0 or not np.isfinite(self.tau):
            raise ValueError("tau must be finite and >= 1")
        if self.time_advantage < 0.0:
            raise ValueError("time_advantage must be >= 0")

    def value(self, u):
        u = np.asarray(u, dtype=float)
        out = self.floor + self.amplitude * np.exp(-self.rate * u)
        return float(out) if out.ndim == 0 else out


def net_gain(s, p: TheoryParams):
    """Expected payoff of evaluating the import at similarity ``s`` in [0, 1]
    minus the payoff of one more step of the target's own search."""
    s = np.asarray(s, dtype=float)
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
        raise ValueError("similarity must lie in [0, 1]")
    s = np.clip(s, 0.0, 1.0)
    u = p.tau + p.time_advantage
    external = s * (p.value(p.tau) - p.value(s * u))
    internal = p.value(p.tau) - p.value(p.tau + 1.0)
    out = external - internal
    return float(out) if out.ndim == 0 else out


def net_gain_derivative(s, p: TheoryParams):
    """Exact derivative of ``net_gain`` in ``s``.

    Note the decay's slope involves only the amplitude part: d/du of the
    value is -rate * (value(u) - floor), so the floor must not leak into
    the derivative term.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
        raise ValueError("similarity must lie in [0, 1]")
    s = np.clip(s, 0.0, 1.0)
    u = p.tau + p.time_advantage
    excess = p.amplitude * np.exp(-p.rate * s * u)  # value(s*u) - floor
    out = (p.value(p.tau) - p.value(s * u)) + s * p.rate * u * excess
    return float(out) if out.ndim == 0 else out


def convergence_gain(s, p: TheoryParams):
    """Realized gain of the competition at similarity ``s`` in [-1, 1].

    Non-positive similarity contributes nothing (the import is discarded),
    and the competition never does worse than the search's own proposal, so
    the gain is non-negative by construction.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < -1.0 - 1e-12) or np.any(s > 1.0 + 1e-12):
        raise ValueError("similarity must lie in [-1, 1]")
    out = np.maximum(0.0, net_gain(np.clip(s, 0.0, 1.0), p))
    return float(out) if out.ndim == 0 else out


def gain_threshold(p: TheoryParams) -> float | None:
    """Similarity above which the competition payoff is positive.

    Returns None when even a perfectly similar import does not pay, which
    happens exactly when the time advantage is at most one evaluation.
    """
    top = net_gain(1.0, p)
    if top <= 0.0:
        return None
    lo, hi = 0.0, 1.0
    # net_gain(0) = -(one-step internal payoff) < 0, so the root is bracketed
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        val = net_gain(mid, p)
        if abs(val) < _BISECT_TOL:
            return mid
        if val < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class DensitySpec:
    """Similarity distribution on [-1, 1] for expected-gain estimates.

    Kinds: ``uniform`` on [low, high]; ``discrete`` with atoms at ``points``
    weighted by ``weights``; ``beta`` with shape (alpha, beta) stretched
    from (0, 1) onto (-1, 1).
    """

    kind: str
    low: float = -1.0
    high: float = 1.0
    points: tuple = ()
    weights: tuple = ()
    alpha: float = 2.0
    beta: float = 2.0

    def __post_init__(self):
        if self.kind not in ("uniform", "discrete", "beta"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.kind == "uniform":
            if not (-1.0 <= self.low < self.high <= 1.0):
                raise ValueError("uniform support must satisfy -1 <= low < high <= 1")
        elif self.kind == "discrete":
            pts = np.asarray(self.points, dtype=float)
            wts = np.asarray(self.weights, dtype=float)
            if pts.size == 0 or pts.size != wts.size:
                raise ValueError("discrete density needs matching points and weights")
            if np.any(pts < -1.0) or np.any(pts > 1.0):
                raise ValueError("discrete atoms must lie in [-1, 1]")
            if np.any(wts < 0.0) or wts.sum() <= 0.0:
                raise ValueError("weights must be non-negative with positive sum")
        else:
            if self.alpha <= 0.0 or self.beta <= 0.0:
                raise ValueError("beta shapes must be positive")

    def sample(self, n: int, rng: RngStream) -> np.ndarray:
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "uniform":
            return self.low + (self.high - self.low) * rng.gen.random(n)
        if self.kind == "discrete":
            pts = np.asarray(self.points, dtype=float)
            wts = np.asarray(self.weights, dtype=float)
            return rng.gen.choice(pts, size=n, p=wts / wts.sum())
        return 2.0 * rng.gen.beta(self.alpha, self.beta, size=n) - 1.0


def expected_gain(p: TheoryParams, density: DensitySpec, n_mc: int,
                  rng: RngStream) -> tuple[float, float]:
    """Monte-Carlo (estimate, standard error) of the gain under ``density``."""
    draws = density.sample(n_mc, rng)
    gains = convergence_gain(draws, p)
    gains = np.atleast_1d(gains)
    est = float(gains.mean())
    se = float(gains.std(ddof=1) / np.sqrt(gains.size)) if gains.size > 1 else 0.0
    return est, se


def threshold_sweep(rate_grid, time_advantage_grid, tau: float = 1.0):
    """Threshold similarity over a (rate, time advantage) grid.

    The threshold does not depend on the decay's floor or amplitude (both
    cancel or scale out of the payoff), so they are fixed at 0 and 1 here.
    Returns a row-major list of (rate, time_advantage, threshold-or-None).
    """
    rows = []
    for rate in rate_grid:
        for adv in time_advantage_grid:
            p = TheoryParams(floor=0.0, amplitude=1.0, rate=float(rate),
                             tau=float(tau), time_advantage=float(adv))
            rows.append((float(rate), float(adv), gain_threshold(p)))
    return rows


def write_threshold_csv(rows, path) -> None:
    """Write sweep rows as CSV; an empty cell marks a missing threshold."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lambda_t", "delta_tau_star", "s_tilde"])
        for rate, adv, threshold in rows:
            cell = "" if threshold is None else format(threshold, ".17g")
            writer.writerow([format(rate, ".17g"), format(adv, ".17g"), cell])
