"""Rank statistics: ranking, Spearman correlation, rank-sum test, Holm step-down.

These are the primitives the transfer logic and the experiment harness lean
on. Ties always get the average of the ranks they span.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.special import ndtr


def rank_vector(values) -> np.ndarray:
    """Ranks starting at 1, ties averaged. Input must be finite 1-D."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("rank_vector expects a non-empty 1-D array")
    if not np.all(np.isfinite(v)):
        raise ValueError("rank_vector requires finite values")
    n = v.size
    order = np.argsort(v, kind="mergesort")
    sv = v[order]
    ranks = np.empty(n, dtype=float)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sv[j + 1] == sv[i]:
            j += 1
        # positions i..j share the value; average rank of (i+1)..(j+1)
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman_with_flag(a, b) -> tuple[float, bool]:
    """Spearman rank correlation plus a degeneracy flag.

    Returns (0.0, True) when either side has constant ranks, in which case
    the correlation carries no information.
    """
    ra = rank_vector(a)
    rb = rank_vector(b)
    if ra.size != rb.size:
        raise ValueError("length mismatch")
    if ra.size < 2:
        raise ValueError("need at least two observations")
    da = ra - ra.mean()
    db = rb - rb.mean()
    sa = float(np.sqrt(np.mean(da * da)))
    sb = float(np.sqrt(np.mean(db * db)))
    if sa == 0.0 or sb == 0.0:
        return 0.0, True
    r = float(np.mean(da * db) / (sa * sb))
    return float(np.clip(r, -1.0, 1.0)), False


def spearman(a, b) -> float:
    """Spearman rank correlation in [-1, 1]; 0 for degenerate input."""
    return spearman_with_flag(a, b)[0]


# Largest combined size for which the rank-sum null is enumerated exactly.
_EXACT_LIMIT = 12


def wilcoxon_rank_sum(a, b, two_sided: bool = True) -> float:
    """Rank-sum test p-value for samples ``a`` and ``b``.

    Exact permutation null when len(a) + len(b) <= 12, otherwise a normal
    approximation with tie correction and continuity correction. One-sided
    tests the alternative that ``a`` tends smaller than ``b``. The returned
    p lies in (0, 1].
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("samples must be 1-D")
    n, m = a.size, b.size
    if n < 3 or m < 3:
        raise ValueError("each sample needs at least 3 observations")
    pooled = np.concatenate([a, b])
    ranks = rank_vector(pooled)
    big_n = n + m
    w_obs = float(ranks[:n].sum())
    mu = n * (big_n + 1) / 2.0

    if big_n <= _EXACT_LIMIT:
        total = 0
        extreme = 0
        tol = 1e-9
        for comb in itertools.combinations(range(big_n), n):
            w = float(ranks[list(comb)].sum())
            total += 1
            if two_sided:
                if abs(w - mu) >= abs(w_obs - mu) - tol:
                    extreme += 1
            else:
                if w <= w_obs + tol:
                    extreme += 1
        p = extreme / total
    else:
        _, counts = np.unique(pooled, return_counts=True)
        tie_term = float(((counts**3 - counts).sum()) / (big_n * (big_n - 1)))
        var = n * m / 12.0 * ((big_n + 1) - tie_term)
        if var <= 0.0:
            return 1.0  # everything tied
        sd = float(np.sqrt(var))
        if two_sided:
            z = max(abs(w_obs - mu) - 0.5, 0.0) / sd
            p = 2.0 * float(ndtr(-z))
        else:
            z = (w_obs - mu + 0.5) / sd
            p = float(ndtr(z))

    return float(min(max(p, np.finfo(float).tiny), 1.0))


def holm_correction(p_values) -> np.ndarray:
    """Holm step-down adjusted p-values, order preserved."""
    p = np.asarray(p_values, dtype=float)
    if p.ndim != 1:
        raise ValueError("p_values must be 1-D")
    k = p.size
    if k == 0:
        return p.copy()
    order = np.argsort(p, kind="mergesort")
    adjusted = np.empty(k, dtype=float)
    running = 0.0
    for rank_idx, idx in enumerate(order):
        val = (k - rank_idx) * p[idx]
        running = max(running, val)
        adjusted[idx] = min(running, 1.0)
    return adjusted
