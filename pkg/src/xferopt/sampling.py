"""Space-filling initialization in the unit box."""

from __future__ import annotations

import numpy as np

from .rng import RngStream


def lhs_sample(n: int, d: int, rng: RngStream) -> np.ndarray:
    """Latin hypercube sample of ``n`` points in ``[0, 1]^d``.

    Each dimension is split into ``n`` equal strata; every stratum receives
    exactly one point, placed uniformly at random inside it.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got n={n}")
    if d < 1:
        raise ValueError(f"need at least one dimension, got d={d}")
    u = rng.gen.random((n, d))
    pts = np.empty((n, d))
    for j in range(d):
        pts[:, j] = (rng.gen.permutation(n) + u[:, j]) / n
    return pts
