"""Deterministic random-number streams.

Every stochastic component takes an explicit :class:`RngStream`. Streams are
derived from a 64-bit seed plus an integer path, so independent substreams
can be handed to unrelated stages (sampling, model fitting, search) without
one stage's draw count shifting another's. Identical seed and path give an
identical draw sequence on any platform.
"""

from __future__ import annotations

import numpy as np


class RngStream:
    """A named, splittable random stream backed by numpy's PCG64."""

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        seed = int(seed)
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = seed
        self.path = tuple(int(p) for p in path)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self.gen = np.random.Generator(np.random.PCG64(seq))

    def child(self, *path: int) -> "RngStream":
        """Derive an independent substream; same (seed, path) -> same stream."""
        return RngStream(self.seed, self.path + tuple(path))

    def __repr__(self) -> str:  # pragma: no cover
        return f"RngStream(seed={self.seed}, path={self.path})"
