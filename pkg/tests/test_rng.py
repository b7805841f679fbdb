from __future__ import annotations

import numpy as np
import pytest

from xferopt.rng import RngStream


def test_same_seed_same_sequence():
    a = RngStream(99).gen.random(16)
    b = RngStream(99).gen.random(16)
    assert np.array_equal(a, b)


def test_children_are_independent_of_sibling_consumption():
    root1 = RngStream(5)
    root1.gen.random(100)  # consuming the root must not shift children
    c1 = root1.child(3).gen.random(8)
    c2 = RngStream(5).child(3).gen.random(8)
    assert np.array_equal(c1, c2)


def test_distinct_paths_give_distinct_streams():
    a = RngStream(5).child(0).gen.random(8)
    b = RngStream(5).child(1).gen.random(8)
    assert not np.array_equal(a, b)


def test_nested_paths():
    a = RngStream(5).child(1, 2).gen.random(4)
    b = RngStream(5).child(1).child(2).gen.random(4)
    assert np.array_equal(a, b)


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        RngStream(-1)
