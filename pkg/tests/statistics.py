from itertools import combinations
from math import comb

import numpy as np
import pytest

from src.evaluation.statistics import exact_p_value, mann_whitney_u, sweep_stats
from src.utils.errors import InvalidArgumentError


def enumerated_p_value(u: float, n1: int, n2: int) -> float:
    ranks = range(1, n1 + n2 + 1)
    values = [sum(chosen) - n1 * (n1 + 1) / 2 for chosen in combinations(ranks, n1)]
    lower = sum(value <= u for value in values) / len(values)
    upper = sum(value >= u for value in values) / len(values)
    return min(1.0, 2 * min(lower, upper))


def test_exact_branch_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(30):
        sample = rng.permutation(np.arange(8) * 0.1 + 0.05)
        xs, ys = sample[:4], sample[4:]
        result = mann_whitney_u(xs, ys)
        assert result.method == 'exact'
        assert result.p_value == pytest.approx(enumerated_p_value(result.u, 4, 4))


def test_exact_p_value_for_every_small_sample_size():
    for n1 in range(1, 12):
        for n2 in range(1, 13 - n1):
            values = np.array([sum(chosen) - n1 * (n1 + 1) / 2 for chosen in combinations(range(1, n1 + n2 + 1), n1)])
            assert values.size == comb(n1 + n2, n1)
            for u in range(n1 * n2 + 1):
                expected = min(1.0, 2 * min(np.mean(values <= u), np.mean(values >= u)))
                assert abs(exact_p_value(u, n1, n2) - expected) < 1e-12


def test_mann_whitney_u():
    result = mann_whitney_u([5.0, 6.0, 7.0], [1.0, 2.0])
    assert result.u == 6.0
    assert result.p_value == pytest.approx(0.2)

    same = mann_whitney_u([0.8, 0.9, 0.95], [0.8, 0.9, 0.95])
    assert same.u == 4.5
    assert same.method == 'normal'
    assert same.p_value == pytest.approx(1.0)

    rng = np.random.default_rng(1)
    xs, ys = rng.normal(size=12), rng.normal(0.5, size=14)
    forward, backward = mann_whitney_u(xs, ys), mann_whitney_u(ys, xs)
    assert forward.method == 'normal'
    assert forward.u + backward.u == 12 * 14
    assert forward.p_value == pytest.approx(backward.p_value)

    small_x, small_y = [0.3, 0.1, 0.7], [0.2, 0.9]
    assert mann_whitney_u(small_x, small_y).p_value == pytest.approx(mann_whitney_u(small_y, small_x).p_value)

    with pytest.raises(InvalidArgumentError):
        mann_whitney_u([], [1.0])


def test_mann_whitney_u_with_ties_uses_midranks():
    result = mann_whitney_u([1.0, 2.0, 2.0], [2.0, 3.0])
    assert result.u == 1.0
    assert result.method == 'normal'
    assert 0.0 <= result.p_value <= 1.0


def test_sweep_stats():
    stats = sweep_stats([81.0, 100.0])
    assert stats.count == 2
    assert stats.mean == 90.5 and stats.median == 90.5
    assert stats.min == 81.0 and stats.max == 100.0
    assert stats.std == pytest.approx(np.sqrt(2 * 9.5 ** 2))

    single = sweep_stats([0.7])
    assert (single.mean, single.median, single.min, single.max, single.std) == (0.7, 0.7, 0.7, 0.7, 0.0)

    with pytest.raises(InvalidArgumentError):
        sweep_stats([])
