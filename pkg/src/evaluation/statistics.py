from functools import lru_cache
from math import comb
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from src.schemas.records import SweepStats
from src.utils.errors import InvalidArgumentError

EXACT_MAX_TOTAL = 16


class MannWhitneyResult(NamedTuple):
    u: float
    p_value: float
    method: str


@lru_cache(maxsize=None)
def _u_counts(n1: int, n2: int) -> tuple:
    """counts[k] = number of orderings of n1 x's and n2 y's with U_x = k."""
    if n1 == 0 or n2 == 0:
        return (1,)
    # the largest element is either an x (beating all n2 y's) or a y
    with_x = _u_counts(n1 - 1, n2)
    with_y = _u_counts(n1, n2 - 1)
    counts = [0] * (n1 * n2 + 1)
    for k, count in enumerate(with_x):
        counts[k + n2] += count
    for k, count in enumerate(with_y):
        counts[k] += count
    return tuple(counts)


def exact_p_value(u: float, n1: int, n2: int) -> float:
    """Two-sided exact p-value of U_x = u without ties: 2 * min(P(U <= u), P(U >= u)), capped at 1."""
    counts = _u_counts(n1, n2)
    total = comb(n1 + n2, n1)
    k = int(round(u))
    lower = sum(counts[:k + 1]) / total
    upper = sum(counts[k:]) / total
    return min(1.0, 2.0 * min(lower, upper))


def mann_whitney_u(xs: Sequence[float], ys: Sequence[float]) -> MannWhitneyResult:
    """
    Mann-Whitney U of xs against ys with midranks for ties.

    The p-value is exact when the samples hold at most EXACT_MAX_TOTAL values and no ties; otherwise it uses
    the normal approximation with tie and continuity corrections.
    """
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    n1, n2 = xs.size, ys.size
    if n1 == 0 or n2 == 0:
        raise InvalidArgumentError('Both samples need at least one value')

    combined = np.concatenate([xs, ys])
    ranks = rankdata(combined)
    u = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2.0)
    _, tie_sizes = np.unique(combined, return_counts=True)
    has_ties = bool(np.any(tie_sizes > 1))

    total = n1 + n2
    if total <= EXACT_MAX_TOTAL and not has_ties:
        return MannWhitneyResult(u, exact_p_value(u, n1, n2), 'exact')

    mean = n1 * n2 / 2.0
    tie_term = float(np.sum(tie_sizes.astype(float) ** 3 - tie_sizes))
    variance = n1 * n2 / 12.0 * ((total + 1) - tie_term / (total * (total - 1)))
    if variance <= 0:
        return MannWhitneyResult(u, 1.0, 'normal')
    z = (abs(u - mean) - 0.5) / np.sqrt(variance)
    return MannWhitneyResult(u, float(min(1.0, 2.0 * norm.sf(z))), 'normal')


def sweep_stats(values: Sequence[float]) -> SweepStats:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise InvalidArgumentError('sweep_stats needs at least one value')
    return SweepStats(
        count=int(values.size),
        mean=float(values.mean()),
        median=float(np.median(values)),
        std=float(values.std(ddof=1)) if values.size > 1 else 0.0,
        min=float(values.min()),
        max=float(values.max()),
    )
