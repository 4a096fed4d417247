"""Weighted cross-entropy and weight penalties shared by both trainers."""
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from src.network.geometry import NetworkGeometry
from src.utils.errors import InvalidArgumentError

EPS_PROB = 1e-12


@dataclass(frozen=True)
class ClassWeights:
    """Per-class loss weights beta_c, all positive."""
    values: tuple

    def __post_init__(self):
        values = tuple(float(value) for value in self.values)
        if len(values) == 0 or any(not value > 0 for value in values):
            raise InvalidArgumentError(f'Class weights should all be positive, got {values}')
        object.__setattr__(self, 'values', values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values)

    def __len__(self) -> int:
        return len(self.values)


def class_weight_array(beta) -> np.ndarray:
    if isinstance(beta, ClassWeights):
        return beta.as_array()
    return ClassWeights(tuple(np.ravel(beta))).as_array()


def weighted_cross_entropy(p, y, beta) -> float:
    """
    Mean over samples of -beta[y_k] * log(p[k, y_k]), with the probability floored at EPS_PROB.

    Args:
        p: (N, M) class probabilities.
        y: (N,) integer labels in [0, M).
        beta (ClassWeights | sequence): Class weights.

    Raises:
        InvalidArgumentError: If the batch is empty or the labels are out of range.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    y = np.asarray(y, dtype=int).ravel()
    if y.size == 0 or p.shape[0] == 0:
        raise InvalidArgumentError('Cannot compute the loss of an empty batch')
    if p.shape[0] != y.size:
        raise InvalidArgumentError(f'{p.shape[0]} probability rows for {y.size} labels')
    if y.min() < 0 or y.max() >= p.shape[1]:
        raise InvalidArgumentError(f'Labels should lie in [0, {p.shape[1]})')
    beta = class_weight_array(beta)
    picked = np.maximum(p[np.arange(y.size), y], EPS_PROB)
    return float(np.mean(-beta[y] * np.log(picked)))


def class_weights_from_counts(counts: Sequence[int]) -> ClassWeights:
    """Inverse-frequency weights N / (M * N_c)."""
    counts = np.asarray(counts, dtype=float)
    if counts.size == 0 or np.any(counts <= 0):
        raise InvalidArgumentError(f'Every class needs at least one sample, got counts {counts.tolist()}')
    return ClassWeights(tuple(counts.sum() / (counts.size * counts)))


def uniform_class_weights(class_count: int) -> ClassWeights:
    return ClassWeights((1.0,) * class_count)


def weights_penalty(weight_matrices: Iterable[np.ndarray], l1: float, l2: float) -> float:
    if l1 < 0 or l2 < 0:
        raise InvalidArgumentError('Penalty coefficients should be non-negative')
    total = 0.0
    for weights in weight_matrices:
        weights = np.asarray(weights, dtype=float)
        total += l1 * np.abs(weights).sum() + l2 * np.square(weights).sum()
    return float(total)


def penalty_gradient(weights: np.ndarray, l1: float, l2: float) -> np.ndarray:
    """d(l1 |w| + l2 w^2)/dw, with sign(0) = 0."""
    return l1 * np.sign(weights) + 2.0 * l2 * weights


def l1_l2_penalty(geom: NetworkGeometry, l1: float, l2: float) -> float:
    """l1 * sum|w| + l2 * sum w^2 over the mapped weights of every layer pair."""
    if l1 == 0 and l2 == 0:
        return 0.0
    matrices = (geom.connections(layer).weights for layer in range(1, geom.spec.layer_count))
    return weights_penalty(matrices, l1, l2)
