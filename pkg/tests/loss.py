import math

import numpy as np
import pytest

from src.network.geometry import connect, init_geometry
from src.network.loss import (
    ClassWeights,
    class_weights_from_counts,
    l1_l2_penalty,
    uniform_class_weights,
    weighted_cross_entropy,
    weights_penalty,
)
from src.schemas.configs import NetworkSpec
from src.schemas.types import InitScheme, MappingKind
from src.utils.errors import InvalidArgumentError


def test_weighted_cross_entropy():
    assert weighted_cross_entropy([[1.0, 0.0]], [0], [1.0, 1.0]) == pytest.approx(0.0)
    assert weighted_cross_entropy([[0.5, 0.5]], [1], uniform_class_weights(2)) == pytest.approx(math.log(2))
    assert weighted_cross_entropy([[0.25] * 4], [3], [1.0] * 4) == pytest.approx(math.log(4))

    loss = weighted_cross_entropy([[0.5, 0.5], [0.5, 0.5]], [0, 1], ClassWeights((2.0, 1.0)))
    assert loss == pytest.approx(1.5 * math.log(2))

    # floored probabilities keep the loss finite
    assert math.isfinite(weighted_cross_entropy([[0.0, 1.0]], [0], [1.0, 1.0]))


def test_weighted_cross_entropy_rejects_bad_batches():
    with pytest.raises(InvalidArgumentError):
        weighted_cross_entropy(np.empty((0, 2)), [], [1.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        weighted_cross_entropy([[0.5, 0.5]], [2], [1.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        ClassWeights((1.0, 0.0))


def test_class_weights_from_counts():
    assert class_weights_from_counts([100, 100]).values == (1.0, 1.0)
    assert np.allclose(class_weights_from_counts([1315, 245, 140]).values, (0.431, 2.313, 4.048), atol=1e-3)
    assert np.allclose(class_weights_from_counts([99, 59]).values, (0.798, 1.339), atol=1e-3)

    with pytest.raises(InvalidArgumentError):
        class_weights_from_counts([10, 0])


def test_penalties():
    assert weights_penalty([np.array([[0.5]])], 0.05, 0.05) == pytest.approx(0.0375)

    spec = NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=2, mapping=MappingKind.GAUSSIAN)
    geom = init_geometry(spec, InitScheme.SINGULARITY)
    edges = 2 * 3 + 3 * 2
    assert l1_l2_penalty(geom, 0.0, 0.0) == 0.0
    assert l1_l2_penalty(geom, 0.0, 0.01) == pytest.approx(0.01 * edges)

    random_geom = init_geometry(spec, InitScheme.RANDOM, rng_seed=5)
    expected = sum(
        0.1 * np.abs(connect(random_geom.axons[layer - 1], random_geom.somas[layer], MappingKind.GAUSSIAN).weights).sum()
        for layer in (1, 2)
    )
    assert l1_l2_penalty(random_geom, 0.1, 0.0) == pytest.approx(expected)

    with pytest.raises(InvalidArgumentError):
        weights_penalty([np.ones((1, 1))], -1.0, 0.0)
