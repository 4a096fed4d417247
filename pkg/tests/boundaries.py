import numpy as np
import pytest

from src.data.datasets import Dataset, standardize
from src.evaluation.boundaries import (
    DecisionGrid,
    decision_grid,
    grid_bounds,
    misclassified_area_fraction,
    two_moons_ground_truth,
)
from src.network.geometry import init_geometry
from src.schemas.configs import NetworkSpec
from src.schemas.types import InitScheme
from src.utils.errors import InvalidArgumentError


def constant_geometry(winner: int = 0):
    spec = NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=2)
    geom = init_geometry(spec, InitScheme.RANDOM, rng_seed=0)
    gammas, betas = list(geom.gammas), list(geom.betas)
    gammas[-1] = np.zeros(2)
    betas[-1] = np.array([2.0, -2.0]) if winner == 0 else np.array([-2.0, 2.0])
    return geom.updated(gammas=gammas, betas=betas)


def test_grid_bounds():
    assert grid_bounds([[0.0, 0.0], [10.0, 2.0]]) == pytest.approx((-1.0, 11.0, -0.2, 2.2))
    assert grid_bounds([[1.0, 1.0]]) == pytest.approx((0.9, 1.1, 0.9, 1.1))
    with pytest.raises(InvalidArgumentError):
        grid_bounds([[1.0, 2.0, 3.0]])


def test_decision_grid():
    grid = decision_grid(constant_geometry(1), (-1.0, 1.0, -1.0, 1.0), resolution=2)
    assert grid.labels.size == 4
    assert grid.xs.tolist() == [-1.0, 1.0]
    assert np.all(grid.labels == 1)

    frame = decision_grid(constant_geometry(0), (0.0, 1.0, 0.0, 1.0), resolution=5).to_frame()
    assert len(frame) == 25
    assert set(frame['label']) == {0}

    train = Dataset(np.array([[0.0, 0.0], [2.0, 4.0]]), [0, 1], ['a', 'b'])
    _, _, params = standardize(train)
    scaled = decision_grid(init_geometry(NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=2), rng_seed=2), (0.0, 2.0, 0.0, 4.0), 4, params)
    assert scaled.labels.shape == (4, 4)

    wide = init_geometry(NetworkSpec(input_dim=3, hidden_widths=[3], output_dim=2), rng_seed=1)
    with pytest.raises(InvalidArgumentError):
        decision_grid(wide, (0.0, 1.0, 0.0, 1.0))


def test_two_moons_ground_truth():
    assert two_moons_ground_truth((0.0, 0.0, 1.0, 1.0), resolution=1).labels.tolist() == [[0]]
    assert two_moons_ground_truth((1.0, 1.0, -0.5, -0.5), resolution=1).labels.tolist() == [[1]]

    truth = two_moons_ground_truth((-1.5, 2.5, -1.0, 1.5), resolution=40)
    assert truth.labels.shape == (40, 40)
    assert 0 < truth.labels.mean() < 1


def test_misclassified_area_fraction():
    truth = np.random.default_rng(0).integers(0, 2, size=(10, 10))
    assert misclassified_area_fraction(truth, truth) == 0.0
    assert misclassified_area_fraction(1 - truth, truth) == 1.0

    predicted = truth.copy().ravel()
    predicted[:24] = 1 - predicted[:24]
    predicted = predicted.reshape(10, 10)
    assert misclassified_area_fraction(predicted, truth) == pytest.approx(0.24)
    assert misclassified_area_fraction(1 - predicted, truth) == pytest.approx(0.76)

    grid = DecisionGrid(np.arange(10.0), np.arange(10.0), predicted)
    assert misclassified_area_fraction(grid, DecisionGrid(grid.xs, grid.ys, truth)) == pytest.approx(0.24)

    with pytest.raises(InvalidArgumentError):
        misclassified_area_fraction(np.zeros((2, 2)), np.zeros((3, 3)))
