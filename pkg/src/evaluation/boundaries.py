from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy.spatial import cKDTree

from src.data.datasets import StandardizationParams, moon_arcs
from src.network.forward import forward, predict_from_probabilities
from src.network.geometry import NetworkGeometry
from src.utils.errors import InvalidArgumentError

Bounds = Tuple[float, float, float, float]


@dataclass
class DecisionGrid:
    """Predicted labels on a uniform lattice; labels[row, column] is the cell at (xs[column], ys[row])."""
    xs: np.ndarray
    ys: np.ndarray
    labels: np.ndarray

    def to_frame(self) -> pd.DataFrame:
        grid_x, grid_y = np.meshgrid(self.xs, self.ys)
        return pd.DataFrame({'x': grid_x.ravel(), 'y': grid_y.ravel(), 'label': self.labels.ravel()})


def grid_bounds(features, padding: float = 0.1) -> Bounds:
    """Bounding box of 2D features, each side padded by `padding` times its extent."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != 2:
        raise InvalidArgumentError('Grid bounds need 2D features')
    low, high = features.min(axis=0), features.max(axis=0)
    margin = padding * np.where(high > low, high - low, 1.0)
    return float(low[0] - margin[0]), float(high[0] + margin[0]), float(low[1] - margin[1]), float(high[1] + margin[1])


def _lattice(bounds: Bounds, resolution: int):
    if resolution < 1:
        raise InvalidArgumentError('Grid resolution should be positive')
    x_min, x_max, y_min, y_max = bounds
    return np.linspace(x_min, x_max, resolution), np.linspace(y_min, y_max, resolution)


def decision_grid(geom: NetworkGeometry, bounds: Bounds, resolution: int = 200,
                  standardization: Optional[StandardizationParams] = None) -> DecisionGrid:
    """
    Classify every cell of a resolution x resolution lattice over `bounds`.

    Bounds are in raw feature space; `standardization` maps cell centers to the model's input space.
    """
    if geom.spec.input_dim != 2:
        raise InvalidArgumentError(f'Decision grids need a 2D input, the network has {geom.spec.input_dim} inputs')
    xs, ys = _lattice(bounds, resolution)
    grid_x, grid_y = np.meshgrid(xs, ys)
    points = np.column_stack([grid_x.ravel(), grid_y.ravel()])
    if standardization is not None:
        points = standardization.transform_features(points)
    labels = predict_from_probabilities(forward(geom, points)[0])
    return DecisionGrid(xs, ys, labels.reshape(resolution, resolution))


def two_moons_ground_truth(bounds: Bounds, resolution: int = 200) -> DecisionGrid:
    """Label of the nearest noise-free generative arc for every cell."""
    xs, ys = _lattice(bounds, resolution)
    grid_x, grid_y = np.meshgrid(xs, ys)
    upper, lower = moon_arcs()
    tree = cKDTree(np.vstack([upper, lower]))
    _, nearest = tree.query(np.column_stack([grid_x.ravel(), grid_y.ravel()]))
    labels = (nearest >= len(upper)).astype(int)
    return DecisionGrid(xs, ys, labels.reshape(resolution, resolution))


def misclassified_area_fraction(grid, ground_truth) -> float:
    predicted = grid.labels if isinstance(grid, DecisionGrid) else np.asarray(grid)
    truth = ground_truth.labels if isinstance(ground_truth, DecisionGrid) else np.asarray(ground_truth)
    if predicted.shape != truth.shape:
        raise InvalidArgumentError(f'Grid shapes differ: {predicted.shape} vs {truth.shape}')
    return float(np.mean(predicted != truth))
