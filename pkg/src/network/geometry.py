"""
Spatial representation of a distance-encoded network.

Every neuron owns up to two points in the unit cube: a soma (where incoming
connections land) and an axon terminal (where outgoing connections start).
The weight of the connection from neuron i of layer l-1 to neuron j of
layer l is a decreasing function of the distance between axon_i and soma_j.
Input neurons only have an axon, output neurons only a soma.
"""
import warnings
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.spatial.distance import cdist
from scipy.spatial.transform import Rotation

from src.schemas.configs import NetworkSpec
from src.schemas.types import InitScheme, MappingKind, Optimizer
from src.utils.errors import (
    DataParseError,
    DegenerateGeometryWarning,
    InvalidArgumentError,
    InvalidConfigurationError,
)

EPS_DIST = 1e-12
CENTER = np.array([0.5, 0.5, 0.5])
GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class NeuronGeometry:
    soma: Optional[Point3] = None
    axon: Optional[Point3] = None


class LayerConnections(NamedTuple):
    """Distances, mapping scale and mapped weights of one layer pair, rows are receiving neurons."""
    distances: np.ndarray
    dmax: float
    weights: np.ndarray
    degenerate: bool


def distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidArgumentError('Coordinates should be finite')
    return float(np.linalg.norm(a - b))


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def map_inverse(d, dmax: float):
    """
    Linear distance-to-weight mapping, 1 - d / dmax. Not clamped: distances beyond dmax give negative weights.
    """
    if not dmax > 0:
        raise InvalidArgumentError(f'dmax should be positive, got {dmax}')
    return _scalar_or_array(1.0 - np.asarray(d, dtype=float) / dmax)


def map_gaussian(d, sigma: float):
    """Gaussian distance-to-weight mapping, exp(-d^2 / (2 sigma^2)), in (0, 1]."""
    if not sigma > 0:
        raise InvalidArgumentError(f'sigma should be positive, got {sigma}')
    d = np.asarray(d, dtype=float)
    return _scalar_or_array(np.exp(-(d * d) / (2.0 * sigma * sigma)))


def pair_dmax(distances: np.ndarray) -> tuple:
    """
    Largest distance of a layer pair, with the degenerate fallback.

    Returns:
        tuple[float, bool]: dmax and whether the fallback EPS_DIST was used.
    """
    dmax = float(np.max(distances)) if distances.size else 0.0
    if dmax < EPS_DIST:
        return EPS_DIST, True
    return dmax, False


def _layer_points(layer, role: str) -> np.ndarray:
    if isinstance(layer, np.ndarray):
        return layer
    points = [getattr(neuron, role) for neuron in layer]
    if any(point is None for point in points):
        raise InvalidArgumentError(f'Every neuron of the layer needs a {role}')
    return np.asarray(points, dtype=float)


def connect(from_axons, to_somas, mapping: MappingKind, sigma: float = 0.5, dmax: Optional[float] = None) -> LayerConnections:
    """
    Compute distances and mapped weights between one layer's axons and the next layer's somas.

    Args:
        from_axons: (n_from, 3) axon coordinates, or a list of NeuronGeometry.
        to_somas: (n_to, 3) soma coordinates, or a list of NeuronGeometry.
        mapping (MappingKind): Distance-to-weight mapping.
        sigma (float): Gaussian width.
        dmax (float | None): Use this Inverse scale instead of the pair's current maximum distance.

    Returns:
        LayerConnections: distances and weights with shape (n_to, n_from).
    """
    axons = _layer_points(from_axons, 'axon')
    somas = _layer_points(to_somas, 'soma')
    distances = cdist(somas, axons)
    degenerate = False
    if dmax is None:
        dmax, degenerate = pair_dmax(distances)
    if MappingKind(mapping) == MappingKind.INVERSE:
        if degenerate:
            warnings.warn('All connection distances of a layer pair are zero, using EPS_DIST as dmax', DegenerateGeometryWarning)
        weights = map_inverse(distances, dmax)
    else:
        weights = map_gaussian(distances, sigma)
    return LayerConnections(distances, dmax, weights, degenerate)


def weight_matrix(from_layer, to_layer, mapping: MappingKind, sigma: float = 0.5) -> np.ndarray:
    """W[j][i] = mapping(distance(axon_i, soma_j)) for one layer pair."""
    return connect(from_layer, to_layer, mapping, sigma).weights


def _frozen(value, shape: tuple, label: str) -> np.ndarray:
    array = np.array(value, dtype=float)
    if array.shape != shape:
        raise InvalidArgumentError(f'{label} should have shape {shape}, got {array.shape}')
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(f'{label} should be finite')
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class NetworkGeometry:
    """
    Positions of every soma and axon terminal plus the per-neuron normalization parameters.

    All per-layer sequences are indexed by layer (0 = input). Missing entries are None:
    somas[0], axons[-1], gammas[0] and betas[0]. Arrays are copied and made read-only on
    construction, so a geometry can be shared across threads.
    """
    spec: NetworkSpec
    somas: tuple
    axons: tuple
    gammas: tuple
    betas: tuple

    def __post_init__(self):
        widths = self.spec.layer_widths
        last = len(widths) - 1
        for name in ('somas', 'axons', 'gammas', 'betas'):
            if len(getattr(self, name)) != len(widths):
                raise InvalidArgumentError(f'{name} should have one entry per layer ({len(widths)})')
        somas, axons, gammas, betas = [], [], [], []
        for layer, width in enumerate(widths):
            somas.append(None if layer == 0 else _frozen(self.somas[layer], (width, 3), f'somas[{layer}]'))
            axons.append(None if layer == last else _frozen(self.axons[layer], (width, 3), f'axons[{layer}]'))
            gammas.append(None if layer == 0 else _frozen(self.gammas[layer], (width,), f'gammas[{layer}]'))
            betas.append(None if layer == 0 else _frozen(self.betas[layer], (width,), f'betas[{layer}]'))
        object.__setattr__(self, 'somas', tuple(somas))
        object.__setattr__(self, 'axons', tuple(axons))
        object.__setattr__(self, 'gammas', tuple(gammas))
        object.__setattr__(self, 'betas', tuple(betas))

    @property
    def layer_widths(self) -> List[int]:
        return self.spec.layer_widths

    @property
    def layers(self) -> List[List[NeuronGeometry]]:
        result = []
        for layer, width in enumerate(self.layer_widths):
            neurons = []
            for index in range(width):
                soma = None if self.somas[layer] is None else Point3(*self.somas[layer][index])
                axon = None if self.axons[layer] is None else Point3(*self.axons[layer][index])
                neurons.append(NeuronGeometry(soma=soma, axon=axon))
            result.append(neurons)
        return result

    def connections(self, layer: int, dmax: Optional[float] = None) -> LayerConnections:
        """Connections from layer-1 axons into layer somas."""
        return connect(self.axons[layer - 1], self.somas[layer], self.spec.mapping, self.spec.sigma, dmax)

    def updated(self, somas=None, axons=None, gammas=None, betas=None) -> 'NetworkGeometry':
        return replace(
            self,
            somas=self.somas if somas is None else tuple(somas),
            axons=self.axons if axons is None else tuple(axons),
            gammas=self.gammas if gammas is None else tuple(gammas),
            betas=self.betas if betas is None else tuple(betas),
        )

    def equals(self, other: 'NetworkGeometry') -> bool:
        """Bitwise equality of every coordinate and normalization parameter."""
        if self.spec != other.spec:
            return False
        for mine, theirs in zip(self._arrays(), other._arrays()):
            if (mine is None) != (theirs is None):
                return False
            if mine is not None and not np.array_equal(mine, theirs):
                return False
        return True

    def _arrays(self):
        return [*self.somas, *self.axons, *self.gammas, *self.betas]


def count_parameters(input_dim: int, hidden_widths: Sequence[int], output_dim: int) -> int:
    """3 coordinates per soma and per axon terminal: hidden neurons own both, inputs an axon, outputs a soma."""
    if len(hidden_widths) == 0:
        raise InvalidConfigurationError('At least one hidden layer is required')
    somas = sum(hidden_widths) + output_dim
    axons = input_dim + sum(hidden_widths)
    return 3 * (somas + axons)


def parameter_count(spec: NetworkSpec) -> int:
    return count_parameters(spec.input_dim, spec.hidden_widths, spec.output_dim)


def norm_parameter_count(spec: NetworkSpec) -> int:
    return 2 * sum(spec.layer_widths[1:])


def classical_parameter_count(spec: NetworkSpec) -> int:
    """Weights plus biases of the fully connected network with the same layer widths."""
    widths = spec.layer_widths
    return sum(widths[index - 1] * widths[index] + widths[index] for index in range(1, len(widths)))


def fibonacci_sphere(count: int) -> np.ndarray:
    """Evenly spread unit vectors on the sphere."""
    index = np.arange(count)
    y = 1.0 - 2.0 * (index + 0.5) / count
    radius = np.sqrt(1.0 - y * y)
    theta = GOLDEN_ANGLE * index
    return np.column_stack([np.cos(theta) * radius, y, np.sin(theta) * radius])


def _random_rotation(rng: np.random.Generator) -> Rotation:
    quaternion = rng.normal(size=4)
    return Rotation.from_quat(quaternion / np.linalg.norm(quaternion))


def onion_radius(layer: int, hidden_count: int) -> float:
    """Radius of a layer's sphere; non-input layers sit at l/(H+1), the input layer inside the first shell."""
    if layer == 0:
        return 1.0 / (2.0 * (hidden_count + 1))
    return layer / (hidden_count + 1)


def init_geometry(spec: NetworkSpec, scheme: Optional[InitScheme] = None, rng_seed: int = 0, trainer: Optional[Optimizer] = None) -> NetworkGeometry:
    """
    Build the initial geometry of a network.

    Args:
        spec (NetworkSpec): Architecture.
        scheme (InitScheme | None): Overrides spec.init when given.
        rng_seed (int): Seed; the same (spec, scheme, seed) always gives a bitwise identical geometry.
        trainer (Optimizer | None): The consuming trainer, used to reject Singularity under gradient descent.

    Returns:
        NetworkGeometry: Random points in the unit cube, points on nested spheres around the
        cube center (Onion), or every point at the cube center (Singularity). Gammas are 1, betas 0.

    Raises:
        InvalidConfigurationError: If Singularity is requested for gradient descent.
    """
    scheme = InitScheme(scheme) if scheme is not None else spec.init
    if scheme == InitScheme.SINGULARITY and trainer is not None and Optimizer(trainer) == Optimizer.GD:
        raise InvalidConfigurationError('Singularity initialization is only applicable with the genetic algorithm')

    rng = np.random.default_rng(rng_seed)
    widths = spec.layer_widths
    last = len(widths) - 1
    hidden_count = len(spec.hidden_widths)

    def place(layer: int, width: int) -> np.ndarray:
        if scheme == InitScheme.RANDOM:
            return rng.random((width, 3))
        if scheme == InitScheme.ONION:
            radius = onion_radius(layer, hidden_count)
            return CENTER + radius * _random_rotation(rng).apply(fibonacci_sphere(width))
        return np.tile(CENTER, (width, 1))

    somas, axons, gammas, betas = [], [], [], []
    for layer, width in enumerate(widths):
        somas.append(None if layer == 0 else place(layer, width))
        axons.append(None if layer == last else place(layer, width))
        gammas.append(None if layer == 0 else np.ones(width))
        betas.append(None if layer == 0 else np.zeros(width))
    return NetworkGeometry(spec, tuple(somas), tuple(axons), tuple(gammas), tuple(betas))


GEOMETRY_COLUMNS = ['layer', 'neuron', 'role', 'x', 'y', 'z', 'value']


def geometry_frame(geom: NetworkGeometry) -> pd.DataFrame:
    rows = []
    for layer, width in enumerate(geom.layer_widths):
        for role, points in (('soma', geom.somas[layer]), ('axon', geom.axons[layer])):
            if points is None:
                continue
            for neuron in range(width):
                x, y, z = points[neuron]
                rows.append((layer, neuron, role, x, y, z, np.nan))
        for role, values in (('gamma', geom.gammas[layer]), ('beta', geom.betas[layer])):
            if values is None:
                continue
            for neuron in range(width):
                rows.append((layer, neuron, role, np.nan, np.nan, np.nan, values[neuron]))
    return pd.DataFrame(rows, columns=GEOMETRY_COLUMNS)


def export_geometry(geom: NetworkGeometry, path) -> None:
    geometry_frame(geom).to_csv(path, index=False)


def import_geometry(path, spec: NetworkSpec) -> NetworkGeometry:
    """
    Read a geometry written by export_geometry.

    Raises:
        DataParseError: If the file lacks columns or rows needed by the spec.
    """
    frame = pd.read_csv(path, float_precision='round_trip')
    missing = [column for column in GEOMETRY_COLUMNS if column not in frame.columns]
    if missing:
        raise DataParseError(f'Geometry file {path} is missing columns {missing}', column=missing[0])

    widths = spec.layer_widths
    last = len(widths) - 1

    def block(layer: int, role: str, columns: list) -> np.ndarray:
        rows = frame[(frame['layer'] == layer) & (frame['role'] == role)].sort_values('neuron')
        if len(rows) != widths[layer]:
            raise DataParseError(f'Geometry file {path} has {len(rows)} {role} rows for layer {layer}, expected {widths[layer]}')
        values = rows[columns].to_numpy(dtype=float)
        return values[:, 0] if len(columns) == 1 else values

    somas = [None if layer == 0 else block(layer, 'soma', ['x', 'y', 'z']) for layer in range(len(widths))]
    axons = [None if layer == last else block(layer, 'axon', ['x', 'y', 'z']) for layer in range(len(widths))]
    gammas = [None if layer == 0 else block(layer, 'gamma', ['value']) for layer in range(len(widths))]
    betas = [None if layer == 0 else block(layer, 'beta', ['value']) for layer in range(len(widths))]
    return NetworkGeometry(spec, tuple(somas), tuple(axons), tuple(gammas), tuple(betas))
