"""
Spatial backpropagation.

Gradients flow from the weighted cross-entropy back through softmax, the
per-neuron affine output, GroupNorm, the activation and (optionally) weight
standardization down to the mapped weights. They are then chained through
the distance-to-weight mapping to per-connection distance gradients and
projected onto the soma and axon coordinates of each connection.
"""
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from src.network.forward import (
    EPS_NORM,
    ForwardTrace,
    GroupNormLinearization,
    LayerTrace,
    activation_derivative,
    forward,
)
from src.network.geometry import EPS_DIST, NetworkGeometry
from src.network.loss import ClassWeights, EPS_PROB, class_weight_array, penalty_gradient, weighted_cross_entropy, weights_penalty
from src.schemas.types import DerivativeMode, GroupNormBackward, MappingKind
from src.trainers.genetic import GenomeLayout
from src.utils.errors import InvalidArgumentError, InvalidConfigurationError, InvalidStateError


class LayerGradients(NamedTuple):
    """
    Gradients of one non-input layer.

    Attributes:
        error: (N, n) dC/d y_hat of the layer, per sample.
        d_weights: (n, n_prev) dC/dW on the mapped (pre-standardization) weights, penalty excluded.
        d_gamma: (n,) dC/d gamma.
        d_beta: (n,) dC/d beta.
        upstream: (N, n_prev) dC/d y_hat of the previous layer.
    """
    error: np.ndarray
    d_weights: np.ndarray
    d_gamma: np.ndarray
    d_beta: np.ndarray
    upstream: np.ndarray


@dataclass
class Gradients:
    """Per-layer gradients of a full backward pass; index 0 (input layer) holds None."""
    layers: List[Optional[LayerGradients]]
    weights: List[Optional[np.ndarray]]

    @property
    def gammas(self) -> list:
        return [None if layer is None else layer.d_gamma for layer in self.layers]

    @property
    def betas(self) -> list:
        return [None if layer is None else layer.d_beta for layer in self.layers]


def groupnorm_backward_diag(a, mu, var, eps: float = EPS_NORM, m: Optional[int] = None) -> np.ndarray:
    """
    Diagonal GroupNorm derivative d a_hat(i) / d a(i), with mean and variance recomputed from a.

        [(1 - 1/m) sqrt(var + eps) - (a(i) - mu) * d sqrt(var + eps) / d a(i)] / (var + eps)

    where d var / d a(i) = (2/m) [(a(i) - mu)(1 - 1/m) - (1/m) sum_{j != i} (a(j) - mu)].

    Args:
        a: Activations, shape (..., width).
        mu, var: Per-group mean and population variance, shape (..., width / m).
        eps (float): Variance stabilizer.
        m (int | None): Group size, None for a single group.
    """
    a = np.asarray(a, dtype=float)
    width = a.shape[-1]
    m = width if m is None else m
    groups = a.reshape(*a.shape[:-1], width // m, m)
    mu = np.asarray(mu, dtype=float)[..., None]
    var = np.asarray(var, dtype=float)[..., None]

    centered = groups - mu
    others = (centered.sum(axis=-1, keepdims=True) - centered) / m
    d_var = (2.0 / m) * (centered * (1.0 - 1.0 / m) - others)
    stddev = np.sqrt(var + eps)
    d_stddev = d_var / (2.0 * stddev)
    diag = ((1.0 - 1.0 / m) * stddev - centered * d_stddev) / (var + eps)
    return diag.reshape(a.shape)


def groupnorm_backward_full(d_a_hat, a_hat, var, eps: float = EPS_NORM, m: Optional[int] = None) -> np.ndarray:
    """Exact GroupNorm backward: (1/s)(g - mean(g) - a_hat * mean(g * a_hat)) within each group."""
    d_a_hat = np.asarray(d_a_hat, dtype=float)
    width = d_a_hat.shape[-1]
    m = width if m is None else m
    shape = (*d_a_hat.shape[:-1], width // m, m)
    g = d_a_hat.reshape(shape)
    normalized = np.asarray(a_hat, dtype=float).reshape(shape)
    stddev = np.sqrt(np.asarray(var, dtype=float)[..., None] + eps)
    d_a = (g - g.mean(axis=-1, keepdims=True) - normalized * (g * normalized).mean(axis=-1, keepdims=True)) / stddev
    return d_a.reshape(d_a_hat.shape)


def _standardization_backward(d_weights: np.ndarray, weights: np.ndarray, scale: np.ndarray) -> np.ndarray:
    return (d_weights - d_weights.mean(axis=1, keepdims=True) - weights * (d_weights * weights).mean(axis=1, keepdims=True)) / scale


def _layer_backward(geom: NetworkGeometry, layer: int, trace: LayerTrace, error: np.ndarray,
                    groupnorm_backward: GroupNormBackward, eps: float) -> LayerGradients:
    spec = geom.spec
    d_gamma = (error * trace.a_hat).sum(axis=0)
    d_beta = error.sum(axis=0)
    d_a_hat = error * geom.gammas[layer]

    if not spec.groupnorm:
        d_a = d_a_hat
    elif GroupNormBackward(groupnorm_backward) == GroupNormBackward.FULL:
        d_a = groupnorm_backward_full(d_a_hat, trace.a_hat, trace.var, eps, trace.group_size)
    elif trace.mu is None:
        raise InvalidStateError('Cannot backpropagate a trace whose GroupNorm was linearized')
    else:
        d_a = d_a_hat * groupnorm_backward_diag(trace.a, trace.mu, trace.var, eps, trace.group_size)

    d_z = d_a * activation_derivative(spec.activation, trace.z, trace.a)
    d_effective = d_z.T @ trace.inputs
    upstream = d_z @ trace.weights
    if spec.weight_standardization:
        d_weights = _standardization_backward(d_effective, trace.weights, trace.ws_scale)
    else:
        d_weights = d_effective
    return LayerGradients(error, d_weights, d_gamma, d_beta, upstream)


def output_error(probabilities, labels, class_weights) -> np.ndarray:
    """
    dC/d y_hat_out of softmax followed by the weighted cross-entropy: beta_y (p - onehot) / N.

    Samples whose true-class probability sits below the log floor get a zero row, the floored loss being flat there.
    """
    p = np.atleast_2d(np.asarray(probabilities, dtype=float))
    labels = np.asarray(labels, dtype=int).ravel()
    n = labels.size
    if n == 0:
        raise InvalidArgumentError('Cannot backpropagate an empty batch')
    beta = class_weight_array(class_weights)
    onehot = np.zeros_like(p)
    onehot[np.arange(n), labels] = 1.0
    error = beta[labels][:, None] * (p - onehot) / n
    error[p[np.arange(n), labels] < EPS_PROB] = 0.0
    return error


def backward_output(geom: NetworkGeometry, trace: Optional[ForwardTrace], labels, class_weights,
                    groupnorm_backward: GroupNormBackward = GroupNormBackward.DIAGONAL, eps: float = EPS_NORM) -> LayerGradients:
    """
    Gradients of the output layer: error e = dC/d y_hat_out, dC/d beta = sum of e, dC/d gamma = sum of e * a_hat,
    and dC/dW through gamma, GroupNorm and the activation.

    Raises:
        InvalidStateError: Without a forward trace.
    """
    if trace is None or not trace.layers:
        raise InvalidStateError('backward_output needs the trace of a completed forward pass')
    error = output_error(trace.probabilities, labels, class_weights)
    return _layer_backward(geom, geom.spec.layer_count - 1, trace.output, error, groupnorm_backward, eps)


def backward_hidden(geom: NetworkGeometry, trace: ForwardTrace, layer: int, downstream: LayerGradients,
                    groupnorm_backward: GroupNormBackward = GroupNormBackward.DIAGONAL, eps: float = EPS_NORM) -> LayerGradients:
    """Gradients of hidden layer `layer` from the gradients of layer `layer + 1`."""
    if trace is None:
        raise InvalidStateError('backward_hidden needs the trace of a completed forward pass')
    if not 1 <= layer < geom.spec.layer_count - 1:
        raise InvalidArgumentError(f'Layer {layer} is not a hidden layer')
    return _layer_backward(geom, layer, trace.layers[layer - 1], downstream.upstream, groupnorm_backward, eps)


def backward(geom: NetworkGeometry, trace: ForwardTrace, labels, class_weights,
             groupnorm_backward: GroupNormBackward = GroupNormBackward.DIAGONAL, eps: float = EPS_NORM) -> Gradients:
    """
    Full backward pass. `weights` holds dC/dW per layer with the L1/L2 penalty gradient included.
    """
    spec = geom.spec
    layers: List[Optional[LayerGradients]] = [None] * spec.layer_count
    layers[-1] = backward_output(geom, trace, labels, class_weights, groupnorm_backward, eps)
    for layer in range(spec.layer_count - 2, 0, -1):
        layers[layer] = backward_hidden(geom, trace, layer, layers[layer + 1], groupnorm_backward, eps)

    weights: List[Optional[np.ndarray]] = [None] * spec.layer_count
    for layer in range(1, spec.layer_count):
        d_weights = layers[layer].d_weights
        if spec.l1 or spec.l2:
            d_weights = d_weights + penalty_gradient(trace.layers[layer - 1].raw_weights, spec.l1, spec.l2)
        weights[layer] = d_weights
    return Gradients(layers, weights)


def mapping_derivative(distances, dmax: float, mapping: MappingKind, sigma: float, mode: DerivativeMode) -> np.ndarray:
    """dw/dd per connection; dmax is held constant."""
    distances = np.asarray(distances, dtype=float)
    if MappingKind(mapping) == MappingKind.GAUSSIAN and DerivativeMode(mode) == DerivativeMode.EXACT:
        return -(distances / sigma ** 2) * np.exp(-(distances * distances) / (2.0 * sigma ** 2))
    return np.full_like(distances, -1.0 / dmax)


def distance_gradients(weight_gradients: Sequence[Optional[np.ndarray]], trace: ForwardTrace, geom: NetworkGeometry,
                       mode: DerivativeMode) -> List[Optional[np.ndarray]]:
    """
    dC/dd = dC/dw * dw/dd for every connection.

    Inverse mapping and the linear surrogate use dw/dd = -1/dmax with the layer pair's dmax of the trace;
    the exact Gaussian mode differentiates exp(-d^2 / (2 sigma^2)).
    """
    spec = geom.spec
    result: List[Optional[np.ndarray]] = [None] * spec.layer_count
    for layer in range(1, spec.layer_count):
        layer_trace = trace.layers[layer - 1]
        slope = mapping_derivative(layer_trace.distances, layer_trace.dmax, spec.mapping, spec.sigma, mode)
        result[layer] = weight_gradients[layer] * slope
    return result


def _unit_directions(somas: np.ndarray, axons: np.ndarray):
    difference = somas[:, None, :] - axons[None, :, :]
    distances = np.linalg.norm(difference, axis=-1)
    valid = distances >= EPS_DIST
    directions = np.zeros_like(difference)
    directions[valid] = difference[valid] / distances[valid][:, None]
    return directions, int((~valid).sum())


def coordinate_gradients(geom: NetworkGeometry, distance_grads: Sequence[Optional[np.ndarray]]):
    """
    Total derivative of the loss with respect to every soma and axon coordinate (sum over incident connections).

    Returns:
        tuple: (soma gradients per layer, axon gradients per layer, number of degenerate connections).
    """
    count = geom.spec.layer_count
    somas: list = [None] * count
    axons: list = [None] * count
    degenerate = 0
    for layer in range(1, count):
        directions, flagged = _unit_directions(geom.somas[layer], geom.axons[layer - 1])
        degenerate += flagged
        somas[layer] = np.einsum('ji,jic->jc', distance_grads[layer], directions)
        axons[layer - 1] = -np.einsum('ji,jic->ic', distance_grads[layer], directions)
    return somas, axons, degenerate


@dataclass
class DisplacementSet:
    """
    Accumulated per-connection displacement vectors of every soma and axon terminal.

    `*_sums[l]` has shape (n_l, 3); `*_counts[l]` the number of connections incident to each endpoint.
    `degenerate` counts connections skipped for a distance below EPS_DIST.
    """
    soma_sums: list
    soma_counts: list
    axon_sums: list
    axon_counts: list
    degenerate: int = 0

    def soma_displacement(self, layer: int) -> np.ndarray:
        return self.soma_sums[layer] / self.soma_counts[layer][:, None]

    def axon_displacement(self, layer: int) -> np.ndarray:
        return self.axon_sums[layer] / self.axon_counts[layer][:, None]


def displacement_vectors(geom: NetworkGeometry, distance_grads: Sequence[Optional[np.ndarray]], lr: float) -> DisplacementSet:
    """
    Per connection (axon_i -> soma_j) with unit direction u = (soma - axon)/d, the soma receives
    -lr * dC/dd * u and the axon +lr * dC/dd * u. Each endpoint later moves by the mean of its vectors.
    """
    somas, axons, degenerate = coordinate_gradients(geom, distance_grads)
    widths = geom.layer_widths
    count = len(widths)
    soma_counts = [None] + [np.full(widths[layer], widths[layer - 1], dtype=float) for layer in range(1, count)]
    axon_counts = [np.full(widths[layer], widths[layer + 1], dtype=float) for layer in range(count - 1)] + [None]
    return DisplacementSet(
        soma_sums=[None if grad is None else -lr * grad for grad in somas],
        soma_counts=soma_counts,
        axon_sums=[None if grad is None else -lr * grad for grad in axons],
        axon_counts=axon_counts,
        degenerate=degenerate,
    )


def objective(geom: NetworkGeometry, features, labels, class_weights: ClassWeights,
              frozen_dmax: Optional[Sequence[float]] = None,
              linearization: Optional[Sequence[GroupNormLinearization]] = None):
    """Weighted cross-entropy plus penalties on the weights actually used by the forward pass."""
    p, trace = forward(geom, features, frozen_dmax=frozen_dmax, linearization=linearization)
    loss = weighted_cross_entropy(p, labels, class_weights)
    if geom.spec.l1 or geom.spec.l2:
        loss += weights_penalty((layer.raw_weights for layer in trace.layers), geom.spec.l1, geom.spec.l2)
    return loss, trace


class OracleReport(NamedTuple):
    max_relative_error: float
    max_absolute_error: float
    parameter_count: int
    worst_index: int


def analytic_gradient(geom: NetworkGeometry, trace: ForwardTrace, labels, class_weights, mode: DerivativeMode,
                      groupnorm_backward: GroupNormBackward = GroupNormBackward.DIAGONAL) -> np.ndarray:
    """Per-parameter gradient in genome order: sum-form coordinate gradients, then gammas and betas."""
    gradients = backward(geom, trace, labels, class_weights, groupnorm_backward)
    somas, axons, _ = coordinate_gradients(geom, distance_gradients(gradients.weights, trace, geom, mode))
    as_geometry = geom.updated(somas=somas, axons=axons, gammas=gradients.gammas, betas=gradients.betas)
    return GenomeLayout(geom.spec).encode(as_geometry)


def finite_difference_oracle(geom: NetworkGeometry, features, labels, class_weights=None, eps_fd: float = 1e-5,
                             mode: DerivativeMode = DerivativeMode.EXACT,
                             groupnorm_backward: GroupNormBackward = GroupNormBackward.DIAGONAL,
                             floor: float = 1e-4) -> OracleReport:
    """
    Compare the analytic gradient of every coordinate and normalization parameter with central differences.

    The numeric loss matches the analytic conventions: Inverse dmax is frozen at the base point and,
    with the diagonal GroupNorm backward, normalization is replaced by its diagonal linearization at
    the base point. The relative error of a parameter is |analytic - numeric| / max(|analytic|, |numeric|, floor).

    Raises:
        InvalidConfigurationError: For the Gaussian linear surrogate, which has no matching loss.
    """
    spec = geom.spec
    if spec.mapping == MappingKind.GAUSSIAN and DerivativeMode(mode) == DerivativeMode.LINEAR_SURROGATE:
        raise InvalidConfigurationError('The linear surrogate derivative has no matching loss to difference')
    if class_weights is None:
        class_weights = ClassWeights((1.0,) * spec.output_dim)

    _, trace = forward(geom, features)
    frozen = trace.dmaxes
    linearization = None
    if spec.groupnorm and GroupNormBackward(groupnorm_backward) == GroupNormBackward.DIAGONAL:
        linearization = [
            GroupNormLinearization(layer.a, layer.a_hat, groupnorm_backward_diag(layer.a, layer.mu, layer.var, EPS_NORM, layer.group_size))
            for layer in trace.layers
        ]
    analytic = analytic_gradient(geom, trace, labels, class_weights, mode, groupnorm_backward)

    layout = GenomeLayout(spec)
    genome = layout.encode(geom)
    numeric = np.empty_like(genome)
    for index in range(genome.size):
        shifted = genome.copy()
        shifted[index] = genome[index] + eps_fd
        upper, _ = objective(layout.decode(shifted), features, labels, class_weights, frozen, linearization)
        shifted[index] = genome[index] - eps_fd
        lower, _ = objective(layout.decode(shifted), features, labels, class_weights, frozen, linearization)
        numeric[index] = (upper - lower) / (2.0 * eps_fd)

    absolute = np.abs(analytic - numeric)
    relative = absolute / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    worst = int(np.argmax(relative))
    return OracleReport(float(relative[worst]), float(absolute.max()), int(genome.size), worst)
