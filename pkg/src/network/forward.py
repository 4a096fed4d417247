"""
Inference: mapped weights, activation, GroupNorm and the per-neuron affine output.

For every non-input layer:

    z = W . y_prev            (y_prev is the input vector for the first hidden layer)
    a = act(z)
    a_hat = groupnorm(a)      (a_hat = a when GroupNorm is off)
    y = gamma * a_hat + beta

and the output layer's y goes through a softmax.
"""
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import expit, softmax

from src.network.geometry import NetworkGeometry
from src.schemas.types import ActivationKind
from src.utils.errors import InvalidArgumentError

EPS_NORM = 1e-5


def activate(kind: ActivationKind, z: np.ndarray) -> np.ndarray:
    kind = ActivationKind(kind)
    if kind == ActivationKind.SIGMOID:
        return expit(z)
    if kind == ActivationKind.TANH:
        return np.tanh(z)
    return np.maximum(z, 0.0)


def activation_derivative(kind: ActivationKind, z: np.ndarray, a: Optional[np.ndarray] = None) -> np.ndarray:
    """sigma'(z); `a` is the cached activation when available. ReLU uses 0 at z = 0."""
    kind = ActivationKind(kind)
    if kind == ActivationKind.RELU:
        return (z > 0).astype(float)
    a = activate(kind, z) if a is None else a
    if kind == ActivationKind.SIGMOID:
        return a * (1.0 - a)
    return 1.0 - a * a


def groupnorm_forward(a, m: Optional[int] = None, eps: float = EPS_NORM):
    """
    Normalize the last axis of `a` in consecutive groups of m neurons.

    Args:
        a: Activations, shape (..., width).
        m (int | None): Group size; None means a single group.
        eps (float): Variance stabilizer.

    Returns:
        tuple: (a_hat with the shape of a, mean per group, population variance per group).
    """
    a = np.asarray(a, dtype=float)
    width = a.shape[-1]
    m = width if m is None else m
    if width % m != 0:
        raise InvalidArgumentError(f'Group size {m} does not divide layer width {width}')
    groups = a.reshape(*a.shape[:-1], width // m, m)
    mu = groups.mean(axis=-1)
    var = groups.var(axis=-1)
    a_hat = (groups - mu[..., None]) / np.sqrt(var[..., None] + eps)
    return a_hat.reshape(a.shape), mu, var


def standardize_rows(W: np.ndarray, eps: float = EPS_NORM):
    """Row-wise standardization; returns the standardized matrix and the per-row sqrt(var + eps)."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] < 2:
        raise InvalidArgumentError('Weight standardization needs a matrix with at least 2 columns')
    scale = np.sqrt(W.var(axis=1, keepdims=True) + eps)
    return (W - W.mean(axis=1, keepdims=True)) / scale, scale


def weight_standardize(W, enabled: bool = True, eps: float = EPS_NORM) -> np.ndarray:
    if not enabled:
        return W
    return standardize_rows(W, eps)[0]


class GroupNormLinearization(NamedTuple):
    """A fixed point (a, a_hat) and the diagonal slope d a_hat_i / d a_i used in place of GroupNorm."""
    a: np.ndarray
    a_hat: np.ndarray
    diag: np.ndarray


@dataclass
class LayerTrace:
    """Cached quantities of one non-input layer for a batch; rows are samples."""
    distances: np.ndarray
    dmax: float
    raw_weights: np.ndarray
    weights: np.ndarray
    ws_scale: Optional[np.ndarray]
    inputs: np.ndarray
    z: np.ndarray
    a: np.ndarray
    a_hat: np.ndarray
    y_hat: np.ndarray
    mu: Optional[np.ndarray]
    var: Optional[np.ndarray]
    group_size: int


@dataclass
class ForwardTrace:
    inputs: np.ndarray
    layers: List[LayerTrace]
    probabilities: np.ndarray

    @property
    def output(self) -> LayerTrace:
        return self.layers[-1]

    @property
    def dmaxes(self) -> List[float]:
        return [layer.dmax for layer in self.layers]


def forward(geom: NetworkGeometry, x, frozen_dmax: Optional[Sequence[float]] = None,
            linearization: Optional[Sequence[GroupNormLinearization]] = None, eps: float = EPS_NORM):
    """
    Run the network on one input vector or a batch.

    Args:
        geom (NetworkGeometry): The network.
        x: Input of shape (input_dim,) or (N, input_dim).
        frozen_dmax (list[float] | None): Inverse mapping scale per layer pair instead of the current maxima.
        linearization (list[GroupNormLinearization] | None): Per layer, replace GroupNorm by its diagonal
            linearization around a fixed point. Used by the gradient oracle.
        eps (float): GroupNorm and weight standardization stabilizer.

    Returns:
        tuple: (probabilities with shape (M,) or (N, M), ForwardTrace with batch-shaped arrays).

    Raises:
        InvalidArgumentError: If the input width does not match the spec.
    """
    spec = geom.spec
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    inputs = np.atleast_2d(x)
    if inputs.ndim != 2 or inputs.shape[1] != spec.input_dim:
        raise InvalidArgumentError(f'Expected inputs with {spec.input_dim} features, got shape {x.shape}')

    traces = []
    previous = inputs
    for layer in range(1, spec.layer_count):
        width = spec.layer_widths[layer]
        connections = geom.connections(layer, dmax=None if frozen_dmax is None else frozen_dmax[layer - 1])
        if spec.weight_standardization:
            weights, ws_scale = standardize_rows(connections.weights, eps)
        else:
            weights, ws_scale = connections.weights, None

        z = previous @ weights.T
        a = activate(spec.activation, z)
        group_size = spec.group_size_for(width)
        mu = var = None
        if not spec.groupnorm:
            a_hat = a
        elif linearization is not None:
            point = linearization[layer - 1]
            a_hat = point.a_hat + point.diag * (a - point.a)
        else:
            a_hat, mu, var = groupnorm_forward(a, group_size, eps)
        y_hat = geom.gammas[layer] * a_hat + geom.betas[layer]

        traces.append(LayerTrace(
            distances=connections.distances,
            dmax=connections.dmax,
            raw_weights=connections.weights,
            weights=weights,
            ws_scale=ws_scale,
            inputs=previous,
            z=z,
            a=a,
            a_hat=a_hat,
            y_hat=y_hat,
            mu=mu,
            var=var,
            group_size=group_size,
        ))
        previous = y_hat

    probabilities = softmax(previous, axis=1)
    trace = ForwardTrace(inputs=inputs, layers=traces, probabilities=probabilities)
    return (probabilities[0] if single else probabilities), trace


def predict_from_probabilities(p) -> np.ndarray:
    """Argmax over classes; ties go to the lowest index."""
    return np.argmax(np.asarray(p), axis=-1)


def predict(geom: NetworkGeometry, x):
    p, _ = forward(geom, x)
    labels = predict_from_probabilities(p)
    return int(labels) if np.ndim(labels) == 0 else labels
