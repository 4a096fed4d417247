"""
Two-phase spatial gradient descent.

Even iterations move only somas, odd iterations only axon terminals; every
iteration runs a fresh forward and backward pass on the current geometry.
Gammas and betas take a plain gradient step on every iteration.
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.data.datasets import Dataset, require_all_classes
from src.evaluation.metrics import bacc_score
from src.network.forward import forward, predict_from_probabilities
from src.network.geometry import NetworkGeometry, init_geometry
from src.network.loss import ClassWeights, class_weights_from_counts
from src.schemas.configs import GDConfig, NetworkSpec
from src.schemas.records import CurveRow
from src.schemas.types import InitScheme, Optimizer
from src.trainers.backprop import (
    DisplacementSet,
    Gradients,
    backward,
    displacement_vectors,
    distance_gradients,
    objective,
)
from src.utils.errors import DivergedError, InvalidArgumentError, InvalidConfigurationError
from src.utils.logger import Logger


def phase_name(t: int) -> str:
    return 'soma' if t % 2 == 0 else 'axon'


def apply_phase(geom: NetworkGeometry, displacements: DisplacementSet, t: int,
                gradients: Optional[Gradients] = None, lr: float = 0.0) -> NetworkGeometry:
    """
    Move the somas (even t) or the axon terminals (odd t) by their mean displacement.

    When `gradients` are given, gammas and betas also take a step of size `lr`, whatever the phase.
    """
    count = geom.spec.layer_count
    somas, axons = geom.somas, geom.axons
    if t % 2 == 0:
        somas = [None] + [geom.somas[layer] + displacements.soma_displacement(layer) for layer in range(1, count)]
    else:
        axons = [geom.axons[layer] + displacements.axon_displacement(layer) for layer in range(count - 1)] + [None]

    gammas, betas = geom.gammas, geom.betas
    if gradients is not None:
        gammas = [None] + [geom.gammas[layer] - lr * gradients.layers[layer].d_gamma for layer in range(1, count)]
        betas = [None] + [geom.betas[layer] - lr * gradients.layers[layer].d_beta for layer in range(1, count)]
    return geom.updated(somas=somas, axons=axons, gammas=gammas, betas=betas)


@dataclass
class GDResult:
    geometry: NetworkGeometry
    history: List[CurveRow]
    iterations: int
    backward_passes: int


def _batches(size: int, batch_size: Optional[int], rng: np.random.Generator):
    if batch_size is None or batch_size >= size:
        return [np.arange(size)]
    order = rng.permutation(size)
    return [order[start:start + batch_size] for start in range(0, size, batch_size)]


def _diverged(loss: float, threshold: float) -> bool:
    return not np.isfinite(loss) or loss > threshold


def train_gd(spec: NetworkSpec, train: Dataset, config: GDConfig, test: Optional[Dataset] = None,
             class_weights: Optional[ClassWeights] = None, initial: Optional[NetworkGeometry] = None) -> GDResult:
    """
    Train a geometry by spatial backpropagation.

    Every iteration: forward, backward, distance gradients, per-endpoint mean displacement, phase
    update. Full-batch by default; with `batch_size` each epoch visits a fresh permutation in
    mini-batches, every mini-batch counting as one iteration of the soma/axon alternation.
    After each epoch the full training loss, train BAcc and test BAcc of the current geometry are recorded.

    Raises:
        InvalidConfigurationError: For Singularity initialization.
        DivergedError: When a loss is non-finite or above `config.divergence_threshold`, or
            coordinates stop being finite. Carries the rows recorded so far.
    """
    if spec.init == InitScheme.SINGULARITY:
        raise InvalidConfigurationError('Singularity initialization is only applicable with the genetic algorithm')
    if train.n_features != spec.input_dim or train.class_count != spec.output_dim:
        raise InvalidConfigurationError('Dataset dimensions do not match the network spec')
    if class_weights is None:
        class_weights = class_weights_from_counts(require_all_classes(train))

    init_seed, batch_seed = np.random.SeedSequence(config.rng_seed).spawn(2)
    geom = initial if initial is not None else init_geometry(spec, rng_seed=int(init_seed.generate_state(1)[0]), trainer=Optimizer.GD)
    rng = np.random.default_rng(batch_seed)
    mode = config.resolved_derivative_mode(spec.mapping)
    lr = config.learning_rate

    context = f'[train] [GD] [seed={config.rng_seed}]'
    Logger().log('INFO', f'{context} {config.epochs} epochs, lr {lr}, {mode.value} mapping derivative, {config.groupnorm_backward.value} GroupNorm backward')

    history: List[CurveRow] = []
    t = 0
    backward_passes = 0
    warned_degenerate = False
    for epoch in range(1, config.epochs + 1):
        for batch in _batches(train.n_samples, config.batch_size, rng):
            features, labels = train.features[batch], train.labels[batch]
            loss, trace = objective(geom, features, labels, class_weights)
            if _diverged(loss, config.divergence_threshold):
                Logger().log('ERROR', f'{context} diverged at epoch {epoch} (loss={loss})')
                raise DivergedError(epoch, loss, history)

            gradients = backward(geom, trace, labels, class_weights, config.groupnorm_backward)
            backward_passes += 1
            displacements = displacement_vectors(geom, distance_gradients(gradients.weights, trace, geom, mode), lr)
            if displacements.degenerate and not warned_degenerate:
                Logger().log('WARNING', f'{context} {displacements.degenerate} connections have coincident endpoints and do not move them')
                warned_degenerate = True
            try:
                geom = apply_phase(geom, displacements, t, gradients, lr)
            except InvalidArgumentError:
                Logger().log('ERROR', f'{context} non-finite coordinates at epoch {epoch}')
                raise DivergedError(epoch, float('nan'), history)
            t += 1

        loss, trace = objective(geom, train.features, train.labels, class_weights)
        if _diverged(loss, config.divergence_threshold):
            Logger().log('ERROR', f'{context} diverged at epoch {epoch} (loss={loss})')
            raise DivergedError(epoch, loss, history)
        train_bacc = bacc_score(train.labels, predict_from_probabilities(trace.probabilities), train.class_count)
        test_bacc = None
        if test is not None:
            test_bacc = bacc_score(test.labels, predict_from_probabilities(forward(geom, test.features)[0]), test.class_count)
        history.append(CurveRow(epoch=epoch, phase=phase_name(t - 1), loss=loss, train_bacc=train_bacc, test_bacc=test_bacc))
        Logger().log('DEBUG', f'{context} epoch {epoch} loss {loss:.6f} train BAcc {train_bacc:.4f}')

    Logger().log('INFO', f'{context} finished after {t} iterations, final loss {history[-1].loss:.6f}')
    return GDResult(geom, history, t, backward_passes)
