import numpy as np
import pytest

from src.data.datasets import Dataset
from src.network.forward import forward
from src.network.geometry import init_geometry
from src.network.loss import ClassWeights
from src.schemas.configs import GDConfig, NetworkSpec
from src.schemas.types import DerivativeMode, InitScheme, MappingKind
from src.trainers.backprop import backward, displacement_vectors, distance_gradients
from src.trainers import gradient
from src.trainers.gradient import apply_phase, phase_name, train_gd
from src.utils.errors import DivergedError, InvalidConfigurationError


def blobs(seed: int = 0, count: int = 30) -> Dataset:
    rng = np.random.default_rng(seed)
    features = np.vstack([rng.normal(-1.0, 0.4, (count, 2)), rng.normal(1.0, 0.4, (count, 2))])
    return Dataset(features, np.repeat([0, 1], count), ['a', 'b'])


def one_step(geom, data, t, lr=0.1):
    weights = ClassWeights((1.0, 1.0))
    _, trace = forward(geom, data.features)
    gradients = backward(geom, trace, data.labels, weights)
    displacements = displacement_vectors(geom, distance_gradients(gradients.weights, trace, geom, DerivativeMode.EXACT), lr)
    return apply_phase(geom, displacements, t, gradients, lr)


def test_apply_phase_alternates():
    data = blobs()
    spec = NetworkSpec(input_dim=2, hidden_widths=[4, 3], output_dim=2, mapping=MappingKind.INVERSE)
    geom = init_geometry(spec, InitScheme.RANDOM, rng_seed=0)

    even = one_step(geom, data, 0)
    for layer in range(spec.layer_count - 1):
        assert np.array_equal(even.axons[layer], geom.axons[layer])
    assert any(not np.array_equal(even.somas[layer], geom.somas[layer]) for layer in range(1, spec.layer_count))

    odd = one_step(even, data, 1)
    for layer in range(1, spec.layer_count):
        assert np.array_equal(odd.somas[layer], even.somas[layer])
    assert any(not np.array_equal(odd.axons[layer], even.axons[layer]) for layer in range(spec.layer_count - 1))

    assert phase_name(0) == 'soma' and phase_name(1) == 'axon'


@pytest.mark.parametrize('epochs', [3, 4])
def test_train_gd_moves_somas_then_axons(monkeypatch, epochs):
    steps = []
    original = gradient.apply_phase

    def recording(geom, displacements, t, gradients=None, lr=0.0):
        moved = original(geom, displacements, t, gradients, lr)
        steps.append((t, geom, moved))
        return moved

    monkeypatch.setattr(gradient, 'apply_phase', recording)
    spec = NetworkSpec(input_dim=2, hidden_widths=[4, 3], output_dim=2, mapping=MappingKind.INVERSE)
    result = train_gd(spec, blobs(5), GDConfig(learning_rate=0.1, epochs=epochs, rng_seed=2))

    assert [t for t, _, _ in steps] == list(range(epochs))
    assert result.geometry is steps[-1][2]
    for t, before, after in steps:
        somas_moved = [not np.array_equal(after.somas[layer], before.somas[layer]) for layer in range(1, spec.layer_count)]
        axons_moved = [not np.array_equal(after.axons[layer], before.axons[layer]) for layer in range(spec.layer_count - 1)]
        if t % 2 == 0:
            assert any(somas_moved) and not any(axons_moved)
        else:
            assert any(axons_moved) and not any(somas_moved)


def test_train_gd_records_one_row_per_epoch():
    data = blobs(1)
    spec = NetworkSpec(input_dim=2, hidden_widths=[4], output_dim=2, mapping=MappingKind.INVERSE)
    result = train_gd(spec, data, GDConfig(learning_rate=0.05, epochs=6, rng_seed=3), test=data)

    assert [row.epoch for row in result.history] == list(range(1, 7))
    assert [row.phase for row in result.history] == ['soma', 'axon'] * 3
    assert result.iterations == 6
    assert result.backward_passes == result.iterations
    assert all(row.test_bacc is not None for row in result.history)

    again = train_gd(spec, data, GDConfig(learning_rate=0.05, epochs=6, rng_seed=3), test=data)
    assert [row.loss for row in again.history] == [row.loss for row in result.history]
    assert again.geometry.equals(result.geometry)


def test_mini_batches_count_as_iterations():
    data = blobs(2)
    spec = NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=2)
    result = train_gd(spec, data, GDConfig(learning_rate=0.05, epochs=2, batch_size=25, rng_seed=1))
    assert result.iterations == 2 * 3
    assert len(result.history) == 2


def test_zero_learning_rate_keeps_the_geometry():
    data = blobs(3)
    spec = NetworkSpec(input_dim=2, hidden_widths=[4], output_dim=2)
    initial = init_geometry(spec, InitScheme.ONION, rng_seed=4)
    result = train_gd(spec, data, GDConfig(learning_rate=0.0, epochs=5, rng_seed=4), initial=initial)
    assert result.geometry.equals(initial)


def test_loss_decreases_on_two_separable_points():
    data = Dataset(np.array([[-1.0, 0.0], [1.0, 0.0]]), np.array([0, 1]), ['left', 'right'])
    spec = NetworkSpec(input_dim=2, hidden_widths=[4], output_dim=2, mapping=MappingKind.GAUSSIAN, groupnorm=False)
    config = GDConfig(learning_rate=0.05, epochs=10, derivative_mode=DerivativeMode.EXACT, rng_seed=0)
    weights = ClassWeights((1.0, 1.0))

    initial = init_geometry(spec, InitScheme.RANDOM, rng_seed=8)
    start = forward(initial, data.features)[0]
    start_loss = float(np.mean(-np.log(start[np.arange(2), data.labels])))
    result = train_gd(spec, data, config, class_weights=weights, initial=initial)
    assert result.history[-1].loss < start_loss


def test_train_gd_errors():
    data = blobs(4)
    singular = NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=2, init=InitScheme.SINGULARITY)
    with pytest.raises(InvalidConfigurationError):
        train_gd(singular, data, GDConfig())

    spec = NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=2)
    with pytest.raises(DivergedError) as error:
        train_gd(spec, data, GDConfig(epochs=3, divergence_threshold=1e-9))
    assert error.value.epoch == 1
    assert error.value.history == []
