import numpy as np
import pytest
from scipy.special import softmax

from src.network.forward import forward, groupnorm_forward, predict, predict_from_probabilities, weight_standardize
from src.network.geometry import init_geometry
from src.schemas.configs import NetworkSpec
from src.schemas.types import ActivationKind, InitScheme, MappingKind
from src.utils.errors import InvalidArgumentError


def test_groupnorm_forward():
    a_hat, _, _ = groupnorm_forward([0.3, 0.3, 0.3, 0.3])
    assert np.allclose(a_hat, 0.0)

    a_hat, _, _ = groupnorm_forward([1.0, -1.0], eps=1e-12)
    assert np.allclose(a_hat, [1.0, -1.0])

    a_hat, mu, var = groupnorm_forward([0.0, 2.0], eps=0.0)
    assert np.allclose(a_hat, [-1.0, 1.0])
    assert mu.tolist() == [1.0] and var.tolist() == [1.0]

    a_hat, mu, _ = groupnorm_forward(np.array([[0.0, 2.0, 5.0, 5.0]]), m=2, eps=0.0)
    assert np.allclose(a_hat[0, :2], [-1.0, 1.0])
    assert mu.shape == (1, 2)

    with pytest.raises(InvalidArgumentError):
        groupnorm_forward([1.0, 2.0, 3.0], m=2)


def test_groupnorm_forward_normalizes_every_group():
    rng = np.random.default_rng(5)
    for _ in range(300):
        m = int(rng.integers(1, 6))
        width = m * int(rng.integers(1, 5))
        eps = float(rng.choice([1e-5, 1e-2, 0.5]))
        a = rng.normal(rng.normal(), rng.uniform(0.01, 3.0), size=(4, width))

        a_hat, mu, var = groupnorm_forward(a, m, eps)
        groups = a_hat.reshape(4, width // m, m)
        assert np.allclose(groups.mean(axis=-1), 0.0, atol=1e-10)
        assert np.allclose(groups.var(axis=-1), var / (var + eps), atol=1e-10)
        assert np.allclose(mu, a.reshape(4, width // m, m).mean(axis=-1))


def plain_forward(geom, x):
    """sigma(W . y) layer by layer, then a softmax; distances and mappings written out."""
    spec = geom.spec
    y = np.asarray(x, dtype=float)
    for layer in range(1, spec.layer_count):
        axons, somas = geom.axons[layer - 1], geom.somas[layer]
        d = np.sqrt(((somas[:, None, :] - axons[None, :, :]) ** 2).sum(axis=-1))
        if spec.mapping == MappingKind.INVERSE:
            W = 1.0 - d / d.max()
        else:
            W = np.exp(-d ** 2 / (2.0 * spec.sigma ** 2))
        z = y @ W.T
        if spec.activation == ActivationKind.SIGMOID:
            y = 1.0 / (1.0 + np.exp(-z))
        elif spec.activation == ActivationKind.TANH:
            y = np.tanh(z)
        else:
            y = np.where(z > 0, z, 0.0)
    e = np.exp(y - y.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def test_forward_without_groupnorm_is_a_plain_network():
    rng = np.random.default_rng(9)
    for trial in range(60):
        spec = NetworkSpec(
            input_dim=int(rng.integers(1, 5)),
            hidden_widths=[int(width) for width in rng.integers(1, 6, size=int(rng.integers(1, 4)))],
            output_dim=int(rng.integers(2, 5)),
            mapping=[MappingKind.GAUSSIAN, MappingKind.INVERSE][trial % 2],
            sigma=float(rng.uniform(0.2, 1.0)),
            activation=[ActivationKind.SIGMOID, ActivationKind.TANH, ActivationKind.RELU][trial % 3],
            groupnorm=False,
        )
        geom = init_geometry(spec, InitScheme.RANDOM, rng_seed=trial)
        assert all(np.all(geom.gammas[layer] == 1.0) and np.all(geom.betas[layer] == 0.0) for layer in range(1, spec.layer_count))

        x = rng.normal(size=(10, spec.input_dim))
        probabilities, _ = forward(geom, x)
        assert np.allclose(probabilities, plain_forward(geom, x), atol=1e-12)


def test_weight_standardize():
    assert np.allclose(weight_standardize(np.array([[1.0, 1.0, 1.0]])), 0.0)
    assert np.allclose(weight_standardize(np.array([[0.0, 2.0]]), eps=0.0), [[-1.0, 1.0]])

    weights = np.array([[0.1, 0.7], [0.3, 0.4]])
    assert weight_standardize(weights, enabled=False) is weights


def test_forward_probabilities_sum_to_one():
    rng = np.random.default_rng(0)
    for trial in range(1000):
        spec = NetworkSpec(
            input_dim=3,
            hidden_widths=[int(rng.integers(2, 7))],
            output_dim=int(rng.integers(2, 5)),
            mapping=[MappingKind.GAUSSIAN, MappingKind.INVERSE][trial % 2],
            activation=[ActivationKind.SIGMOID, ActivationKind.TANH, ActivationKind.RELU][trial % 3],
            groupnorm=bool(trial % 2),
        )
        geom = init_geometry(spec, InitScheme.RANDOM, rng_seed=trial)
        probabilities, trace = forward(geom, rng.normal(size=(20, 3)))
        assert np.allclose(probabilities.sum(axis=1), 1.0, atol=1e-9)
        assert len(trace.layers) == spec.layer_count - 1


def test_forward_single_input_and_determinism():
    spec = NetworkSpec(input_dim=2, hidden_widths=[4], output_dim=2, mapping=MappingKind.GAUSSIAN)
    geom = init_geometry(spec, InitScheme.SINGULARITY)
    first, _ = forward(geom, [0.3, -0.2])
    second, _ = forward(geom, [0.3, -0.2])
    assert first.shape == (2,)
    assert np.array_equal(first, second)

    with pytest.raises(InvalidArgumentError):
        forward(geom, [1.0, 2.0, 3.0])


def test_zero_output_gamma_severs_the_input():
    spec = NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=2)
    geom = init_geometry(spec, InitScheme.RANDOM, rng_seed=4)
    gammas = list(geom.gammas)
    betas = list(geom.betas)
    gammas[-1] = np.zeros(2)
    betas[-1] = np.array([0.4, -0.6])
    severed = geom.updated(gammas=gammas, betas=betas)

    probabilities, _ = forward(severed, np.random.default_rng(1).normal(size=(5, 2)))
    assert np.allclose(probabilities, softmax([0.4, -0.6]))


def test_predict():
    assert predict_from_probabilities([0.7, 0.3]) == 0
    assert predict_from_probabilities([0.5, 0.5]) == 0
    assert predict_from_probabilities([0.1, 0.2, 0.7]) == 2

    spec = NetworkSpec(input_dim=2, hidden_widths=[3], output_dim=3)
    geom = init_geometry(spec, InitScheme.RANDOM, rng_seed=2)
    assert isinstance(predict(geom, [0.1, 0.2]), int)
    assert predict(geom, np.zeros((4, 2))).shape == (4,)
