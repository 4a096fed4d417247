"""
Reproduction checks on full-size data. Deselected by default, run with `pytest -m slow`.
"""
import pytest

from src.data.datasets import class_counts
from src.experiments.presets import dataset_available, preset
from src.experiments.runner import execute_run, load_splits
from src.schemas.configs import load_experiment_config
from src.schemas.types import RunStatus
from src.utils.config import Config

pytestmark = pytest.mark.slow


def best_test_bacc(config) -> float:
    """Best test BAcc over every grid point and seed of a configuration."""
    scores = []
    for point in config.grid():
        for seed in config.seeds:
            outcome = execute_run(point, seed, workers=Config().workers)
            assert outcome.record.status == RunStatus.OK, outcome.record.error
            losses = [row.loss for row in outcome.record.curves]
            if point.optimizer.value == 'GA':
                assert all(later <= earlier for earlier, later in zip(losses, losses[1:]))
            scores.append(outcome.record.test_metrics.bacc)
    return max(scores)


@pytest.fixture(scope='module')
def two_moons_ga_best():
    return best_test_bacc(load_experiment_config('configs/two_moons_ga.conf'))


def test_two_moons_genetic_algorithm(two_moons_ga_best):
    assert two_moons_ga_best >= 0.97


def test_two_moons_gradient_descent(two_moons_ga_best):
    best = best_test_bacc(load_experiment_config('configs/two_moons_gd_sweep.conf'))
    assert 0.75 <= best <= 0.92
    assert best < two_moons_ga_best


def reduced(name: str, **overrides):
    return load_experiment_config(base=preset(name), overrides=overrides)


@pytest.mark.skipif(not dataset_available('fetal'), reason='fetal_train.csv / fetal_test.csv not in the data directory')
def test_fetal_cardiotocography():
    train, test = load_splits(reduced('fetal_gd'))
    assert class_counts(train).tolist() == [1315, 245, 140]
    assert class_counts(test).tolist() == [340, 50, 36]

    ga = best_test_bacc(reduced('fetal_ga', population=120, generations=120, seeds=[0, 1]))
    gd = best_test_bacc(reduced('fetal_gd', sweep={'learning_rate': [0.02, 0.05, 0.1]}, seeds=[0]))
    assert ga >= 0.72
    assert gd >= 0.55
    assert ga > gd


@pytest.mark.parametrize('dataset, ga_target, gd_target', [('hecktor', 0.80, 0.67), ('dlbcl', 0.83, 0.78)])
def test_external_cohorts(dataset, ga_target, gd_target):
    if not dataset_available(dataset):
        pytest.skip(f'{dataset} CSVs not in the data directory')
    ga = best_test_bacc(reduced(f'{dataset}_ga', generations=150, seeds=[0, 1]))
    gd = best_test_bacc(reduced(f'{dataset}_gd', seeds=[0, 1]))
    assert ga >= ga_target - 0.07
    assert gd >= gd_target - 0.07
    assert ga >= gd
