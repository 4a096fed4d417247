"""
Named best-known configurations per dataset and optimizer.

Architecture, initialization, mapping, normalization and penalties follow the
best settings reported for each dataset; GA populations and generation counts
are reduced so a run fits on a desk machine.
"""
import os
from typing import List, Optional

from src.utils.config import Config
from src.utils.errors import InvalidConfigurationError

DATASETS = {
    'two_moons': {},
    'fetal': {'label_column': 'NSP', 'class_names': ['1', '2', '3']},
    'hecktor': {'label_column': 'label'},
    'dlbcl': {'label_column': 'label'},
}

PRESETS = {
    'two_moons_ga': {
        'dataset': 'two_moons', 'optimizer': 'GA', 'hidden_widths': [16, 16], 'init': 'singularity',
        'mapping': 'gaussian', 'groupnorm': True, 'weight_standardization': False, 'l1': 0.0, 'l2': 0.0,
        'population': 200, 'generations': 300,
    },
    'two_moons_gd': {
        'dataset': 'two_moons', 'optimizer': 'GD', 'hidden_widths': [16, 16], 'init': 'random',
        'mapping': 'inverse', 'groupnorm': True, 'weight_standardization': False, 'l1': 0.0, 'l2': 0.0,
        'epochs': 250,
    },
    'dlbcl_ga': {
        'dataset': 'dlbcl', 'optimizer': 'GA', 'hidden_widths': [85, 64, 48], 'init': 'singularity',
        'mapping': 'gaussian', 'groupnorm': True, 'weight_standardization': True, 'l1': 0.0, 'l2': 0.0,
        'population': 'AUTO', 'generations': 300,
    },
    'dlbcl_gd': {
        'dataset': 'dlbcl', 'optimizer': 'GD', 'hidden_widths': [16, 16, 16], 'init': 'random',
        'mapping': 'gaussian', 'groupnorm': True, 'weight_standardization': False, 'l1': 0.05, 'l2': 0.05,
        'epochs': 350,
    },
    'hecktor_ga': {
        'dataset': 'hecktor', 'optimizer': 'GA', 'hidden_widths': [180], 'init': 'singularity',
        'mapping': 'gaussian', 'groupnorm': True, 'weight_standardization': True, 'l1': 0.0, 'l2': 0.0,
        'population': 'AUTO', 'generations': 300,
    },
    'hecktor_gd': {
        'dataset': 'hecktor', 'optimizer': 'GD', 'hidden_widths': [72, 72], 'init': 'random',
        'mapping': 'gaussian', 'groupnorm': True, 'weight_standardization': True, 'l1': 0.0, 'l2': 0.0,
        'epochs': 1000,
    },
    'fetal_ga': {
        'dataset': 'fetal', 'optimizer': 'GA', 'hidden_widths': [128, 128], 'init': 'singularity',
        'mapping': 'gaussian', 'groupnorm': True, 'weight_standardization': False, 'l1': 0.01, 'l2': 0.01,
        'population': 'AUTO', 'generations': 200,
    },
    'fetal_gd': {
        'dataset': 'fetal', 'optimizer': 'GD', 'hidden_widths': [128, 128], 'init': 'onion',
        'mapping': 'inverse', 'groupnorm': True, 'weight_standardization': False, 'l1': 0.01, 'l2': 0.01,
        'epochs': 400,
    },
}


def preset_names() -> List[str]:
    return sorted(PRESETS)


def dataset_paths(name: str, data_dir: Optional[str] = None) -> dict:
    """Train and test CSV locations of an external dataset: <data_dir>/<name>_train.csv and _test.csv."""
    data_dir = data_dir or Config().data_dir
    return {
        'train_path': os.path.join(data_dir, f'{name}_train.csv'),
        'test_path': os.path.join(data_dir, f'{name}_test.csv'),
    }


def dataset_fields(name: str, data_dir: Optional[str] = None) -> dict:
    """ExperimentConfig fields selecting a known dataset."""
    if name not in DATASETS:
        raise InvalidConfigurationError(f"Unknown dataset '{name}', expected one of {sorted(DATASETS)}")
    fields = {'dataset': name, **DATASETS[name]}
    if name != 'two_moons':
        fields.update(dataset_paths(name, data_dir))
    return fields


def dataset_available(name: str, data_dir: Optional[str] = None) -> bool:
    if name == 'two_moons':
        return True
    return all(os.path.exists(path) for path in dataset_paths(name, data_dir).values())


def preset(name: str, data_dir: Optional[str] = None) -> dict:
    """
    Raw ExperimentConfig values of a preset, dataset location included.

    Raises:
        InvalidConfigurationError: If the preset does not exist.
    """
    key = name.strip().lower()
    if key not in PRESETS:
        raise InvalidConfigurationError(f"Unknown preset '{name}', expected one of {preset_names()}")
    values = dict(PRESETS[key])
    return {'name': key, **values, **dataset_fields(values['dataset'], data_dir)}
