"""
Single runs: data preparation, training with the selected optimizer, evaluation and persistence.
"""
import hashlib
import json
import os
import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

import pandas as pd

from src.data.datasets import Dataset, StandardizationParams, gen_two_moons, load_csv, require_all_classes, standardize
from src.database.repository.runs import RunsRepository
from src.evaluation.metrics import evaluate
from src.network.forward import predict
from src.network.geometry import NetworkGeometry, export_geometry, import_geometry
from src.network.loss import ClassWeights, class_weights_from_counts, uniform_class_weights
from src.schemas.configs import ExperimentConfig
from src.schemas.records import ClassificationMetrics, CurveRow, RunRecord
from src.schemas.types import ClassWeighting, Optimizer, RunStatus
from src.trainers.genetic import train_ga
from src.trainers.gradient import train_gd
from src.utils.errors import DataParseError, DivergedError, InvalidStateError, RunFailedError
from src.utils.logger import Logger


def run_id_for(snapshot: dict, seed: int) -> str:
    """First 16 hex characters of the SHA-1 of the canonical JSON of (snapshot, seed)."""
    canonical = json.dumps({'config': snapshot, 'seed': seed}, sort_keys=True, separators=(',', ':'))
    return hashlib.sha1(canonical.encode('utf-8')).hexdigest()[:16]


def load_splits(config: ExperimentConfig) -> Tuple[Dataset, Dataset]:
    """Raw (unstandardized) train and test splits selected by the configuration."""
    if config.dataset == 'two_moons' and not config.train_path:
        return gen_two_moons(config.n_train, config.n_test, config.noise_std, config.data_seed)
    train = load_csv(config.train_path, config.label_column, config.class_names, 'train', config.dataset)
    test = load_csv(config.test_path, config.label_column, train.class_names, 'test', config.dataset)
    if test.feature_names != train.feature_names:
        raise DataParseError(f'Test features {test.feature_names} differ from train features {train.feature_names}')
    return train, test


def class_weights_for(config: ExperimentConfig, counts) -> ClassWeights:
    if config.class_weighting == ClassWeighting.INVERSE_FREQUENCY:
        return class_weights_from_counts(counts)
    return uniform_class_weights(len(counts))


@dataclass
class RunOutcome:
    record: RunRecord
    geometry: Optional[NetworkGeometry]
    standardization: Optional[StandardizationParams]


def execute_run(config: ExperimentConfig, seed: int, grid_index: int = 0, workers: int = 1) -> RunOutcome:
    """
    Train and evaluate one (configuration, seed) point without touching the filesystem.

    Trainer errors never escape: a DivergedError gives status 'diverged', anything else 'failed'.
    """
    snapshot = config.snapshot()
    run_id = run_id_for(snapshot, seed)
    context = f'[run] [{config.optimizer.value}] [{run_id}]'
    Logger().log('INFO', f'{context} starting {config.name} on {config.dataset} with seed {seed}')

    geometry = standardization = None
    curves: List[CurveRow] = []
    train_metrics = test_metrics = None
    status, error = RunStatus.OK, None
    started = time.perf_counter()
    try:
        raw_train, raw_test = load_splits(config)
        counts = require_all_classes(raw_train)
        train, test, standardization = standardize(raw_train, raw_test)
        spec = config.network_spec(train.n_features, train.class_count)
        weights = class_weights_for(config, counts)

        if config.optimizer == Optimizer.GA:
            result = train_ga(spec, train, config.ga_config(seed, workers), test, weights)
        else:
            result = train_gd(spec, train, config.gd_config(seed), test, weights)
        geometry, curves = result.geometry, result.history

        train_metrics = evaluate(train.labels, predict(geometry, train.features), train.class_count)
        test_metrics = evaluate(test.labels, predict(geometry, test.features), test.class_count)
        if not (train_metrics.is_finite() and test_metrics.is_finite()):
            status, error = RunStatus.FAILED, 'Metrics are undefined (a class is missing from a split)'
    except DivergedError as diverged:
        status, error, curves = RunStatus.DIVERGED, str(diverged), list(diverged.history)
    except Exception as failure:
        status, error = RunStatus.FAILED, f'{type(failure).__name__}: {failure}'
    duration = time.perf_counter() - started

    if status == RunStatus.OK:
        Logger().log('INFO', f'{context} done in {duration:.1f}s, test BAcc {test_metrics.bacc:.4f}')
    else:
        Logger().log('ERROR', f'{context} {status.value}: {error}')

    record = RunRecord(
        run_id=run_id,
        grid_index=grid_index,
        dataset=config.dataset,
        optimizer=config.optimizer.value,
        seed=seed,
        config=snapshot,
        status=status,
        train_metrics=train_metrics if status == RunStatus.OK else None,
        test_metrics=test_metrics if status == RunStatus.OK else None,
        curves=curves,
        duration_seconds=duration,
        error=error,
    )
    return RunOutcome(record, geometry, standardization)


def _metrics_frame(record: RunRecord) -> pd.DataFrame:
    rows = []
    for split, metrics in (('train', record.train_metrics), ('test', record.test_metrics)):
        if metrics is not None:
            rows.append({'split': split, 'bacc': metrics.bacc, 'sensitivity': metrics.sensitivity, 'specificity': metrics.specificity})
    return pd.DataFrame(rows, columns=['split', 'bacc', 'sensitivity', 'specificity'])


def _confusion_frame(metrics: ClassificationMetrics, split: str) -> pd.DataFrame:
    frame = pd.DataFrame(metrics.confusion, columns=[f'predicted_{index}' for index in range(len(metrics.confusion))])
    frame.insert(0, 'true_class', range(len(metrics.confusion)))
    frame.insert(0, 'split', split)
    return frame


def write_run_dir(outcome: RunOutcome, run_dir: str) -> None:
    """config.json, geometry.csv, standardization.csv, metrics.csv, curves.csv and confusion.csv of one run."""
    record = outcome.record
    os.makedirs(run_dir, exist_ok=True)
    with open(os.path.join(run_dir, 'config.json'), 'w', encoding='utf-8') as handle:
        json.dump({'run_id': record.run_id, 'grid_index': record.grid_index, 'seed': record.seed,
                   'status': record.status.value, 'error': record.error, 'config': record.config}, handle, indent=2, sort_keys=True)
    if outcome.geometry is not None:
        export_geometry(outcome.geometry, os.path.join(run_dir, 'geometry.csv'))
    if outcome.standardization is not None:
        outcome.standardization.to_frame().to_csv(os.path.join(run_dir, 'standardization.csv'), index=False)
    _metrics_frame(record).to_csv(os.path.join(run_dir, 'metrics.csv'), index=False)
    pd.DataFrame([row.model_dump() for row in record.curves], columns=list(CurveRow.model_fields)).to_csv(
        os.path.join(run_dir, 'curves.csv'), index=False)
    if record.status == RunStatus.OK:
        confusion = pd.concat([_confusion_frame(record.train_metrics, 'train'), _confusion_frame(record.test_metrics, 'test')])
        confusion.to_csv(os.path.join(run_dir, 'confusion.csv'), index=False)


def run_dir_for(out_dir: str, run_id: str) -> str:
    return os.path.join(out_dir, 'runs', run_id)


def run_single(config: ExperimentConfig, seed: int, out_dir: str, repository: Optional[RunsRepository] = None,
               grid_index: int = 0, workers: int = 1) -> RunRecord:
    """
    Train, evaluate and persist one run: its directory under <out_dir>/runs/<run_id> and,
    when a repository is given, its row in the run store.
    """
    outcome = execute_run(config, seed, grid_index, workers)
    run_dir = run_dir_for(out_dir, outcome.record.run_id)
    outcome.record.run_dir = run_dir
    write_run_dir(outcome, run_dir)
    if repository is not None:
        repository.create(outcome.record)
    return outcome.record


def ensure_ok(record: RunRecord) -> RunRecord:
    """Raises RunFailedError unless the run finished with status ok."""
    if record.status != RunStatus.OK:
        raise RunFailedError(f'Run {record.run_id} {record.status.value}: {record.error}', [record.run_id])
    return record


@dataclass
class StoredRun:
    config: ExperimentConfig
    seed: int
    run_id: str
    grid_index: int
    geometry: Optional[NetworkGeometry]
    standardization: Optional[StandardizationParams]


def load_run(run_dir: str) -> StoredRun:
    """
    Read back the configuration, trained geometry and standardization of a run directory.

    Raises:
        InvalidStateError: If the directory holds no config.json.
    """
    config_path = os.path.join(run_dir, 'config.json')
    if not os.path.exists(config_path):
        raise InvalidStateError(f'{run_dir} is not a run directory (no config.json)')
    with open(config_path, encoding='utf-8') as handle:
        stored = json.load(handle)
    config = ExperimentConfig.model_validate(stored['config'])

    geometry = standardization = None
    standardization_path = os.path.join(run_dir, 'standardization.csv')
    if os.path.exists(standardization_path):
        standardization = StandardizationParams.from_frame(pd.read_csv(standardization_path, float_precision='round_trip'))
    geometry_path = os.path.join(run_dir, 'geometry.csv')
    if os.path.exists(geometry_path) and standardization is not None:
        train, _ = load_splits(config)
        spec = config.network_spec(len(standardization.mean), train.class_count)
        geometry = import_geometry(geometry_path, spec)
    return StoredRun(config, stored['seed'], stored['run_id'], stored.get('grid_index', 0), geometry, standardization)


def replay_run(run_dir: str) -> RunOutcome:
    """Re-execute a stored run from its configuration snapshot and seed."""
    stored = load_run(run_dir)
    Logger().log('INFO', f'[run] [replay] [{stored.run_id}] replaying {run_dir}')
    return execute_run(stored.config, stored.seed, stored.grid_index)
