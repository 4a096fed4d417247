"""
Report generation over stored runs: best runs, sweep statistics with the GA vs GD
Mann-Whitney comparison, training curves, decision grids and pairwise class confusion.

Best runs are selected on test BAcc, ties broken by the earlier grid position and then
the smaller seed. This is optimistically biased and mirrors how the compared results
were originally reported.
"""
import json
import math
import os
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from src.evaluation.boundaries import decision_grid, grid_bounds, misclassified_area_fraction, two_moons_ground_truth
from src.evaluation.metrics import pairwise_confusion
from src.evaluation.statistics import mann_whitney_u, sweep_stats
from src.experiments.runner import load_run, load_splits
from src.schemas.records import CurveRow, RunRecord
from src.schemas.types import Optimizer, RunStatus
from src.utils.logger import Logger

BEST_RUN_COLUMNS = ['dataset', 'optimizer', 'run_id', 'grid_index', 'seed', 'runs_ok',
                    'train_bacc', 'test_bacc', 'test_sensitivity', 'test_specificity']
STATS_COLUMNS = ['dataset', 'optimizer', 'count', 'mean', 'median', 'std', 'min', 'max', 'p_value', 'p_value_comparable']
CURVE_COLUMNS = ['run_id', 'grid_index', 'seed', *CurveRow.model_fields]
PAIRWISE_COLUMNS = ['dataset', 'optimizer', 'run_id', 'class_a', 'class_b', 'errors']
AREA_COLUMNS = ['dataset', 'optimizer', 'run_id', 'misclassified_area']

Group = Tuple[str, str]


def group_records(records: Iterable[RunRecord]) -> Dict[Group, List[RunRecord]]:
    """Successful runs keyed by (dataset, optimizer), in grid order."""
    groups: Dict[Group, List[RunRecord]] = defaultdict(list)
    for record in records:
        if record.status == RunStatus.OK:
            groups[(record.dataset, record.optimizer)].append(record)
    return {key: sorted(runs, key=lambda run: (run.grid_index, run.seed)) for key, runs in sorted(groups.items())}


def best_run(records: Sequence[RunRecord]) -> RunRecord:
    """Highest test BAcc; the earliest (grid_index, seed) wins a tie."""
    return min(records, key=lambda record: (-record.test_metrics.bacc, record.grid_index, record.seed))


def _comparable_key(record: RunRecord, fields: Sequence[str]) -> str:
    return json.dumps([record.config.get(field) for field in fields], sort_keys=True)


def comparable_subset(ga_runs: Sequence[RunRecord], gd_runs: Sequence[RunRecord],
                      fields: Sequence[str]) -> Tuple[List[RunRecord], List[RunRecord]]:
    """Runs whose values for `fields` occur under both optimizers."""
    shared = {_comparable_key(run, fields) for run in ga_runs} & {_comparable_key(run, fields) for run in gd_runs}
    return ([run for run in ga_runs if _comparable_key(run, fields) in shared],
            [run for run in gd_runs if _comparable_key(run, fields) in shared])


def _p_value(ga_runs: Sequence[RunRecord], gd_runs: Sequence[RunRecord]) -> float:
    if not ga_runs or not gd_runs:
        return float('nan')
    return mann_whitney_u([run.test_metrics.bacc for run in ga_runs], [run.test_metrics.bacc for run in gd_runs]).p_value


def _write(frame: pd.DataFrame, path: str, written: List[str]) -> None:
    os.makedirs(os.path.dirname(path), exist_ok=True)
    frame.to_csv(path, index=False)
    written.append(path)


def _best_row(dataset: str, optimizer: str, runs: Sequence[RunRecord], best: RunRecord) -> dict:
    return {
        'dataset': dataset, 'optimizer': optimizer, 'run_id': best.run_id, 'grid_index': best.grid_index,
        'seed': best.seed, 'runs_ok': len(runs), 'train_bacc': best.train_metrics.bacc,
        'test_bacc': best.test_metrics.bacc, 'test_sensitivity': best.test_metrics.sensitivity,
        'test_specificity': best.test_metrics.specificity,
    }


def _curve_frame(runs: Sequence[RunRecord]) -> pd.DataFrame:
    rows = [{'run_id': run.run_id, 'grid_index': run.grid_index, 'seed': run.seed, **curve.model_dump()}
            for run in runs for curve in run.curves]
    return pd.DataFrame(rows, columns=CURVE_COLUMNS)


def _decision_grid_rows(best: RunRecord, resolution: int) -> Optional[Tuple[pd.DataFrame, Optional[float]]]:
    if not best.run_dir or not os.path.isdir(best.run_dir):
        Logger().log('WARNING', f'[report] [grid] run directory of {best.run_id} is missing, no decision grid')
        return None
    stored = load_run(best.run_dir)
    if stored.geometry is None or stored.geometry.spec.input_dim != 2:
        return None
    train, _ = load_splits(stored.config)
    bounds = grid_bounds(train.features)
    grid = decision_grid(stored.geometry, bounds, resolution, stored.standardization)
    area = None
    if stored.config.dataset == 'two_moons':
        area = misclassified_area_fraction(grid, two_moons_ground_truth(bounds, resolution))
    return grid.to_frame(), area


def build_report(records: Iterable[RunRecord], out_dir: str, comparable_fields: Optional[Sequence[str]] = None,
                 resolution: int = 200) -> dict:
    """
    Write the report files under <out_dir>/report.

    Args:
        records (Iterable[RunRecord]): Stored runs; only runs with status ok are used.
        out_dir (str): Sweep output directory.
        comparable_fields (Sequence[str] | None): Config fields restricting a second GA vs GD
            comparison to configurations present under both optimizers.
        resolution (int): Decision grid resolution for 2D datasets.

    Returns:
        dict: The written files, the reported groups and the skipped ones.
    """
    records = list(records)
    report_dir = os.path.join(out_dir, 'report')
    groups = group_records(records)
    written: List[str] = []
    skipped = sorted({f'{record.dataset}/{record.optimizer}' for record in records} - {f'{d}/{o}' for d, o in groups})
    for name in skipped:
        Logger().log('WARNING', f'[report] [{name}] no successful runs, group skipped')

    best_rows, stats_rows, pairwise_rows, area_rows = [], [], [], []
    for (dataset, optimizer), runs in groups.items():
        best = best_run(runs)
        best_rows.append(_best_row(dataset, optimizer, runs, best))

        ga_runs = groups.get((dataset, Optimizer.GA.value), [])
        gd_runs = groups.get((dataset, Optimizer.GD.value), [])
        stats = sweep_stats([run.test_metrics.bacc for run in runs])
        p_comparable = float('nan')
        if comparable_fields:
            p_comparable = _p_value(*comparable_subset(ga_runs, gd_runs, comparable_fields))
        stats_rows.append({'dataset': dataset, 'optimizer': optimizer, **stats.model_dump(),
                           'p_value': _p_value(ga_runs, gd_runs), 'p_value_comparable': p_comparable})

        for (class_a, class_b), errors in pairwise_confusion(best.test_metrics.confusion).items():
            pairwise_rows.append({'dataset': dataset, 'optimizer': optimizer, 'run_id': best.run_id,
                                  'class_a': class_a, 'class_b': class_b, 'errors': errors})

        _write(_curve_frame(runs), os.path.join(report_dir, 'curves', f'{dataset}_{optimizer}.csv'), written)

        grid = _decision_grid_rows(best, resolution)
        if grid is not None:
            frame, area = grid
            _write(frame, os.path.join(report_dir, 'grids', f'{dataset}_{optimizer}.csv'), written)
            if area is not None:
                area_rows.append({'dataset': dataset, 'optimizer': optimizer, 'run_id': best.run_id, 'misclassified_area': area})
        Logger().log('INFO', f'[report] [{dataset}/{optimizer}] {len(runs)} runs, best test BAcc {best.test_metrics.bacc:.4f}')

    _write(pd.DataFrame(best_rows, columns=BEST_RUN_COLUMNS), os.path.join(report_dir, 'best_runs.csv'), written)
    _write(pd.DataFrame(stats_rows, columns=STATS_COLUMNS), os.path.join(report_dir, 'sweep_stats.csv'), written)
    _write(pd.DataFrame(pairwise_rows, columns=PAIRWISE_COLUMNS), os.path.join(report_dir, 'pairwise_confusion.csv'), written)
    if area_rows:
        _write(pd.DataFrame(area_rows, columns=AREA_COLUMNS), os.path.join(report_dir, 'boundary_areas.csv'), written)

    return {
        'files': written,
        'groups': [{'dataset': dataset, 'optimizer': optimizer, 'runs': len(runs)} for (dataset, optimizer), runs in groups.items()],
        'skipped': skipped,
        'best': [{key: (None if isinstance(value, float) and math.isnan(value) else value) for key, value in row.items()}
                 for row in best_rows],
    }
