import json
import os
from concurrent.futures import ThreadPoolExecutor

import pandas as pd
import pytest

from src.database.connection import DatabaseConnection
from src.database.repository.runs import RunsRepository
from src.experiments import runner, sweep
from src.experiments.report import best_run, build_report, comparable_subset, group_records
from src.experiments.runner import ensure_ok, load_run, replay_run, run_dir_for, run_id_for, run_single
from src.experiments.sweep import plan_sweep, run_sweep
from src.schemas.configs import ExperimentConfig
from src.schemas.records import ClassificationMetrics, RunRecord
from src.schemas.types import RunStatus
from src.utils.errors import DivergedError, RunFailedError, SweepTooLargeError

SMALL_DATA = {'n_train': 60, 'n_test': 40, 'noise_std': 0.15}


def gd_config(**values) -> ExperimentConfig:
    return ExperimentConfig(**{**SMALL_DATA, 'optimizer': 'GD', 'hidden_widths': [4], 'epochs': 4,
                               'learning_rate': 0.05, 'mapping': 'inverse', **values})


def ga_config(**values) -> ExperimentConfig:
    return ExperimentConfig(**{**SMALL_DATA, 'optimizer': 'GA', 'hidden_widths': [3], 'population': 10,
                               'generations': 2, **values})


def test_run_id_is_stable():
    snapshot = gd_config().snapshot()
    assert run_id_for(snapshot, 0) == run_id_for(gd_config().snapshot(), 0)
    assert len(run_id_for(snapshot, 0)) == 16
    assert run_id_for(snapshot, 0) != run_id_for(snapshot, 1)
    assert run_id_for(snapshot, 0) != run_id_for(gd_config(learning_rate=0.2).snapshot(), 0)


def test_run_single_writes_the_run_directory(tmp_path):
    record = run_single(gd_config(), 3, str(tmp_path))

    assert ensure_ok(record) is record
    assert record.status == RunStatus.OK
    assert record.run_dir == run_dir_for(str(tmp_path), record.run_id)
    assert 0.0 <= record.test_metrics.bacc <= 1.0
    assert len(record.curves) == 4
    for name in ('config.json', 'geometry.csv', 'standardization.csv', 'metrics.csv', 'curves.csv', 'confusion.csv'):
        assert os.path.exists(os.path.join(record.run_dir, name))

    with open(os.path.join(record.run_dir, 'config.json')) as handle:
        stored = json.load(handle)
    assert stored['seed'] == 3 and stored['status'] == 'ok'
    assert pd.read_csv(os.path.join(record.run_dir, 'metrics.csv'))['split'].tolist() == ['train', 'test']
    assert len(pd.read_csv(os.path.join(record.run_dir, 'curves.csv'))) == 4

    loaded = load_run(record.run_dir)
    assert loaded.run_id == record.run_id
    assert loaded.geometry.spec.hidden_widths == [4]


def test_replay_reproduces_the_metrics(tmp_path):
    for config in (gd_config(), ga_config()):
        record = run_single(config, 1, str(tmp_path))
        replayed = replay_run(record.run_dir).record
        assert replayed.run_id == record.run_id
        assert replayed.test_metrics == record.test_metrics
        assert [row.loss for row in replayed.curves] == [row.loss for row in record.curves]


def test_trainer_errors_become_a_status(tmp_path, monkeypatch):
    def diverging(*args, **kwargs):
        raise DivergedError(2, float('inf'), [])

    monkeypatch.setattr(runner, 'train_gd', diverging)
    diverged = run_single(gd_config(), 0, str(tmp_path))
    assert diverged.status == RunStatus.DIVERGED
    assert diverged.test_metrics is None
    assert 'epoch 2' in diverged.error
    assert not os.path.exists(os.path.join(diverged.run_dir, 'confusion.csv'))
    with pytest.raises(RunFailedError) as error:
        ensure_ok(diverged)
    assert error.value.run_ids == [diverged.run_id]

    missing = ExperimentConfig(dataset='custom', train_path=str(tmp_path / 'nope.csv'), test_path=str(tmp_path / 'nope.csv'))
    failed = run_single(missing, 0, str(tmp_path))
    assert failed.status == RunStatus.FAILED
    assert failed.error.startswith('DataParseError')


def test_plan_sweep():
    config = gd_config(sweep={'learning_rate': [0.01, 0.1], 'hidden_widths': [[3], [4]]}, seeds=[0, 1])
    jobs = plan_sweep(config)
    assert len(jobs) == 8
    assert [(index, seed) for index, _, seed in jobs[:3]] == [(0, 0), (0, 1), (1, 0)]
    assert jobs[2][1].learning_rate == 0.01 and jobs[2][1].hidden_widths == [4]

    with pytest.raises(SweepTooLargeError) as error:
        plan_sweep(config, limit=7)
    assert error.value.count == 8


def test_run_sweep_and_resume(tmp_path, monkeypatch):
    config = gd_config(sweep={'learning_rate': [0.02, 0.05], 'hidden_widths': [[3], [4]]})
    records = run_sweep(config, str(tmp_path))
    assert len(records) == 4
    assert [record.grid_index for record in records] == [0, 1, 2, 3]
    assert all(record.status == RunStatus.OK for record in records)

    repository = RunsRepository(DatabaseConnection().get_db())
    assert repository.get_run_ids() == {record.run_id for record in records}
    assert len(repository.get_run(records[0].run_id).curves) == 4

    executed = []
    original = sweep.run_single

    def counting(point, seed, out_dir, repository=None, grid_index=0, workers=1):
        executed.append((grid_index, seed))
        return original(point, seed, out_dir, repository, grid_index, workers)

    monkeypatch.setattr(sweep, 'run_single', counting)
    resumed = run_sweep(config, str(tmp_path))
    assert executed == []
    assert [record.run_id for record in resumed] == [record.run_id for record in records]

    extended = run_sweep(gd_config(sweep={'learning_rate': [0.02, 0.05], 'hidden_widths': [[3], [4]]}, seeds=[0, 1]), str(tmp_path))
    assert sorted(executed) == [(0, 1), (1, 1), (2, 1), (3, 1)]
    assert len(extended) == 8


def test_parallel_sweep_keeps_the_runs_of_finished_workers(tmp_path, monkeypatch):
    original = sweep._sweep_worker

    def flaky(config, seed, out_dir, grid_index):
        if grid_index == 1:
            raise RuntimeError('worker lost')
        return original(config, seed, out_dir, grid_index)

    monkeypatch.setattr(sweep, 'ProcessPoolExecutor', ThreadPoolExecutor)
    monkeypatch.setattr(sweep, '_sweep_worker', flaky)
    config = gd_config(sweep={'learning_rate': [0.02, 0.05, 0.1]})
    with pytest.raises(RunFailedError) as error:
        run_sweep(config, str(tmp_path), workers=2)
    crashed = run_id_for(config.grid()[1].snapshot(), 0)
    assert error.value.run_ids == [crashed]
    assert [record.grid_index for record in error.value.records] == [0, 2]
    assert crashed not in RunsRepository(DatabaseConnection().get_db()).get_run_ids()

    monkeypatch.setattr(sweep, '_sweep_worker', original)
    resumed = run_sweep(config, str(tmp_path), workers=2)
    assert [record.grid_index for record in resumed] == [0, 1, 2]


def fake_record(run_id: str, optimizer: str, bacc: float, grid_index: int = 0, seed: int = 0, **config) -> RunRecord:
    metrics = ClassificationMetrics(bacc=bacc, sensitivity=bacc, specificity=bacc, confusion=[[5, 1], [2, 4]])
    return RunRecord(run_id=run_id, grid_index=grid_index, dataset='toy', optimizer=optimizer, seed=seed,
                     config=config, train_metrics=metrics, test_metrics=metrics)


def test_best_run_and_grouping():
    runs = [fake_record('a', 'GA', 0.9, 2), fake_record('b', 'GA', 0.9, 1, 4), fake_record('c', 'GA', 0.9, 1, 2),
            fake_record('d', 'GA', 0.7)]
    assert best_run(runs).run_id == 'c'

    diverged = RunRecord(run_id='e', dataset='toy', optimizer='GD', seed=0, config={}, status=RunStatus.DIVERGED)
    groups = group_records(runs + [diverged])
    assert list(groups) == [('toy', 'GA')]
    assert [run.run_id for run in groups[('toy', 'GA')]] == ['d', 'c', 'b', 'a']

    ga = [fake_record('g1', 'GA', 0.8, hidden_widths=[8]), fake_record('g2', 'GA', 0.8, hidden_widths=[16])]
    gd = [fake_record('d1', 'GD', 0.8, hidden_widths=[16])]
    shared_ga, shared_gd = comparable_subset(ga, gd, ['hidden_widths'])
    assert [run.run_id for run in shared_ga] == ['g2'] and len(shared_gd) == 1


def test_build_report(tmp_path):
    out_dir = str(tmp_path)
    ga_records = run_sweep(ga_config(sweep={'mapping': ['gaussian', 'inverse']}, seeds=[0, 1]), out_dir)
    gd_records = run_sweep(gd_config(sweep={'learning_rate': [0.02, 0.05]}), out_dir)
    diverged = RunRecord(run_id='lost', dataset='other', optimizer='GD', seed=0, config={}, status=RunStatus.DIVERGED)

    summary = build_report(ga_records + gd_records + [diverged], out_dir, comparable_fields=['hidden_widths'], resolution=8)
    report_dir = os.path.join(out_dir, 'report')
    assert summary['skipped'] == ['other/GD']
    assert [group['runs'] for group in summary['groups']] == [4, 2]

    best = pd.read_csv(os.path.join(report_dir, 'best_runs.csv'))
    assert best['optimizer'].tolist() == ['GA', 'GD']

    stats = pd.read_csv(os.path.join(report_dir, 'sweep_stats.csv'))
    assert stats['p_value'].notna().all()
    assert stats['p_value_comparable'].isna().all()
    assert stats['count'].tolist() == [4, 2]

    curves = pd.read_csv(os.path.join(report_dir, 'curves', 'two_moons_GD.csv'))
    assert len(curves) == 2 * 4
    assert len(pd.read_csv(os.path.join(report_dir, 'curves', 'two_moons_GA.csv'))) == 4 * 3

    grid = pd.read_csv(os.path.join(report_dir, 'grids', 'two_moons_GA.csv'))
    assert len(grid) == 64
    areas = pd.read_csv(os.path.join(report_dir, 'boundary_areas.csv'))
    assert areas['misclassified_area'].between(0.0, 1.0).all()
    assert len(pd.read_csv(os.path.join(report_dir, 'pairwise_confusion.csv'))) == 2
