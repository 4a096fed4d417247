"""
Hyperparameter sweeps: every grid point crossed with every seed, stored in the run database.
"""
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import List, Optional, Tuple

from src.database.connection import DatabaseConnection
from src.database.repository.runs import RunsRepository
from src.experiments.runner import run_id_for, run_single
from src.schemas.configs import ExperimentConfig
from src.schemas.records import RunRecord
from src.utils.config import Config
from src.utils.errors import RunFailedError, SweepTooLargeError
from src.utils.logger import Logger


def _sweep_worker(config: ExperimentConfig, seed: int, out_dir: str, grid_index: int) -> dict:
    record = run_single(config, seed, out_dir, repository=None, grid_index=grid_index)
    return record.model_dump(mode='json')


def plan_sweep(config: ExperimentConfig, limit: Optional[int] = None) -> List[Tuple[int, ExperimentConfig, int]]:
    """
    Expand a configuration into (grid_index, point, seed) jobs.

    Raises:
        SweepTooLargeError: If the grid times the seeds exceeds the limit.
        pydantic.ValidationError: If any grid point is invalid; nothing runs in that case.
    """
    limit = Config().max_sweep_runs if limit is None else limit
    count = config.grid_size()
    if count > limit:
        raise SweepTooLargeError(count, limit)
    points = config.grid()
    return [(index, point, seed) for index, point in enumerate(points) for seed in config.seeds]


def run_sweep(config: ExperimentConfig, out_dir: str, workers: int = 1, limit: Optional[int] = None) -> List[RunRecord]:
    """
    Run a sweep, skipping the runs already stored under out_dir.

    Args:
        config (ExperimentConfig): Base configuration with its sweep axes and seeds.
        out_dir (str): Directory holding the run database and the run directories.
        workers (int): Worker processes; 1 runs everything in this process.
        limit (int | None): Maximum number of runs, Config.max_sweep_runs by default.

    Returns:
        list[RunRecord]: Every run of the grid, stored or new, in (grid_index, seed) order.

    Raises:
        RunFailedError: If worker processes crashed; the completed runs are stored first and the
            exception carries them in `records`.
    """
    jobs = plan_sweep(config, limit)
    DatabaseConnection().initialize(out_dir)
    repository = RunsRepository(DatabaseConnection().get_db())

    done = repository.get_run_ids()
    pending = []
    for job in jobs:
        run_id = run_id_for(job[1].snapshot(), job[2])
        if run_id not in done:
            done.add(run_id)
            pending.append(job)
    Logger().log('INFO', f'[sweep] [{config.name}] {len(jobs)} runs in grid, {len(jobs) - len(pending)} already stored, {len(pending)} to run')

    incomplete = []
    if workers <= 1:
        for index, point, seed in pending:
            run_single(point, seed, out_dir, repository, grid_index=index)
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_sweep_worker, point, seed, out_dir, index): (index, point, seed) for index, point, seed in pending}
            for future in as_completed(futures):
                index, point, seed = futures[future]
                try:
                    record = RunRecord.model_validate(future.result())
                except Exception as error:
                    run_id = run_id_for(point.snapshot(), seed)
                    Logger().log('ERROR', f'[sweep] [{config.name}] [grid={index}] [seed={seed}] worker for {run_id} crashed: {type(error).__name__}: {error}')
                    incomplete.append(run_id)
                    continue
                repository.create(record)
                Logger().log('DEBUG', f'[sweep] [{config.name}] stored {record.run_id} ({record.status.value})')

    wanted = {run_id_for(point.snapshot(), seed) for _, point, seed in jobs}
    records = [repository.get_run(run_id) for run_id in wanted]
    records = sorted((record for record in records if record is not None), key=lambda record: (record.grid_index, record.seed))
    failures = sum(1 for record in records if record.status.value != 'ok')
    Logger().log('INFO', f'[sweep] [{config.name}] finished with {len(records)} runs, {failures} not ok')
    if incomplete:
        raise RunFailedError(f'{len(incomplete)} sweep jobs crashed and were not stored, a rerun resumes them', incomplete, records)
    return records
