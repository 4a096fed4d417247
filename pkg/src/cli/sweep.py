from collections import Counter

import click
from pydantic import ValidationError

from src.cli.common import (
    EXIT_OK,
    EXIT_RUN_FAILURE,
    config_option,
    dataset_option,
    emit,
    emit_bad,
    emit_validation_error,
    optimizer_option,
    out_dir_option,
    preset_option,
    resolve_config,
    resolve_out_dir,
    seed_option,
)
from src.database.connection import DatabaseConnection
from src.database.repository.runs import RunsRepository
from src.experiments.report import build_report
from src.experiments.sweep import run_sweep
from src.schemas.responses import SuccessResponse, SweepResponse, SweepSummary
from src.schemas.types import RunStatus
from src.utils.config import Config
from src.utils.errors import RunFailedError, SweepTooLargeError
from src.utils.logger import Logger


@click.command('sweep')
@config_option
@preset_option
@seed_option
@out_dir_option
@optimizer_option
@dataset_option
@click.option('--workers', type=int, default=None, help='Worker processes, Config.workers by default.')
def sweep(config_path, preset_name, seed, out_dir, optimizer, dataset, workers):
    """
    Run every grid point of the configured sweep axes for every seed.

    Runs already stored in <out_dir> are skipped, so an interrupted sweep resumes.

    **Arguments**
        - config, preset, dataset, optimizer: Select the experiment and its sweep axes.
        - seed: Runs a single seed instead of the configured seeds.
        - workers: Worker processes.
    **Responses**
        - 0: Run counts per status.
        - 1: Invalid configuration or grid point, or a grid above Config.max_sweep_runs.
        - 2: No run of the sweep succeeded, or worker processes crashed (the finished runs are stored).
    **Logs Levels**
        - INFO: Sweep size, progress and completion.
        - ERROR: Invalid configuration, oversize grid, failed runs.
    """
    context = '[sweep]'
    incomplete = []
    try:
        config = resolve_config(config_path, preset_name, dataset, optimizer, seed)
        records = run_sweep(config, resolve_out_dir(out_dir), workers or Config().workers)
    except RunFailedError as error:
        records, incomplete = error.records, error.run_ids
    except ValidationError as error:
        return emit_validation_error(context, error)
    except SweepTooLargeError as error:
        return emit_bad(context, str(error), detail={'count': error.count, 'limit': error.limit})
    except ValueError as error:
        return emit_bad(context, str(error))

    statuses = Counter(record.status.value for record in records)
    summary = SweepSummary(runs=len(records), status=dict(statuses), run_ids=[record.run_id for record in records],
                           incomplete=incomplete)
    if incomplete:
        return emit_bad(context, f'{len(incomplete)} sweep jobs crashed, rerun the sweep to resume them', EXIT_RUN_FAILURE,
                        summary.model_dump(mode='json'))
    if statuses.get(RunStatus.OK.value, 0) == 0:
        return emit_bad(context, 'No run of the sweep succeeded', EXIT_RUN_FAILURE, summary.model_dump(mode='json'))
    Logger().log('INFO', f'{context} [{EXIT_OK}] {len(records)} runs stored')
    return emit(SweepResponse(message='Sweep completed', data=summary))


@click.command('report')
@out_dir_option
@optimizer_option
@dataset_option
@click.option('--compare-on', default=None, help='Comma separated config fields for the comparable-configuration test.')
@click.option('--resolution', type=int, default=200, show_default=True, help='Decision grid resolution.')
def report(out_dir, optimizer, dataset, compare_on, resolution):
    """
    Build the report tables from the runs stored in <out_dir>.

    **Arguments**
        - out_dir: Sweep output directory holding the run database.
        - dataset, optimizer: Optional filters.
        - compare_on: Config fields restricting a second GA vs GD comparison to shared configurations.
    **Responses**
        - 0: The written files and the reported groups.
        - 1: No stored run matches.
    **Logs Levels**
        - INFO: Groups reported.
        - WARNING: Groups without a successful run.
        - ERROR: Nothing to report.
    """
    context = '[report]'
    out_dir = resolve_out_dir(out_dir)
    DatabaseConnection().initialize(out_dir)
    repository = RunsRepository(DatabaseConnection().get_db())
    records = repository.get_runs(dataset=dataset, optimizer=optimizer.upper() if optimizer else None)
    if not records:
        return emit_bad(context, f'No stored runs in {out_dir}')

    fields = [field.strip() for field in compare_on.split(',') if field.strip()] if compare_on else None
    summary = build_report(records, out_dir, fields, resolution)
    Logger().log('INFO', f'{context} [{EXIT_OK}] {len(summary["files"])} files written')
    return emit(SuccessResponse(message='Report written', data=summary))
