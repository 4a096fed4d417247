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
from src.data.datasets import require_all_classes, standardize
from src.database.connection import DatabaseConnection
from src.database.repository.runs import RunsRepository
from src.experiments.runner import class_weights_for, ensure_ok, load_run, load_splits, run_id_for, run_single
from src.network.geometry import classical_parameter_count, init_geometry, parameter_count
from src.schemas.responses import RunResponse, RunSummary, SuccessResponse
from src.schemas.types import DerivativeMode, InitScheme, Optimizer
from src.trainers.backprop import finite_difference_oracle
from src.utils.errors import RunFailedError
from src.utils.logger import Logger


@click.command('train')
@config_option
@preset_option
@seed_option
@out_dir_option
@optimizer_option
@dataset_option
@click.option('--workers', type=int, default=1, show_default=True, help='Fitness evaluation threads (GA only).')
def train(config_path, preset_name, seed, out_dir, optimizer, dataset, workers):
    """
    Train and evaluate a single run.

    **Arguments**
        - config, preset, dataset, optimizer: Select the experiment; flags override the config file.
        - seed: Seed of the run, the first configured seed otherwise.
        - out_dir: The run is stored under <out_dir>/runs/<run_id> and in the run database.
    **Responses**
        - 0: The run record summary with the spatial and classical parameter counts.
        - 1: Invalid configuration, or a configuration with sweep axes.
        - 2: The run diverged or failed.
    **Logs Levels**
        - INFO: Start and end of the run.
        - ERROR: Invalid configuration, failed or diverged run.
    """
    context = '[train]'
    try:
        config = resolve_config(config_path, preset_name, dataset, optimizer, seed)
    except ValidationError as error:
        return emit_validation_error(context, error)
    except ValueError as error:
        return emit_bad(context, str(error))
    if config.sweep:
        return emit_bad(context, f'train runs a single configuration, use sweep for the axes {sorted(config.sweep)}')

    out_dir = resolve_out_dir(out_dir)
    DatabaseConnection().initialize(out_dir)
    repository = RunsRepository(DatabaseConnection().get_db())
    run_seed = config.seeds[0]
    existing = repository.get_run_ids()
    Logger().log('INFO', f'{context} [{config.optimizer.value}] {config.name} on {config.dataset}, seed {run_seed}')

    run_id = run_id_for(config.snapshot(), run_seed)
    if run_id in existing:
        record = repository.get_run(run_id)
        Logger().log('INFO', f'{context} run {run_id} already stored, not retrained')
    else:
        record = run_single(config, run_seed, out_dir, repository, workers=workers)

    summary = RunSummary(**record.model_dump(exclude={'curves'}), epochs_recorded=len(record.curves))
    try:
        ensure_ok(record)
    except RunFailedError as error:
        return emit_bad(context, str(error), EXIT_RUN_FAILURE, summary.model_dump(mode='json'))

    stored = load_run(record.run_dir)
    if stored.geometry is not None:
        summary.parameter_count = parameter_count(stored.geometry.spec)
        summary.classical_parameter_count = classical_parameter_count(stored.geometry.spec)
    Logger().log('INFO', f'{context} [{EXIT_OK}] run {record.run_id} test BAcc {record.test_metrics.bacc:.4f}')
    return emit(RunResponse(message='Run completed', data=summary))


@click.command('gradcheck')
@config_option
@preset_option
@seed_option
@dataset_option
@click.option('--eps', type=float, default=1e-5, show_default=True, help='Central difference step.')
@click.option('--tolerance', type=float, default=1e-4, show_default=True, help='Maximum accepted relative error.')
@click.option('--samples', type=int, default=32, show_default=True, help='Training samples used by the check.')
def gradcheck(config_path, preset_name, seed, dataset, eps, tolerance, samples):
    """
    Compare analytic coordinate gradients with central finite differences on a freshly initialized network.

    **Arguments**
        - config, preset, dataset: Select the network and data. GA configurations are accepted; only
          their network and data are used.
        - seed: Initialization seed.
        - eps: Finite difference step.
        - tolerance: Maximum relative error accepted.
    **Responses**
        - 0: The oracle report, within tolerance.
        - 1: Invalid configuration, an init without a spatial gradient (Singularity), or the Gaussian
          linear surrogate which has no matching loss.
        - 2: The maximum relative error exceeds the tolerance.
    **Logs Levels**
        - INFO: Start and result of the check.
        - ERROR: Invalid configuration or tolerance exceeded.
    """
    context = '[gradcheck]'
    try:
        config = resolve_config(config_path, preset_name, dataset, seed=seed)
    except ValidationError as error:
        return emit_validation_error(context, error)
    except ValueError as error:
        return emit_bad(context, str(error))
    if config.init == InitScheme.SINGULARITY:
        return emit_bad(context, 'gradcheck requires a GD-compatible init (random or onion), the configuration uses singularity')

    mode = config.derivative_mode or DerivativeMode.EXACT
    try:
        raw_train, _ = load_splits(config)
        counts = require_all_classes(raw_train)
        train, _, _ = standardize(raw_train)
        subset = train.subset(slice(0, max(1, samples)))
        spec = config.network_spec(train.n_features, train.class_count)
        weights = class_weights_for(config, counts)
        geometry = init_geometry(spec, rng_seed=config.seeds[0], trainer=Optimizer.GD)
        Logger().log('INFO', f'{context} {parameter_count(spec)} spatial parameters, {subset.n_samples} samples, mode {mode.value}')
        report = finite_difference_oracle(geometry, subset.features, subset.labels, weights, eps, mode, config.groupnorm_backward)
    except ValueError as error:
        return emit_bad(context, str(error))

    data = {**report._asdict(), 'tolerance': tolerance, 'derivative_mode': mode.value,
            'groupnorm_backward': config.groupnorm_backward.value}
    if not report.max_relative_error <= tolerance:
        return emit_bad(context, f'Max relative error {report.max_relative_error:.3e} exceeds {tolerance:.1e}', EXIT_RUN_FAILURE, data)
    Logger().log('INFO', f'{context} [{EXIT_OK}] max relative error {report.max_relative_error:.3e}')
    return emit(SuccessResponse(message='Gradients match finite differences', data=data))
