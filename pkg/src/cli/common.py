import click
from pydantic import ValidationError

from src.experiments.presets import DATASETS, dataset_fields, preset
from src.schemas.configs import ExperimentConfig, load_experiment_config
from src.schemas.responses import BadResponse, CommandResponse, ValidationErrorResponse
from src.schemas.types import Optimizer
from src.utils.config import Config
from src.utils.logger import Logger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUN_FAILURE = 2

DATASET_KEYS = ('train_path', 'test_path', 'label_column', 'class_names')

config_option = click.option('--config', 'config_path', type=click.Path(dir_okay=False), default=None,
                             help='Flat key=value experiment config file.')
preset_option = click.option('--preset', 'preset_name', default=None, help='Named preset applied before the config file.')
seed_option = click.option('--seed', type=int, default=None, help='Seed of the run (replaces the configured seeds).')
out_dir_option = click.option('--out-dir', default=None, help='Output directory, Config.out_dir by default.')
optimizer_option = click.option('--optimizer', type=click.Choice([item.value for item in Optimizer], case_sensitive=False),
                                default=None, help='GA or GD.')
dataset_option = click.option('--dataset', type=click.Choice(sorted(DATASETS)), default=None, help='Dataset selector.')


def emit(response: CommandResponse, exit_code: int = EXIT_OK) -> int:
    click.echo(response.model_dump_json(indent=2))
    return exit_code


def emit_validation_error(context: str, error: ValidationError) -> int:
    Logger().log('ERROR', f'{context} [{EXIT_USAGE}] invalid configuration: {error.error_count()} errors')
    return emit(ValidationErrorResponse(details=error.errors()), EXIT_USAGE)


def emit_bad(context: str, message: str, exit_code: int = EXIT_USAGE, detail=None) -> int:
    Logger().log('ERROR', f'{context} [{exit_code}] {message}')
    return emit(BadResponse(message=message, detail=detail or {}), exit_code)


def resolve_out_dir(out_dir) -> str:
    return out_dir or Config().out_dir


def resolve_config(config_path=None, preset_name=None, dataset=None, optimizer=None, seed=None) -> ExperimentConfig:
    """
    Merge a preset, a config file and command line flags, in that order of precedence.

    Raises:
        InvalidConfigurationError: For an unknown preset or dataset, or a missing config file.
        pydantic.ValidationError: If the merged values do not validate.
    """
    base = preset(preset_name) if preset_name else {}
    overrides = {}
    if dataset:
        base = {key: value for key, value in base.items() if key not in DATASET_KEYS}
        overrides.update(dataset_fields(dataset))
    if optimizer:
        overrides['optimizer'] = optimizer.upper()
    if seed is not None:
        overrides['seeds'] = [seed]
    return load_experiment_config(config_path, base, overrides)
