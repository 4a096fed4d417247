import os

import click

from src.cli.common import EXIT_OK, EXIT_USAGE, emit, emit_bad
from src.data.datasets import class_counts, export_csv, gen_two_moons
from src.schemas.responses import SuccessResponse
from src.utils.config import Config
from src.utils.errors import InvalidArgumentError
from src.utils.logger import Logger


@click.command('gen-data')
@click.option('--out-dir', default=None, help='Target directory, Config.data_dir by default.')
@click.option('--seed', type=int, default=0, show_default=True, help='Generator seed.')
@click.option('--n-train', type=int, default=800, show_default=True)
@click.option('--n-test', type=int, default=200, show_default=True)
@click.option('--noise', type=float, default=0.1, show_default=True, help='Gaussian noise standard deviation.')
def gen_data(out_dir, seed, n_train, n_test, noise):
    """
    Generate the two-moons train and test splits as CSV files.

    **Arguments**
        - out_dir: Target directory, two_moons_train.csv and two_moons_test.csv are written there.
        - seed, n_train, n_test, noise: Generator parameters.
    **Responses**
        - 0: Paths and per-class counts of both splits.
        - 1: Invalid generator parameters.
    **Logs Levels**
        - INFO: Start and end of the generation.
        - ERROR: Invalid parameters.
    """
    context = '[gen-data]'
    out_dir = out_dir or Config().data_dir
    Logger().log('INFO', f'{context} generating two-moons ({n_train}/{n_test}, noise {noise}, seed {seed})')
    try:
        train, test = gen_two_moons(n_train, n_test, noise, seed)
    except InvalidArgumentError as error:
        return emit_bad(context, str(error), EXIT_USAGE)

    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for split in (train, test):
        path = os.path.join(out_dir, f'two_moons_{split.split}.csv')
        export_csv(split, path)
        paths[split.split] = {'path': path, 'class_counts': class_counts(split).tolist()}

    Logger().log('INFO', f'{context} [{EXIT_OK}] splits written to {out_dir}')
    return emit(SuccessResponse(message='Two-moons splits generated', data=paths))
