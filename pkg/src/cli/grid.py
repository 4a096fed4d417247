import os

import click

from src.cli.common import EXIT_OK, emit, emit_bad, out_dir_option, resolve_out_dir
from src.evaluation.boundaries import decision_grid, grid_bounds, misclassified_area_fraction, two_moons_ground_truth
from src.experiments.runner import load_run, load_splits, run_dir_for
from src.schemas.responses import SuccessResponse
from src.utils.logger import Logger


@click.command('grid')
@out_dir_option
@click.option('--run-id', required=True, help='Stored run to evaluate.')
@click.option('--resolution', type=int, default=200, show_default=True, help='Cells per axis.')
def grid(out_dir, run_id, resolution):
    """
    Classify a lattice over the training data bounds with a stored 2D model.

    **Arguments**
        - out_dir: Directory holding runs/<run_id>.
        - run_id: The run to evaluate.
        - resolution: Cells per axis.
    **Responses**
        - 0: Path of decision_grid.csv, plus the misclassified area against the noise-free arcs for two-moons.
        - 1: Unknown run, run without a trained geometry, or a non-2D model.
    **Logs Levels**
        - INFO: Start and end of the grid evaluation.
        - ERROR: Unknown or unusable run.
    """
    context = f'[grid] [{run_id}]'
    run_dir = run_dir_for(resolve_out_dir(out_dir), run_id)
    try:
        stored = load_run(run_dir)
        if stored.geometry is None:
            return emit_bad(context, f'Run {run_id} has no trained geometry')
        train, _ = load_splits(stored.config)
        bounds = grid_bounds(train.features)
        cells = decision_grid(stored.geometry, bounds, resolution, stored.standardization)
    except ValueError as error:
        return emit_bad(context, str(error))

    path = os.path.join(run_dir, 'decision_grid.csv')
    cells.to_frame().to_csv(path, index=False)
    data = {'path': path, 'resolution': resolution, 'bounds': list(bounds)}
    if stored.config.dataset == 'two_moons':
        data['misclassified_area'] = misclassified_area_fraction(cells, two_moons_ground_truth(bounds, resolution))
    Logger().log('INFO', f'{context} [{EXIT_OK}] decision grid written to {path}')
    return emit(SuccessResponse(message='Decision grid written', data=data))
