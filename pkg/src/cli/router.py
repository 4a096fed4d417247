from src.cli.data import gen_data
from src.cli.grid import grid
from src.cli.sweep import report, sweep
from src.cli.train import gradcheck, train

commands = [gen_data, train, sweep, report, grid, gradcheck]
