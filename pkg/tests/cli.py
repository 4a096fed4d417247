import json
import os

import pandas as pd

from src.app import main

GD_CONFIG = """
name=cli_gd
optimizer=GD
n_train=60
n_test=40
hidden_widths=[4]
mapping=inverse
learning_rate=0.05
epochs=3
"""


def write_config(tmp_path, text: str, name: str = 'experiment.conf') -> str:
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    output = capsys.readouterr().out
    return code, (json.loads(output) if output.strip().startswith('{') else output)


def test_gen_data(tmp_path, capsys):
    code, response = run(capsys, 'gen-data', '--out-dir', str(tmp_path), '--n-train', '40', '--n-test', '20', '--seed', '2')
    assert code == 0
    assert response['success'] == True
    assert sum(response['data']['train']['class_counts']) == 40
    assert len(pd.read_csv(tmp_path / 'two_moons_test.csv')) == 20

    code, response = run(capsys, 'gen-data', '--out-dir', str(tmp_path), '--noise', '-1')
    assert code == 1
    assert response['success'] == False


def test_train(tmp_path, capsys):
    config = write_config(tmp_path, GD_CONFIG)
    out_dir = str(tmp_path / 'out')

    code, response = run(capsys, 'train', '--config', config, '--out-dir', out_dir, '--seed', '4')
    assert code == 0
    assert response['data']['status'] == 'ok'
    assert response['data']['seed'] == 4
    assert response['data']['epochs_recorded'] == 3
    assert response['data']['parameter_count'] == 3 * (2 + 4 + 4 + 2)
    assert response['data']['classical_parameter_count'] > 0
    assert os.path.isdir(response['data']['run_dir'])

    code, again = run(capsys, 'train', '--config', config, '--out-dir', out_dir, '--seed', '4')
    assert code == 0
    assert again['data']['run_id'] == response['data']['run_id']
    assert again['data']['test_metrics'] == response['data']['test_metrics']


def test_train_rejects_bad_configurations(tmp_path, capsys):
    out_dir = str(tmp_path / 'out')
    singular = write_config(tmp_path, GD_CONFIG + 'init=singularity\n', 'singular.conf')
    code, response = run(capsys, 'train', '--config', singular, '--out-dir', out_dir)
    assert code == 1
    assert response['status'] == 'error'
    assert response['error_type'] == 'ValidationError'

    swept = write_config(tmp_path, GD_CONFIG + 'sweep_learning_rate=[0.01, 0.1]\n', 'swept.conf')
    code, response = run(capsys, 'train', '--config', swept, '--out-dir', out_dir)
    assert code == 1
    assert 'sweep' in response['message']

    code, response = run(capsys, 'train', '--preset', 'nope', '--out-dir', out_dir)
    assert code == 1
    assert "Unknown preset 'nope'" in response['message']

    code, _ = run(capsys, 'train', '--config', str(tmp_path / 'missing.conf'))
    assert code == 1


def test_sweep_report_and_grid(tmp_path, capsys):
    config = write_config(tmp_path, GD_CONFIG + 'sweep_learning_rate=[0.02, 0.05]\nseeds=[0]\n')
    out_dir = str(tmp_path / 'out')

    code, response = run(capsys, 'sweep', '--config', config, '--out-dir', out_dir, '--workers', '1')
    assert code == 0
    assert response['data']['runs'] == 2
    assert response['data']['status'] == {'ok': 2}
    assert response['data']['incomplete'] == []

    code, response = run(capsys, 'report', '--out-dir', out_dir, '--resolution', '6')
    assert code == 0
    assert response['data']['groups'] == [{'dataset': 'two_moons', 'optimizer': 'GD', 'runs': 2}]
    assert os.path.join(out_dir, 'report', 'sweep_stats.csv') in response['data']['files']

    run_id = response['data']['best'][0]['run_id']
    code, response = run(capsys, 'grid', '--out-dir', out_dir, '--run-id', run_id, '--resolution', '5')
    assert code == 0
    assert len(pd.read_csv(response['data']['path'])) == 25
    assert 0.0 <= response['data']['misclassified_area'] <= 1.0

    code, _ = run(capsys, 'grid', '--out-dir', out_dir, '--run-id', 'unknown')
    assert code == 1

    code, _ = run(capsys, 'report', '--out-dir', out_dir, '--optimizer', 'GA')
    assert code == 1


def test_sweep_refuses_an_oversize_grid(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv('DEBINN_MAX_SWEEP_RUNS', '3')
    config = write_config(tmp_path, GD_CONFIG + 'sweep_learning_rate=[0.01, 0.1]\nsweep_epochs=[1, 2]\n')
    code, response = run(capsys, 'sweep', '--config', config, '--out-dir', str(tmp_path / 'out'))
    assert code == 1
    assert response['detail'] == {'count': 4, 'limit': 3}


def test_gradcheck(tmp_path, capsys):
    config = write_config(tmp_path, GD_CONFIG)
    code, response = run(capsys, 'gradcheck', '--config', config, '--samples', '8')
    assert code == 0
    assert response['data']['max_relative_error'] <= 1e-4
    assert response['data']['derivative_mode'] == 'exact'

    code, response = run(capsys, 'gradcheck', '--config', config, '--samples', '8', '--tolerance', '-1')
    assert code == 2
    assert response['success'] == False


def test_gradcheck_with_genetic_configurations(tmp_path, capsys):
    code, response = run(capsys, 'gradcheck', '--preset', 'two_moons_ga')
    assert code == 1
    assert 'GD-compatible init' in response['message']

    genetic = write_config(tmp_path, GD_CONFIG.replace('optimizer=GD', 'optimizer=GA')
                           .replace('learning_rate=0.05\nepochs=3\n', 'population=6\ngenerations=2\n'))
    code, response = run(capsys, 'gradcheck', '--config', genetic, '--samples', '8')
    assert code == 0
    assert response['data']['max_relative_error'] <= 1e-4


def test_unknown_command(capsys):
    assert main(['nope']) == 1
