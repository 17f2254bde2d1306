"""
Management command tests
"""
import json
from io import StringIO

import pandas as pd
import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from apps.experiments.services.sweep_service import SWEEP_COLUMNS

SMALL_LAKE = {'scenario': 'lake_at_rest', 'N': 3, 'p': 2, 'steps': 5, 'T': 0.01}


@pytest.fixture
def config_file(tmp_path):
    def write(data, name='run.json'):
        path = tmp_path / name
        path.write_text(json.dumps(data))
        return str(path)
    return write


def test_run(output_root, config_file, tmp_path):
    out = StringIO()
    call_command('run', config_file(SMALL_LAKE), '--output-dir', str(tmp_path / 'lake'), stdout=out)
    assert 'steps=5' in out.getvalue()
    assert 'max_error=' in out.getvalue()
    assert (tmp_path / 'lake' / 'summary.json').exists()


def test_run_yaml_default_output(output_root, tmp_path):
    path = tmp_path / 'run.yaml'
    path.write_text('scenario: smooth_perturbation\nN: 3\np: 1\nsteps: 2\nT: 0.002\n')
    call_command('run', str(path), stdout=StringIO())
    assert (output_root / 'smooth_perturbation' / 'diagnostics.csv').exists()


@pytest.mark.parametrize('data', [
    dict(SMALL_LAKE, flux='roe'),
    dict(SMALL_LAKE, p=99),
    {'scenario': 'moving_water', 'm': 3.0, 'E': 15.0, 'steps': 1},
])
def test_configuration_errors_exit_with_one(output_root, config_file, data):
    with pytest.raises(CommandError) as excinfo:
        call_command('run', config_file(data), stdout=StringIO())
    assert excinfo.value.returncode == 1


def test_missing_config_exits_with_one(output_root, tmp_path):
    with pytest.raises(CommandError) as excinfo:
        call_command('run', str(tmp_path / 'absent.json'), stdout=StringIO())
    assert excinfo.value.returncode == 1


def test_sweep(output_root, config_file, tmp_path):
    out = StringIO()
    call_command('sweep', config_file(SMALL_LAKE), '--a1', '0:1:1', '--a2', 'tied',
                 '--output-dir', str(tmp_path / 'sweep'), stdout=out)
    frame = pd.read_csv(tmp_path / 'sweep' / 'sweep.csv')
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame['a1'].tolist() == [0.0, 1.0]
    assert '2 points, 0 failed' in out.getvalue()


def test_sweep_bad_range(output_root, config_file):
    with pytest.raises(CommandError) as excinfo:
        call_command('sweep', config_file(SMALL_LAKE), '--a1', '1:0:2', stdout=StringIO())
    assert excinfo.value.returncode == 1


def test_flux_study(output_root, config_file, tmp_path):
    data = {'scenario': 'smooth_perturbation', 'steps': 2, 'T': 0.002}
    call_command('flux_study', config_file(data), '--degrees', '1:1:2', '--dofs', '6',
                 '--fluxes', 'ec,kinetic', '--output-dir', str(tmp_path / 'study'), stdout=StringIO())
    frame = pd.read_csv(tmp_path / 'study' / 'flux_study.csv')
    assert frame['flux'].tolist() == ['ec', 'kinetic', 'ec', 'kinetic']
    assert frame['N'].tolist() == [3, 3, 2, 2]


def test_flux_study_uneven_split(output_root, config_file):
    with pytest.raises(CommandError) as excinfo:
        call_command('flux_study', config_file({'scenario': 'smooth_perturbation'}),
                     '--degrees', '3', '--dofs', '10', stdout=StringIO())
    assert excinfo.value.returncode == 1


def test_verify_quick(output_root, config_file):
    out = StringIO()
    call_command('verify', config_file(dict(SMALL_LAKE, seed=11)), '--quick', stdout=out)
    lines = out.getvalue().splitlines()
    assert lines[0] == 'seed=11'
    assert lines[-1].endswith('checks passed')
    assert not any(line.startswith('FAIL') for line in lines)


def test_verify_seed_flag_wins(output_root, config_file):
    out = StringIO()
    call_command('verify', config_file(dict(SMALL_LAKE, seed=11)), '--seed', '5', '--quick', stdout=out)
    assert out.getvalue().startswith('seed=5\n')
