"""
Run service tests
"""
import json

import numpy as np
import pandas as pd
import pytest

from apps.experiments.config import parse_run_config
from apps.experiments.services.run_service import DIAGNOSTICS_COLUMNS, SOLUTION_COLUMNS, get_run_service
from apps.solver.exceptions import ConfigurationError

SMALL_LAKE = {'scenario': 'lake_at_rest', 'N': 4, 'p': 3, 'steps': 20, 'T': 0.02, 'a1': 0.5, 'a2': -1.0}


def test_lake_at_rest_stays_at_rest(output_root):
    outcome = get_run_service().execute(parse_run_config(SMALL_LAKE))
    assert outcome.metric_value() <= 1e-12
    assert len(outcome.diagnostics) == 21
    assert outcome.diagnostics['t'].iloc[-1] == 0.02
    mass = outcome.diagnostics['mass']
    assert np.max(np.abs(mass - mass.iloc[0])) <= 1e-12 * abs(mass.iloc[0])
    assert np.max(np.abs(outcome.diagnostics['entropy_rate'])) <= 1e-11


def test_outputs_are_written(output_root):
    summary = get_run_service().run(parse_run_config(SMALL_LAKE))
    directory = output_root / 'lake_at_rest'
    assert summary['output_dir'] == str(directory)

    solution = pd.read_csv(directory / 'solution.csv')
    assert list(solution.columns) == SOLUTION_COLUMNS
    assert len(solution) == 4 * 4
    diagnostics = pd.read_csv(directory / 'diagnostics.csv')
    assert list(diagnostics.columns) == DIAGNOSTICS_COLUMNS

    written = json.loads((directory / 'summary.json').read_text())
    assert written['metric'] == 'max_error'
    assert written['parameters']['N'] == 4
    assert written['steps'] == 20
    assert written['errors']['max_error'] <= 1e-12


def test_runs_are_reproducible(output_root, tmp_path):
    service = get_run_service()
    config = parse_run_config(dict(SMALL_LAKE, output_dir=str(tmp_path / 'repeat')))
    filenames = ('solution.csv', 'diagnostics.csv', 'summary.json')
    outputs = []
    for _ in range(2):
        summary = service.run(config)
        assert summary['wall_time'] > 0
        outputs.append([(tmp_path / 'repeat' / name).read_bytes() for name in filenames])
    assert outputs[0] == outputs[1]
    assert 'wall_time' not in json.loads(outputs[0][2])


def test_smooth_perturbation_scores_entropy_drift(output_root):
    config = parse_run_config({'scenario': 'smooth_perturbation', 'N': 4, 'p': 2, 'steps': 10, 'T': 0.01})
    outcome = get_run_service().execute(config)
    assert outcome.errors is None
    assert outcome.metric_value() == abs(outcome.entropy_drift)
    assert abs(outcome.entropy_drift) <= 1e-9


def test_emerged_bump_with_subcells(output_root):
    config = parse_run_config({'scenario': 'emerged_bump', 'N': 10, 'p': 2, 'T': 0.05})
    outcome = get_run_service().execute(config)
    assert outcome.diagnostics['n_subcell_elements'].max() > 0
    assert outcome.diagnostics['min_h'].min() >= -1e-15
    assert outcome.metric_value() <= 1e-12


def test_dam_break_window(output_root):
    config = parse_run_config({'scenario': 'dam_break', 'N': 20, 'p': 1, 'T': 0.5, 'node_family': 'lobatto'})
    outcome = get_run_service().execute(config)
    frame = outcome.solution_frame()
    assert outcome.mesh.n_elements == 40
    assert frame['element'].max() == 19
    assert frame['x'].min() == pytest.approx(0.0)
    assert frame['x'].max() == pytest.approx(10.0)
    assert outcome.diagnostics['min_h'].min() >= -1e-15
    assert outcome.errors['l2_squared_h'] < 1e-4


def test_unsupported_degree(output_root):
    with pytest.raises(ConfigurationError):
        get_run_service().execute(parse_run_config(dict(SMALL_LAKE, p=99)))


def test_smooth_perturbation_completes_at_full_size(output_root):
    config = parse_run_config({'scenario': 'smooth_perturbation', 'steps': 200, 'T': 0.2})
    outcome = get_run_service().execute(config, track_entropy_rate=False)
    assert outcome.mesh.n_elements == 15
    assert outcome.diagnostics['t'].iloc[-1] == 0.2
    assert np.all(np.isfinite(outcome.final.h))
    assert np.all(np.isfinite(outcome.final.hv))
    assert outcome.diagnostics['min_h'].min() > 0.5
    assert abs(outcome.entropy_drift) <= 5e-9


def test_dam_break_completes_past_the_wet_dry_front(output_root):
    config = parse_run_config({'scenario': 'dam_break', 'T': 1.5})
    outcome = get_run_service().execute(config, track_entropy_rate=False)
    assert outcome.diagnostics['t'].iloc[-1] == 1.5
    assert outcome.diagnostics['min_h'].min() >= -1e-15
    assert outcome.errors['l2_squared_h'] < 1e-4
