"""
Sweep and flux study tests
"""
import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from apps.experiments.config import parse_run_config
from apps.experiments.services.flux_study_service import STUDY_COLUMNS, get_flux_study_service
from apps.experiments.services.sweep_service import (
    SWEEP_COLUMNS,
    get_sweep_service,
    optimal_a2_per_a1,
    parse_range,
    run_point,
    sweep_grid,
    tied_a2,
)
from apps.experiments.tasks import run_sweep_point
from apps.solver.exceptions import ConfigurationError

SMALL_LAKE = {'scenario': 'lake_at_rest', 'N': 3, 'p': 2, 'steps': 5, 'T': 0.01}


class TestRanges:
    def test_inclusive_range(self):
        assert_allclose(parse_range('-3:0.1:3')[[0, 30, -1]], [-3.0, 0.0, 3.0])
        assert parse_range('-3:0.1:3').size == 61
        assert parse_range('0:1:5').tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]

    def test_single_value(self):
        assert parse_range('0.5').tolist() == [0.5]

    @pytest.mark.parametrize('spec', ['a:b:c', '1:2', '0:0:1', '1:0.5:0', '1:-1:3'])
    def test_malformed(self, spec):
        with pytest.raises(ConfigurationError):
            parse_range(spec)

    def test_tied_grid(self):
        grid = sweep_grid('-1:1:1', 'tied')
        assert grid == [(-1.0, 1.0), (0.0, tied_a2(0.0)), (1.0, tied_a2(1.0))]
        assert tied_a2(0.0) == pytest.approx(2.0 / 3.0)

    def test_full_grid_order(self):
        assert sweep_grid('0:1:1', '2:1:3') == [(0.0, 2.0), (0.0, 3.0), (1.0, 2.0), (1.0, 3.0)]


def test_sweep_in_process(output_root):
    frame = get_sweep_service().sweep(parse_run_config(SMALL_LAKE), '-1:1:0', '0:1:1', use_celery=False)
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame[['a1', 'a2']].values.tolist() == [[-1.0, 0.0], [-1.0, 1.0], [0.0, 0.0], [0.0, 1.0]]
    assert (frame['status'] == 'ok').all()
    assert (frame['metric'] == 'max_error').all()
    assert frame['value'].max() <= 1e-12


def test_sweep_file(output_root, tmp_path):
    service = get_sweep_service()
    frame = service.sweep(parse_run_config(SMALL_LAKE), '0', 'tied', use_celery=False)
    path = service.write(frame, tmp_path / 'sweep')
    assert list(pd.read_csv(path).columns) == SWEEP_COLUMNS


def test_failed_points_become_rows(output_root, monkeypatch):
    from apps.experiments.services import sweep_service
    from apps.solver.exceptions import NonFiniteStateError

    class Exploding:
        def execute(self, config, track_entropy_rate=True):
            raise NonFiniteStateError('rate_h', element=0, step=3)

    monkeypatch.setattr(sweep_service, 'get_run_service', lambda: Exploding())
    row = run_point(SMALL_LAKE, 0.0, 0.0)
    assert row['status'] == 'failed'
    assert np.isnan(row['value'])

    task_row = run_sweep_point.run(SMALL_LAKE, 0.0, 0.0)
    assert task_row['value'] is None
    assert task_row['status'] == 'failed'


def test_configuration_errors_propagate(output_root):
    with pytest.raises(ConfigurationError):
        run_point(dict(SMALL_LAKE, flux='roe'), 0.0, 0.0)


def test_optimal_a2():
    frame = pd.DataFrame({
        'a1': [0.0, 0.0, 1.0, 1.0],
        'a2': [0.0, 1.0, 0.0, 1.0],
        'metric': 'max_error',
        'value': [3.0, 1.0, 0.5, np.nan],
        'steps': 1,
        'min_h': 1.0,
        'status': ['ok', 'ok', 'ok', 'failed'],
    })
    best = optimal_a2_per_a1(frame)
    assert best[['a1', 'a2']].values.tolist() == [[0.0, 1.0], [1.0, 0.0]]


def test_flux_study(output_root, tmp_path):
    config = parse_run_config({'scenario': 'smooth_perturbation', 'steps': 4, 'T': 0.004})
    service = get_flux_study_service()
    frame = service.study(config, degrees=[1, 2], dofs=12, fluxes=['ec', 'llf'])
    assert list(frame.columns) == STUDY_COLUMNS
    assert frame[['p', 'N']].values.tolist() == [[1, 6], [1, 6], [2, 4], [2, 4]]
    assert (frame['status'] == 'ok').all()
    ec = frame[frame['flux'] == 'ec']['entropy_drift'].abs()
    llf = frame[frame['flux'] == 'llf']['entropy_drift']
    assert (ec <= 1e-10).all()
    assert (llf <= 1e-10).all()

    path = service.write(frame, tmp_path / 'study')
    assert path.name == 'flux_study.csv'


def test_flux_study_rejects_uneven_split(output_root):
    config = parse_run_config({'scenario': 'smooth_perturbation', 'steps': 2, 'T': 0.002})
    with pytest.raises(ConfigurationError):
        get_flux_study_service().study(config, degrees=[4], dofs=12)
