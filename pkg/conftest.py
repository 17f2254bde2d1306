"""
Shared pytest fixtures
"""
import numpy as np
import pytest


@pytest.fixture
def rng():
    """Seeded generator so sampled tests are repeatable"""
    return np.random.default_rng(20170101)


@pytest.fixture
def output_root(settings, tmp_path):
    """Send every run output to a temporary directory"""
    settings.EXPERIMENTS = dict(settings.EXPERIMENTS, OUTPUT_ROOT=str(tmp_path / 'output'))
    from apps.experiments.services import run_service
    run_service._run_service = None
    yield tmp_path / 'output'
    run_service._run_service = None
