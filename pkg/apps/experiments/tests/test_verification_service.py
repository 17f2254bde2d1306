"""
Verification suite tests
"""
import dataclasses

import numpy as np
import pytest

from apps.experiments.services.verification_service import (
    CheckResult,
    VerificationReport,
    check_coefficient_systems,
    check_positivity,
    ec_counterexample_height,
    get_verification_service,
)
from apps.solver.services import semidisc
from apps.solver.services.physics import PhysicsContext


def test_quick_suite_passes():
    report = get_verification_service().run(seed=7, quick=True)
    failed = [c.line() for c in report.checks if not c.passed]
    assert failed == []
    assert report.seed == 7
    names = {c.name for c in report.checks}
    assert {'sbp_residual', 'ec_condition', 'source_condition', 'coefficients_sparse_pattern',
            'semidiscrete_entropy', 'lobatto_reduction', 'positivity_llf', 'ec_not_positive',
            'limiter_min', 'tadmor_recovery'} <= names


def test_report_uses_settings_seed(settings):
    assert get_verification_service().run(quick=True).seed == settings.EXPERIMENTS['DEFAULT_SEED']


def test_broken_coefficients_are_reported(rng, monkeypatch):
    original = semidisc.surface_coefficients

    def broken(params):
        coeffs = original(params)
        return dataclasses.replace(coeffs, d5=coeffs.d5 + 1e-3)

    monkeypatch.setattr(semidisc, 'surface_coefficients', broken)
    results = {c.name: c for c in check_coefficient_systems(rng, 10)}
    systems = ('coefficients_cons_h', 'coefficients_cons_hv', 'coefficients_stab')
    assert not all(results[name].passed for name in systems)
    assert results['coefficients_sparse_pattern'].passed


def test_ec_flux_is_not_positivity_preserving():
    assert ec_counterexample_height(PhysicsContext(g=9.81)) < 0.0


def test_positivity_checks(rng):
    results = check_positivity(rng, 500)
    assert all(c.passed for c in results)
    assert [c.name for c in results][-1] == 'ec_not_positive'


def test_render():
    report = VerificationReport(seed=1, checks=[
        CheckResult(name='a', passed=True, value=0.0, tolerance=1e-12),
        CheckResult(name='b', passed=False, value=np.nan, tolerance=1e-12, detail='nan'),
    ])
    text = report.render()
    assert text.splitlines()[0] == 'seed=1'
    assert 'PASS a' in text and 'FAIL b' in text
    assert text.endswith('1/2 checks passed\n')
    assert not report.passed
    assert report.get('b').detail == 'nan'
    with pytest.raises(KeyError):
        report.get('c')


@pytest.mark.slow
def test_full_suite_passes():
    report = get_verification_service().run()
    assert report.passed, report.render()
