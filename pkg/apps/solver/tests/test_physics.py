"""
Shallow water physics tests
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from apps.solver.exceptions import PhysicalDomainError
from apps.solver.services.physics import (
    EntropyVars,
    PhysicsContext,
    SweState,
    barth_scaling,
    barth_scaling_degenerate,
    conserved_from_entropy,
    entropy,
    entropy_flux,
    entropy_hessian,
    entropy_jacobian,
    entropy_variables,
    flux_potential,
    max_wave_speed,
    physical_flux,
    velocity,
)

CTX = PhysicsContext(g=9.81)


def test_context_validation():
    with pytest.raises(PhysicalDomainError):
        PhysicsContext(g=0.0)
    with pytest.raises(PhysicalDomainError):
        PhysicsContext(g=1.0, h_dry=0.0)
    with pytest.raises(PhysicalDomainError):
        PhysicsContext(g=1.0, h_dry=1e-6, h_velocity=1e-8)


def test_velocity_is_zero_in_dry_states():
    s = SweState(h=np.array([2.0, 0.0, 1e-14]), hv=np.array([1.0, 0.0, 1e-20]))
    assert_allclose(velocity(s, CTX), [0.5, 0.0, 0.0])


def test_velocity_rejects_negative_height_and_nan():
    with pytest.raises(PhysicalDomainError):
        velocity(SweState(h=-1e-6, hv=0.0), CTX)
    with pytest.raises(PhysicalDomainError):
        velocity(SweState(h=np.nan, hv=0.0), CTX)


def test_tiny_negative_height_is_treated_as_dry():
    assert velocity(SweState(h=-1e-14, hv=0.0), CTX) == 0.0


def test_velocity_is_bounded_near_dry_states():
    h = np.array([1e-11, 1e-9, 1e-7, 5e-7])
    hv = np.full_like(h, 1e-7)
    v = velocity(SweState(h=h, hv=hv), CTX)
    assert np.all(np.abs(v) <= 1e-7 / CTX.h_velocity)
    assert_allclose(v, 2.0 * h * hv / (h * h + CTX.h_velocity ** 2))
    assert np.all(np.abs(v) < hv / h)


def test_velocity_is_continuous_at_the_desingularisation_height():
    below = velocity(SweState(h=CTX.h_velocity * (1.0 - 1e-12), hv=3e-7), CTX)
    above = velocity(SweState(h=CTX.h_velocity, hv=3e-7), CTX)
    assert above == pytest.approx(0.3)
    assert below == pytest.approx(above, rel=1e-9)


def test_velocity_is_exact_above_the_desingularisation_height():
    h = np.array([1e-6, 1e-3, 1.0])
    assert_allclose(velocity(SweState(h=h, hv=0.25 * h), CTX), 0.25, rtol=1e-14)


def test_physical_flux():
    f_h, f_hv = physical_flux(SweState.from_primitive(2.0, 0.5), CTX)
    assert_allclose(f_h, 1.0)
    assert_allclose(f_hv, 2.0 * 0.25 + 0.5 * 9.81 * 4.0)


def test_entropy_and_flux_values():
    s = SweState.from_primitive(2.0, 0.5)
    assert_allclose(entropy(s, 0.3, CTX), 0.5 * 2.0 * 0.25 + 0.5 * 9.81 * 4.0 + 9.81 * 2.0 * 0.3)
    assert_allclose(entropy_flux(s, 0.3, CTX),
                    0.5 * 2.0 * 0.125 + 9.81 * 4.0 * 0.5 + 9.81 * 0.3 * 2.0 * 0.5)
    assert_allclose(flux_potential(s, CTX), 0.5 * 9.81 * 4.0 * 0.5)


def test_entropy_variables_round_trip_with_bottom():
    s = SweState.from_primitive(np.array([0.5, 1.5]), np.array([-0.3, 0.7]))
    b = np.array([0.2, -0.1])
    back = conserved_from_entropy(entropy_variables(s, b, CTX), b, CTX)
    assert_allclose(back.h, s.h, rtol=1e-14)
    assert_allclose(back.hv, s.hv, rtol=1e-14)


def test_conserved_from_entropy_rejects_dry_states():
    with pytest.raises(PhysicalDomainError):
        conserved_from_entropy(EntropyVars(w1=0.0, w2=0.0), 0.0, CTX)


def test_entropy_variables_are_the_entropy_gradient():
    h, v, b = 1.3, 0.4, 0.2
    eps = 1e-6
    w = entropy_variables(SweState.from_primitive(h, v), b, CTX)

    def U(h_, hv_):
        return float(entropy(SweState(h=h_, hv=hv_), b, CTX))

    dU_dh = (U(h + eps, h * v) - U(h - eps, h * v)) / (2 * eps)
    dU_dhv = (U(h, h * v + eps) - U(h, h * v - eps)) / (2 * eps)
    assert_allclose([w.w1, w.w2], [dU_dh, dU_dhv], rtol=1e-7)


def test_jacobian_and_hessian_are_inverse():
    s = SweState.from_primitive(np.array([0.7, 2.0]), np.array([0.1, -1.2]))
    product = entropy_jacobian(s, CTX) @ entropy_hessian(s, CTX)
    assert_allclose(product, np.broadcast_to(np.eye(2), product.shape), atol=1e-13)


def test_hessian_requires_wet_state():
    with pytest.raises(PhysicalDomainError):
        entropy_hessian(SweState(h=0.0, hv=0.0), CTX)


def test_barth_scaling_reproduces_entropy_jacobian():
    s = SweState.from_primitive(np.array([0.3, 1.0, 4.0]), np.array([0.0, 0.5, -2.0]))
    R = barth_scaling(s, CTX)
    assert_allclose(R @ np.swapaxes(R, -1, -2), entropy_jacobian(s, CTX), atol=1e-13)


def test_barth_scaling_degenerates_when_dry():
    s = SweState(h=np.array([0.0, 1.0]), hv=np.array([0.0, 0.0]))
    assert barth_scaling_degenerate(s, CTX).tolist() == [True, False]
    R = barth_scaling(s, CTX)
    assert_allclose(R[0, :, 0], R[0, :, 1])


def test_max_wave_speed():
    s = SweState.from_primitive(np.array([1.0, 0.0]), np.array([-2.0, 0.0]))
    assert_allclose(max_wave_speed(s, CTX), [2.0 + np.sqrt(9.81), 0.0])


def test_entropy_jacobian_values():
    ctx = PhysicsContext(g=1.0)
    assert_allclose(entropy_jacobian(SweState.from_primitive(1.0, 0.0), ctx), [[1.0, 0.0], [0.0, 1.0]])
    assert_allclose(entropy_jacobian(SweState.from_primitive(1.0, 2.0), ctx), [[1.0, 2.0], [2.0, 5.0]])
