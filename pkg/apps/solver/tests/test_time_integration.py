"""
Time integration tests
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from apps.solver.exceptions import ConfigurationError, NonFiniteStateError
from apps.solver.services.fluxes import FluxParams
from apps.solver.services.limiter import LimiterConfig, PositivityLimiter
from apps.solver.services.physics import PhysicsContext
from apps.solver.services.sbp_service import gauss_operator, lobatto_operator
from apps.solver.services.semidisc import Mesh, SemiDiscretisation, SolutionField, SubcellConfig
from apps.solver.services.time_integration import StepControl, compute_dt, evolve, interface_wave_speeds, ssprk33_step

CTX = PhysicsContext(g=1.0)
MESH = Mesh(x_left=-1.0, x_right=1.0, n_elements=6)


def smooth_state(op, mesh=MESH):
    x = mesh.node_coordinates(op)
    b = 0.1 * np.sin(np.pi * x)
    h = 1.0 + 0.05 * np.cos(np.pi * x)
    return SolutionField(h=h, hv=0.1 * h, b=b)


class TestSsprk33:
    def test_exact_for_cubic_in_time(self):
        # u' = 3 t^2 written as an autonomous system (u, t)
        def rhs(state):
            return np.array([3.0 * state[1] ** 2, 1.0])

        u = ssprk33_step(rhs, np.array([0.0, 0.0]), 0.5)
        assert_allclose(u, [0.125, 0.5], atol=1e-15)

    def test_third_order_convergence(self):
        def rhs(state):
            return -state

        errors = []
        for n in (10, 20):
            u = np.array([1.0])
            for _ in range(n):
                u = ssprk33_step(rhs, u, 1.0 / n)
            errors.append(abs(u[0] - np.exp(-1.0)))
        assert np.log2(errors[0] / errors[1]) == pytest.approx(3.0, abs=0.2)

    def test_post_stage_hook_is_applied_to_every_stage(self):
        calls = []

        def hook(state):
            calls.append(state.copy())
            return state

        ssprk33_step(lambda s: np.zeros_like(s), np.ones(2), 0.1, hook)
        assert len(calls) == 3

    def test_step_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            ssprk33_step(lambda s: s, np.ones(2), 0.0)


class TestStepControl:
    @pytest.mark.parametrize('kwargs', [
        {'t_final': 1.0, 'cfl': 0.0},
        {'t_final': 0.0},
        {'t_final': 1.0, 'steps': 0},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ConfigurationError):
            StepControl(**kwargs)

    def test_compute_dt_uses_smallest_weight(self):
        op = gauss_operator(3)
        state = SolutionField(h=np.ones((6, 4)), hv=np.zeros((6, 4)), b=np.zeros((6, 4)))
        cfg = LimiterConfig.for_operator(op)
        w_min = min(op.weights.min(), cfg.check_weights.min())
        dt = compute_dt(state, MESH, op, 0.5, CTX)
        assert dt == pytest.approx(0.5 * 0.5 * w_min * MESH.dx / 1.0)

    def test_compute_dt_of_dry_state(self, settings):
        op = lobatto_operator(1)
        state = SolutionField(h=np.zeros((6, 2)), hv=np.zeros((6, 2)), b=np.zeros((6, 2)))
        assert compute_dt(state, MESH, op, 0.5, CTX) == settings.SOLVER['DT_MAX']

    def test_compute_dt_for_degree_zero(self):
        op = gauss_operator(0)
        state = SolutionField(h=np.full((6, 1), 4.0), hv=np.zeros((6, 1)), b=np.zeros((6, 1)))
        assert compute_dt(state, MESH, op, 0.5, CTX) == pytest.approx(0.5 * MESH.dx / 2.0)

    def test_compute_dt_sees_interpolated_traces(self):
        op = gauss_operator(2)
        h = np.tile([1.0, 0.2, 1.0], (6, 1))
        state = SolutionField(h=h, hv=np.zeros_like(h), b=np.zeros_like(h))
        speeds = interface_wave_speeds(state, op, CTX)
        assert speeds.shape == (6, 5)
        h_trace = float(np.max(op.restrict(h)))
        assert h_trace > 1.0
        assert np.max(speeds) == pytest.approx(np.sqrt(h_trace))

        cfg = LimiterConfig.for_operator(op)
        nodal_dt = 0.5 * 0.5 * cfg.min_weight(op) * MESH.dx / 1.0
        assert compute_dt(state, MESH, op, 0.5, CTX) == pytest.approx(nodal_dt / np.sqrt(h_trace))


class TestEvolve:
    def test_fixed_steps_land_on_final_time(self):
        op = gauss_operator(2)
        semi = SemiDiscretisation(MESH, op, CTX, FluxParams())
        records = list(evolve(semi, smooth_state(op), StepControl(t_final=0.1, steps=7)))
        assert [r.step for r in records] == list(range(8))
        assert records[-1].t == 0.1
        assert_allclose([r.dt for r in records[1:]], 0.1 / 7, rtol=1e-12)

    def test_adaptive_steps_land_on_final_time(self):
        op = lobatto_operator(3)
        semi = SemiDiscretisation(MESH, op, CTX, FluxParams(), surface_flux='llf')
        records = list(evolve(semi, smooth_state(op), StepControl(t_final=0.05, cfl=0.5)))
        assert records[-1].t == 0.05
        assert all(r.dt > 0 for r in records[1:])

    def test_mass_is_conserved(self):
        op = gauss_operator(3)
        semi = SemiDiscretisation(MESH, op, CTX, FluxParams(), surface_flux='llf_type')
        records = list(evolve(semi, smooth_state(op), StepControl(t_final=0.2, cfl=0.5)))
        mass = np.array([r.diagnostics.mass for r in records])
        assert np.max(np.abs(mass - mass[0])) <= 1e-13 * abs(mass[0])

    def test_records_carry_states(self):
        op = gauss_operator(1)
        initial = smooth_state(op)
        semi = SemiDiscretisation(MESH, op, CTX, FluxParams())
        records = list(evolve(semi, initial, StepControl(t_final=0.01, steps=2)))
        assert_allclose(records[0].state.h, initial.h)
        assert records[-1].state.b is initial.b
        assert records[-1].min_h == pytest.approx(records[-1].state.h.min())

    def test_limiter_keeps_heights_non_negative_near_dry_area(self):
        op = gauss_operator(2)
        mesh = Mesh(x_left=0.0, x_right=1.0, n_elements=10)
        x = mesh.node_coordinates(op)
        h = np.where(x < 0.5, 1.0, 0.0)
        initial = SolutionField(h=h, hv=np.zeros_like(h), b=np.zeros_like(h))
        semi = SemiDiscretisation(mesh, op, CTX, FluxParams(), surface_flux='llf',
                                  subcell=SubcellConfig(threshold=1e-6, include_neighbors=True))
        limiter = PositivityLimiter(op, CTX)
        records = list(evolve(semi, initial, StepControl(t_final=0.05, cfl=0.5), limiter))
        assert min(r.min_h for r in records) >= -1e-14
        assert records[1].n_subcell_elements > 0

    def test_failure_reports_the_step(self):
        op = gauss_operator(1)
        semi = SemiDiscretisation(MESH, op, CTX, FluxParams())
        state = smooth_state(op)

        def broken_rhs(u, b):
            raise NonFiniteStateError('rate_h', element=2)

        semi.rhs = broken_rhs
        records = evolve(semi, state, StepControl(t_final=0.1, steps=3), track_entropy_rate=False)
        next(records)
        with pytest.raises(NonFiniteStateError) as info:
            next(records)
        assert info.value.step == 1
        assert info.value.element == 2
