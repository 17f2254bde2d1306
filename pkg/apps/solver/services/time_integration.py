"""
Time Integration
SSPRK(3,3) stepping in Shu-Osher form with a post-stage hook (positivity
limiter) and CFL-based step control in fixed-count or adaptive mode.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

import numpy as np
from django.conf import settings

from apps.solver.exceptions import ConfigurationError, NonFiniteStateError
from apps.solver.services.limiter import LimiterConfig, PositivityLimiter
from apps.solver.services.physics import PhysicsContext, SweState, max_wave_speed, velocity
from apps.solver.services.sbp_service import SbpOperator
from apps.solver.services.semidisc import Diagnostics, Mesh, SemiDiscretisation, SolutionField

logger = logging.getLogger(__name__)

Rhs = Callable[[np.ndarray], np.ndarray]
PostStage = Callable[[np.ndarray], np.ndarray]


@dataclass
class StepControl:
    """
    Fixed step count over [0, t_final] when steps is set, CFL-adaptive otherwise
    """
    t_final: float
    cfl: float = 0.5
    steps: Optional[int] = None
    t: float = 0.0

    def __post_init__(self):
        if not self.cfl > 0:
            raise ConfigurationError(f"CFL number must be positive, got {self.cfl}")
        if not self.t_final > 0:
            raise ConfigurationError(f"Final time must be positive, got {self.t_final}")
        if self.steps is not None and self.steps < 1:
            raise ConfigurationError(f"Step count must be positive, got {self.steps}")

    @property
    def fixed(self) -> bool:
        return self.steps is not None


@dataclass(frozen=True)
class StepRecord:
    step: int
    t: float
    dt: float
    diagnostics: Diagnostics
    min_h: float
    n_subcell_elements: int
    state: Optional[SolutionField] = field(default=None, repr=False, compare=False)


def ssprk33_step(rhs: Rhs, u: np.ndarray, dt: float,
                 post_stage: Optional[PostStage] = None) -> np.ndarray:
    """
    One SSPRK(3,3) step

    Args:
        rhs: state -> rate
        u: current state
        dt: step size
        post_stage: applied to every stage (limiter), identity when None

    Returns:
        New state
    """
    if not dt > 0:
        raise ConfigurationError(f"Step size must be positive, got {dt}")
    hook = post_stage or (lambda x: x)

    u1 = hook(u + dt * rhs(u))
    u2 = hook(0.75 * u + 0.25 * (u1 + dt * rhs(u1)))
    return hook(u / 3.0 + 2.0 / 3.0 * (u2 + dt * rhs(u2)))


def interface_wave_speeds(state: SolutionField, op: SbpOperator, ctx: PhysicsContext) -> np.ndarray:
    """|v| + sqrt(g h) at every node and both boundary traces of every element"""
    nodal = SweState(h=state.h, hv=state.hv)
    h_tr = np.maximum(op.restrict(state.h), 0.0)
    v_tr = op.restrict(velocity(nodal, ctx))
    traces = SweState.from_primitive(h_tr, v_tr)
    return np.concatenate([max_wave_speed(nodal, ctx), max_wave_speed(traces, ctx)], axis=-1)


def compute_dt(state: SolutionField, mesh: Mesh, op: SbpOperator, cfl: float,
               ctx: PhysicsContext, limiter_cfg: Optional[LimiterConfig] = None) -> float:
    """
    CFL step size cfl * (w_min / 2) * dx / max wave speed

    w_min is the smallest weight of the solution and check quadratures; the
    factor is 1 for p = 0. The wave speed is the maximum over the nodes and
    the interpolated element traces the interface fluxes see. An all-dry
    state returns the configured maximum.
    """
    if op.degree == 0:
        factor = 1.0
    else:
        cfg = limiter_cfg or LimiterConfig.for_operator(op)
        factor = 0.5 * cfg.min_weight(op)

    lam = float(np.max(interface_wave_speeds(state, op, ctx)))
    if lam <= 0.0:
        return settings.SOLVER['DT_MAX']
    return cfl * factor * mesh.dx / lam


def evolve(semi: SemiDiscretisation, initial: SolutionField, control: StepControl,
           limiter: Optional[PositivityLimiter] = None,
           track_entropy_rate: bool = True) -> Iterator[StepRecord]:
    """
    Advance to control.t_final, yielding a record for the initial state and
    after every accepted step

    Raises:
        NonFiniteStateError: carries the index of the failing step
    """
    b = initial.b
    u = initial.as_array()

    def rhs(state: np.ndarray) -> np.ndarray:
        return semi.rhs(state, b)

    def post_stage(state: np.ndarray) -> np.ndarray:
        if limiter is None or not limiter.enabled:
            return state
        limiter.nodal_only = semi.subcell_mask(state[0])
        return limiter(state)

    def record(step: int, dt: float) -> StepRecord:
        current = SolutionField.from_array(u, b)
        diag = semi.diagnostics(current, with_rate=track_entropy_rate)
        return StepRecord(step=step, t=control.t, dt=dt, diagnostics=diag,
                          min_h=float(np.min(u[0])), n_subcell_elements=semi.last_subcell_count,
                          state=current)

    if limiter is not None and limiter.enabled:
        u = post_stage(u)
    control.t = 0.0
    yield record(0, 0.0)

    step = 0
    logger.info(
        f"Evolving to t={control.t_final} "
        f"({'fixed ' + str(control.steps) + ' steps' if control.fixed else f'cfl={control.cfl}'})"
    )
    while control.t < control.t_final:
        step += 1
        if control.fixed:
            t_next = control.t_final * step / control.steps
            dt = t_next - control.t
        else:
            dt = compute_dt(SolutionField.from_array(u, b), semi.mesh, semi.op, control.cfl, semi.ctx,
                            limiter.cfg if limiter is not None else None)
            dt = min(dt, control.t_final - control.t)
            t_next = control.t + dt
            if t_next >= control.t_final or control.t_final - t_next < 1e-14 * control.t_final:
                t_next = control.t_final
                dt = t_next - control.t

        try:
            u = ssprk33_step(rhs, u, dt, post_stage)
        except NonFiniteStateError as e:
            logger.error(f"Aborting at step {step}: {str(e)}")
            raise NonFiniteStateError(e.component, element=e.element, step=step) from e

        bad = ~np.isfinite(u)
        if np.any(bad):
            component = 'h' if np.any(bad[0]) else 'hv'
            element = int(np.argmax(np.any(bad[0] | bad[1], axis=-1)))
            logger.error(f"Aborting at step {step}: non-finite {component} in element {element}")
            raise NonFiniteStateError(component, element=element, step=step)

        control.t = t_next
        yield record(step, dt)

        if control.fixed and step >= control.steps:
            break
