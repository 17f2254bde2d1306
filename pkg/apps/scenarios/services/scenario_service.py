"""
Scenario Service
Initial conditions, bottom topographies, steady and exact solutions and
default run controls for the shallow water test cases, plus the error
norms used to score a run against an exact solution.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from django.conf import settings
from scipy.optimize import brentq

from apps.solver.exceptions import (
    ConfigurationError,
    InfeasibleEquilibriumError,
    PhysicalDomainError,
)
from apps.solver.services.sbp_service import GAUSS, SbpOperator
from apps.solver.services.semidisc import Mesh, SolutionField

logger = logging.getLogger(__name__)

Profile = Callable[[np.ndarray], np.ndarray]
InitialCondition = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
ExactSolution = Callable[[np.ndarray, float], Tuple[np.ndarray, np.ndarray]]

MAX_ERROR = 'max_error'
ENTROPY_DRIFT = 'entropy_drift'

MOVING_WATER_PRESETS = {
    'subcritical': (1.0, 25.0),
    'transcritical_energy': (3.0, 19.203311922761937),
}


@dataclass(frozen=True)
class Scenario:
    """
    One test case: domain, physics, initial data and default run controls

    padding widens the computational mesh on both sides of [x_left, x_right]
    so that a non-periodic problem can run on a periodic mesh; errors are
    only evaluated on the window of the original domain.
    """
    name: str
    description: str
    x_left: float
    x_right: float
    g: float
    bottom: Profile
    initial: InitialCondition
    t_final: float
    n_elements: int
    degree: int
    node_family: str = GAUSS
    flux: str = 'ec'
    a1: float = -1.0
    a2: float = 1.0
    limiter: bool = False
    subcell_threshold: Optional[float] = None
    include_neighbors: bool = False
    steps: Optional[int] = None
    cfl: float = 0.5
    exact: Optional[ExactSolution] = None
    padding: float = 0.0
    options: Optional[Dict[str, float]] = None

    @property
    def has_exact(self) -> bool:
        return self.exact is not None

    @property
    def metric(self) -> str:
        return MAX_ERROR if self.has_exact else ENTROPY_DRIFT

    def build_mesh(self, n_elements: Optional[int] = None) -> Tuple[Mesh, slice]:
        """
        Periodic mesh for this scenario and the element window of the domain

        Returns:
            (mesh, window) where mesh elements [window] cover [x_left, x_right]
        """
        n = n_elements or self.n_elements
        dx = (self.x_right - self.x_left) / n
        n_pad = int(math.ceil(self.padding / dx - 1e-12)) if self.padding > 0 else 0
        mesh = Mesh(
            x_left=self.x_left - n_pad * dx,
            x_right=self.x_right + n_pad * dx,
            n_elements=n + 2 * n_pad,
        )
        return mesh, slice(n_pad, n_pad + n)

    def initial_field(self, mesh: Mesh, op: SbpOperator) -> SolutionField:
        """
        Nodal initial state on a mesh

        Raises:
            PhysicalDomainError: negative initial height at a node
        """
        x = mesh.node_coordinates(op)
        h, hv = self.initial(x)
        h = np.asarray(h, dtype=float) * np.ones_like(x)
        hv = np.asarray(hv, dtype=float) * np.ones_like(x)
        if np.any(h < 0):
            raise PhysicalDomainError(f"Scenario '{self.name}' has negative initial height {h.min():.3e}")
        return SolutionField(h=h, hv=hv, b=np.asarray(self.bottom(x), dtype=float) * np.ones_like(x))

    def exact_at(self, t: float) -> Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]:
        if self.exact is None:
            raise ConfigurationError(f"Scenario '{self.name}' has no exact solution")
        return lambda x: self.exact(x, t)

    def to_dict(self) -> Dict[str, Any]:
        """Run defaults as plain values (no callables)"""
        return {
            'name': self.name,
            'description': self.description,
            'domain': [self.x_left, self.x_right],
            'g': self.g,
            'T': self.t_final,
            'N': self.n_elements,
            'p': self.degree,
            'node_family': self.node_family,
            'flux': self.flux,
            'a1': self.a1,
            'a2': self.a2,
            'limiter': self.limiter,
            'subcell_threshold': self.subcell_threshold,
            'include_neighbors': self.include_neighbors,
            'steps': self.steps,
            'cfl': self.cfl,
            'padding': self.padding,
            'has_exact': self.has_exact,
            'metric': self.metric,
            'options': dict(self.options or {}),
        }


# =============================================================================
# LAKE AT REST / SMOOTH PERTURBATION
# =============================================================================

def _sine_bottom(x: np.ndarray) -> np.ndarray:
    return np.sin(np.pi * np.asarray(x, dtype=float) / 4.0)


def _periodic_bottom(x: np.ndarray) -> np.ndarray:
    """0.25 sin(pi x); matches across the seam of the periodic domain [-1, 1]"""
    return 0.25 * np.sin(np.pi * np.asarray(x, dtype=float))


def lake_at_rest() -> Scenario:
    """Flat free surface h + b = 1 over b = sin(pi x / 4); steady"""
    def initial(x):
        return 1.0 - _sine_bottom(x), np.zeros_like(x, dtype=float)

    return Scenario(
        name='lake_at_rest',
        description='Lake at rest over a smooth bottom',
        x_left=-1.0,
        x_right=1.0,
        g=1.0,
        bottom=_sine_bottom,
        initial=initial,
        exact=lambda x, t: initial(x),
        t_final=1.0,
        n_elements=15,
        degree=7,
        steps=1000,
    )


def smooth_perturbation() -> Scenario:
    """
    Constant height over b = 0.25 sin(pi x); the solution stays smooth up to t = 1

    The lake-at-rest bottom is not periodic on [-1, 1]; this one is.
    """
    def initial(x):
        x = np.asarray(x, dtype=float)
        return np.ones_like(x), np.zeros_like(x)

    return Scenario(
        name='smooth_perturbation',
        description='Constant water height over a smooth periodic bottom',
        x_left=-1.0,
        x_right=1.0,
        g=1.0,
        bottom=_periodic_bottom,
        initial=initial,
        t_final=1.0,
        n_elements=15,
        degree=7,
        steps=1000,
    )


# =============================================================================
# EMERGED BUMP
# =============================================================================

def parabolic_bump(x: np.ndarray) -> np.ndarray:
    """0.2 - 0.05 (x - 10)^2 on 8 < x < 12, zero elsewhere"""
    x = np.asarray(x, dtype=float)
    return np.where((x > 8.0) & (x < 12.0), 0.2 - 0.05 * (x - 10.0) ** 2, 0.0)


def emerged_bump() -> Scenario:
    """Lake at rest at level 0.1 with the top of the bump dry"""
    def initial(x):
        b = parabolic_bump(x)
        return np.maximum(0.1, b) - b, np.zeros_like(b)

    return Scenario(
        name='emerged_bump',
        description='Lake at rest with an emerged parabolic bump (wet-dry fronts)',
        x_left=0.0,
        x_right=25.0,
        g=9.81,
        bottom=parabolic_bump,
        initial=initial,
        exact=lambda x, t: initial(x),
        t_final=1.0,
        n_elements=40,
        degree=5,
        flux='llf',
        limiter=True,
        subcell_threshold=1e-5,
    )


# =============================================================================
# MOVING WATER EQUILIBRIUM
# =============================================================================

def cosine_bump(x: np.ndarray) -> np.ndarray:
    """cos(10 pi (x + 1)) / 4 + 1/4 on |x| < 0.1, zero elsewhere"""
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 0.1, 0.25 * np.cos(10.0 * np.pi * (x + 1.0)) + 0.25, 0.0)


def critical_height(m: float, g: float) -> float:
    return (m * m / g) ** (1.0 / 3.0)


def solve_subcritical_height(b: np.ndarray, m: float, E: float, g: float,
                             max_iter: int = 200) -> np.ndarray:
    """
    Subcritical root of m^2 / (2 h^2) + g (h + b) = E for every bottom value

    Newton from h = (E - g b) / g decreases monotonically onto the root
    above the critical height; nodes that do not converge fall back to
    brentq on [h_crit, (E - g b) / g]. A node whose residual at the critical
    height is positive within 1e-12 E is returned as critical.

    Raises:
        InfeasibleEquilibriumError: no root at or above the critical height
    """
    b = np.asarray(b, dtype=float)
    h0 = (E - g * b) / g
    if np.any(h0 <= 0):
        raise InfeasibleEquilibriumError(f"Energy E={E} is below g*b={g * float(np.max(b)):.6g}")
    if m == 0.0:
        return h0

    def residual(h):
        return 0.5 * m * m / (h * h) + g * (h + b) - E

    h_c = critical_height(m, g)
    f_c = residual(np.full_like(b, h_c))
    if np.any(f_c > 1e-12 * abs(E)):
        worst = int(np.argmax(f_c))
        raise InfeasibleEquilibriumError(
            f"No subcritical height for m={m}, E={E} at b={float(b.flat[worst]):.6g}"
        )
    critical = f_c >= 0.0

    tol = max(settings.SOLVER['NEWTON_TOL'], 1e-14) * abs(E)
    h = np.where(critical, h_c, h0)
    converged = critical.copy()
    for _ in range(max_iter):
        f = residual(h)
        converged |= np.abs(f) <= tol
        if np.all(converged):
            break
        slope = g - m * m / h ** 3
        step = np.where(converged, 0.0, f / np.where(slope > 0, slope, 1.0))
        h = np.maximum(h - step, h_c)

    if not np.all(converged):
        missing = np.flatnonzero(~converged.ravel())
        logger.debug(f"Newton did not converge at {missing.size} nodes, bracketing instead")
        flat_h = h.ravel().copy()
        flat_b = b.ravel()
        for i in missing:
            upper = (E - g * flat_b[i]) / g
            flat_h[i] = brentq(
                lambda s: 0.5 * m * m / (s * s) + g * (s + flat_b[i]) - E,
                h_c, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps,
            )
        h = flat_h.reshape(b.shape)
    return h


def moving_water_equilibrium(m: Optional[float] = None, E: Optional[float] = None,
                             preset: str = 'subcritical') -> Scenario:
    """
    Steady flow with hv = m and v^2 / 2 + g (h + b) = E over a cosine bump

    Args:
        m, E: discharge and energy; both default to the preset values
        preset: 'subcritical' (m=1, E=25) or 'transcritical_energy' (m=3, E=19.2033...)

    Raises:
        ConfigurationError: unknown preset
        InfeasibleEquilibriumError: no subcritical height exists somewhere
    """
    if preset not in MOVING_WATER_PRESETS:
        raise ConfigurationError(
            f"Unknown moving water preset '{preset}' (choose from {', '.join(MOVING_WATER_PRESETS)})"
        )
    default_m, default_E = MOVING_WATER_PRESETS[preset]
    m = default_m if m is None else float(m)
    E = default_E if E is None else float(E)
    g = 9.81

    # fail early instead of at the first node evaluation
    solve_subcritical_height(np.array([0.0, 0.5]), m, E, g)

    def initial(x):
        h = solve_subcritical_height(cosine_bump(x), m, E, g)
        return h, np.full_like(h, m)

    return Scenario(
        name='moving_water',
        description=f'Moving water equilibrium (m={m:g}, E={E:g}) over a cosine bump',
        x_left=-1.0,
        x_right=1.0,
        g=g,
        bottom=cosine_bump,
        initial=initial,
        exact=lambda x, t: initial(x),
        t_final=1.0,
        n_elements=40,
        degree=5,
        flux='llf',
        options={'m': m, 'E': E},
    )


# =============================================================================
# DAM BREAK
# =============================================================================

DAM_BREAK_HEIGHT = 0.005
DAM_BREAK_POSITION = 5.0


def dam_break_exact(x: np.ndarray, t: float, h_left: float = DAM_BREAK_HEIGHT,
                    x0: float = DAM_BREAK_POSITION, g: float = 9.81) -> Tuple[np.ndarray, np.ndarray]:
    """
    Dry-bed dam break (Ritter) solution

    Rarefaction fan between x0 - t c0 and x0 + 2 t c0 with c0 = sqrt(g h_left);
    the dry region has h = 0 and hv = 0.

    Raises:
        ConfigurationError: negative time
    """
    if t < 0:
        raise ConfigurationError(f"Exact solution requested at negative time t={t}")
    x = np.asarray(x, dtype=float)
    if t == 0:
        h = np.where(x < x0, h_left, 0.0)
        return h, np.zeros_like(h)

    c0 = math.sqrt(g * h_left)
    xi = (x - x0) / t
    in_fan = (xi > -c0) & (xi < 2.0 * c0)
    h_fan = (2.0 * c0 - xi) ** 2 / (9.0 * g)
    v_fan = 2.0 / 3.0 * (xi + c0)
    h = np.where(xi <= -c0, h_left, np.where(in_fan, h_fan, 0.0))
    hv = np.where(in_fan, h_fan * v_fan, 0.0)
    return h, hv


def dam_break() -> Scenario:
    """Dry-bed dam break on [0, 10], run on a padded periodic mesh"""
    def initial(x):
        return dam_break_exact(x, 0.0)

    return Scenario(
        name='dam_break',
        description='Dam break over a dry bed (Ritter solution)',
        x_left=0.0,
        x_right=10.0,
        g=9.81,
        bottom=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        initial=initial,
        exact=dam_break_exact,
        t_final=6.0,
        n_elements=100,
        degree=2,
        flux='llf',
        limiter=True,
        subcell_threshold=1e-6,
        include_neighbors=True,
        padding=5.0,
    )


# =============================================================================
# ERROR NORMS
# =============================================================================

@dataclass(frozen=True)
class ErrorNorms:
    """Squared L2 errors by quadrature and nodal maximum errors per component"""
    l2_squared_h: float
    l2_squared_hv: float
    linf_h: float
    linf_hv: float

    @property
    def max_error(self) -> float:
        return max(self.linf_h, self.linf_hv)

    def as_dict(self) -> Dict[str, float]:
        return {
            'l2_squared_h': self.l2_squared_h,
            'l2_squared_hv': self.l2_squared_hv,
            'linf_h': self.linf_h,
            'linf_hv': self.linf_hv,
            'max_error': self.max_error,
        }


def error_norms(state: SolutionField, exact: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]],
                mesh: Mesh, op: SbpOperator, window: Optional[slice] = None) -> ErrorNorms:
    """
    Errors of a nodal state against an exact solution

    L2^2 = sum over elements of dx/2 sum_k w_k (u_k - exact(x_k))^2. With
    Gauss nodes this is exact for the polynomial part of the error.

    Args:
        exact: x -> (h, hv)
        window: element slice to score, all elements when None
    """
    window = window or slice(None)
    x = mesh.node_coordinates(op)[window]
    h_exact, hv_exact = exact(x)
    dh = state.h[window] - h_exact
    dhv = state.hv[window] - hv_exact
    scale = 0.5 * mesh.dx

    return ErrorNorms(
        l2_squared_h=float(scale * np.sum(dh * dh @ op.weights)),
        l2_squared_hv=float(scale * np.sum(dhv * dhv @ op.weights)),
        linf_h=float(np.max(np.abs(dh))),
        linf_hv=float(np.max(np.abs(dhv))),
    )


# =============================================================================
# REGISTRY
# =============================================================================

SCENARIOS: Dict[str, Callable[..., Scenario]] = {
    'lake_at_rest': lake_at_rest,
    'smooth_perturbation': smooth_perturbation,
    'emerged_bump': emerged_bump,
    'moving_water': moving_water_equilibrium,
    'dam_break': dam_break,
}


class ScenarioService:
    """Lookup of the registered scenarios"""

    def list_scenarios(self) -> List[Dict[str, Any]]:
        return [self.get_scenario(name).to_dict() for name in SCENARIOS]

    def get_scenario(self, name: str, **options) -> Scenario:
        """
        Build a scenario by name

        Args:
            name: registry key
            **options: factory arguments (moving_water accepts m, E, preset)

        Raises:
            ConfigurationError: unknown name or options the factory does not take
        """
        factory = SCENARIOS.get(name)
        if factory is None:
            logger.error(f"Unknown scenario requested: {name}")
            raise ConfigurationError(f"Unknown scenario '{name}' (choose from {', '.join(SCENARIOS)})")
        options = {k: v for k, v in options.items() if v is not None}
        try:
            return factory(**options)
        except TypeError as e:
            raise ConfigurationError(f"Scenario '{name}' does not accept {sorted(options)}: {str(e)}") from e


# Singleton instance
_scenario_service = None


def get_scenario_service() -> ScenarioService:
    """Get or create scenario service instance"""
    global _scenario_service
    if _scenario_service is None:
        _scenario_service = ScenarioService()
    return _scenario_service


def get_scenario(name: str, **options) -> Scenario:
    return get_scenario_service().get_scenario(name, **options)
