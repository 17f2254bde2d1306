"""
Solver Exceptions
Error hierarchy shared by the solver, scenario and experiment apps
"""
from typing import Optional


class SolverError(Exception):
    """Base class for every error raised by the solver stack"""


class ConfigurationError(SolverError):
    """Invalid run configuration, unknown scenario or unknown flux name"""


class UnsupportedDegreeError(ConfigurationError):
    """Requested polynomial degree is negative or above the configured maximum"""

    def __init__(self, degree: int, max_degree: int):
        self.degree = degree
        self.max_degree = max_degree
        super().__init__(f"Unsupported degree p={degree} (allowed 0..{max_degree})")


class ShapeMismatchError(SolverError):
    """Array shapes do not match the operator or mesh"""


class PhysicalDomainError(SolverError):
    """Input outside the physical domain (negative height, non-finite values)"""


class LimiterPreconditionError(SolverError):
    """Negative element mean height; the step violated its CFL bound upstream"""

    def __init__(self, element: int, mean: float):
        self.element = element
        self.mean = mean
        super().__init__(f"Negative mean height {mean:.3e} in element {element}")


class NonFiniteStateError(SolverError):
    """NaN or Inf detected in a rate or state"""

    def __init__(self, component: str, element: Optional[int] = None,
                 step: Optional[int] = None):
        self.component = component
        self.element = element
        self.step = step
        where = []
        if step is not None:
            where.append(f"step {step}")
        if element is not None:
            where.append(f"element {element}")
        location = ", ".join(where) if where else "unknown location"
        super().__init__(f"Non-finite {component} at {location}")


class InfeasibleEquilibriumError(ConfigurationError):
    """No subcritical water height satisfies the moving-water energy relation"""
