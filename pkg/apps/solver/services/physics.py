"""
Shallow Water Physics
Pointwise quantities of the 1D shallow water equations with bottom topography:
conversions between conserved, primitive and entropy variables, the entropy
pair, flux potential, entropy Jacobian and eigenvector scaling.

All functions accept scalars or numpy arrays of matching shape.
"""
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from django.conf import settings

from apps.solver.exceptions import PhysicalDomainError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class PhysicsContext:
    """Gravitational constant, dry tolerance and velocity desingularisation height"""
    g: float = 1.0
    h_dry: float = 1e-12
    h_velocity: float = 1e-6

    def __post_init__(self):
        if not self.g > 0:
            raise PhysicalDomainError(f"Gravitational constant must be positive, got {self.g}")
        if not self.h_dry > 0:
            raise PhysicalDomainError(f"Dry tolerance must be positive, got {self.h_dry}")
        if self.h_velocity < self.h_dry:
            raise PhysicalDomainError(
                f"Velocity desingularisation height {self.h_velocity} is below the dry tolerance {self.h_dry}")

    @classmethod
    def from_settings(cls, g: float) -> 'PhysicsContext':
        return cls(g=g, h_dry=settings.SOLVER['H_DRY'], h_velocity=settings.SOLVER['H_VELOCITY'])


@dataclass(frozen=True)
class SweState:
    """Conserved variables (water height, discharge)"""
    h: ArrayLike
    hv: ArrayLike

    @classmethod
    def from_primitive(cls, h: ArrayLike, v: ArrayLike) -> 'SweState':
        h = np.asarray(h, dtype=float)
        return cls(h=h, hv=h * np.asarray(v, dtype=float))


@dataclass(frozen=True)
class EntropyVars:
    """Entropy variables w1 = g(h+b) - v^2/2, w2 = v"""
    w1: ArrayLike
    w2: ArrayLike


def velocity(s: SweState, ctx: PhysicsContext) -> np.ndarray:
    """
    Desingularised velocity

    Returns hv/h for h >= h_velocity, 2 h hv / (h^2 + h_velocity^2) for
    h_dry < h < h_velocity and 0 elsewhere. Both branches agree at
    h_velocity; below it |v| stays bounded by |hv| / h_velocity. Heights in
    [-h_dry, 0) are rounding noise and treated as dry.

    Raises:
        PhysicalDomainError: height below -h_dry or non-finite input
    """
    h = np.asarray(s.h, dtype=float)
    hv = np.asarray(s.hv, dtype=float)
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(hv))):
        raise PhysicalDomainError("Non-finite water height or discharge")
    if np.any(h < -ctx.h_dry):
        raise PhysicalDomainError(f"Negative water height {float(np.min(h)):.3e}")
    deep = h >= ctx.h_velocity
    shallow = 2.0 * h * hv / (h * h + ctx.h_velocity * ctx.h_velocity)
    v = np.where(deep, hv / np.where(deep, h, 1.0), shallow)
    return np.where(h > ctx.h_dry, v, 0.0)


def physical_flux(s: SweState, ctx: PhysicsContext):
    """(hv, h v^2 + g h^2 / 2)"""
    h = np.asarray(s.h, dtype=float)
    v = velocity(s, ctx)
    hv = h * v
    return hv, hv * v + 0.5 * ctx.g * h * h


def entropy(s: SweState, b: ArrayLike, ctx: PhysicsContext) -> np.ndarray:
    """Total energy h v^2 / 2 + g h^2 / 2 + g h b"""
    h = np.asarray(s.h, dtype=float)
    v = velocity(s, ctx)
    return 0.5 * h * v * v + 0.5 * ctx.g * h * h + ctx.g * h * np.asarray(b, dtype=float)


def entropy_flux(s: SweState, b: ArrayLike, ctx: PhysicsContext) -> np.ndarray:
    h = np.asarray(s.h, dtype=float)
    v = velocity(s, ctx)
    return 0.5 * h * v ** 3 + ctx.g * h * h * v + ctx.g * np.asarray(b, dtype=float) * h * v


def flux_potential(s: SweState, ctx: PhysicsContext) -> np.ndarray:
    """psi = g h^2 v / 2 (flat bottom)"""
    h = np.asarray(s.h, dtype=float)
    return 0.5 * ctx.g * h * h * velocity(s, ctx)


def entropy_variables(s: SweState, b: ArrayLike, ctx: PhysicsContext) -> EntropyVars:
    h = np.asarray(s.h, dtype=float)
    v = velocity(s, ctx)
    return EntropyVars(w1=ctx.g * (h + np.asarray(b, dtype=float)) - 0.5 * v * v, w2=v)


def conserved_from_entropy(w: EntropyVars, b: ArrayLike, ctx: PhysicsContext) -> SweState:
    """
    Invert the entropy variables for a given bottom

    Raises:
        PhysicalDomainError: the reconstructed height is not positive
    """
    w1 = np.asarray(w.w1, dtype=float)
    w2 = np.asarray(w.w2, dtype=float)
    h = (w1 + 0.5 * w2 * w2) / ctx.g - np.asarray(b, dtype=float)
    if np.any(h <= 0):
        raise PhysicalDomainError("Entropy variables do not correspond to a wet state")
    return SweState(h=h, hv=h * w2)


def entropy_jacobian(s: SweState, ctx: PhysicsContext) -> np.ndarray:
    """
    du/dw = [[1/g, v/g], [v/g, h + v^2/g]]

    Singular for h = 0; callers guard. Trailing axes are (2, 2).
    """
    h = np.asarray(s.h, dtype=float)
    v = velocity(s, ctx)
    g = ctx.g
    return np.stack([
        np.stack([np.full_like(h, 1.0 / g), v / g], axis=-1),
        np.stack([v / g, h + v * v / g], axis=-1),
    ], axis=-2)


def entropy_hessian(s: SweState, ctx: PhysicsContext) -> np.ndarray:
    """dw/du = (1/h) [[g h + v^2, -v], [-v, 1]] for h > 0"""
    h = np.asarray(s.h, dtype=float)
    if np.any(h <= 0):
        raise PhysicalDomainError("Entropy Hessian requires positive water height")
    v = velocity(s, ctx)
    return np.stack([
        np.stack([(ctx.g * h + v * v) / h, -v / h], axis=-1),
        np.stack([-v / h, 1.0 / h], axis=-1),
    ], axis=-2)


def barth_scaling(s: SweState, ctx: PhysicsContext) -> np.ndarray:
    """
    Scaled eigenvector matrix of the flux Jacobian

    R = (1/sqrt(2g)) [[1, 1], [v - c, v + c]] with c = sqrt(g h), so that
    R R^T equals the entropy Jacobian.
    """
    h = np.maximum(np.asarray(s.h, dtype=float), 0.0)
    v = velocity(s, ctx)
    c = np.sqrt(ctx.g * h)
    scale = 1.0 / np.sqrt(2.0 * ctx.g)
    ones = np.ones_like(h)
    return scale * np.stack([
        np.stack([ones, ones], axis=-1),
        np.stack([v - c, v + c], axis=-1),
    ], axis=-2)


def barth_scaling_degenerate(s: SweState, ctx: PhysicsContext) -> np.ndarray:
    """True where the scaled eigenvectors are parallel (dry state)"""
    return np.asarray(s.h, dtype=float) <= ctx.h_dry


def max_wave_speed(s: SweState, ctx: PhysicsContext) -> np.ndarray:
    """|v| + sqrt(g max(h, 0))"""
    h = np.asarray(s.h, dtype=float)
    return np.abs(velocity(s, ctx)) + np.sqrt(ctx.g * np.maximum(h, 0.0))
