"""
Semi-Discretisation Service
Global right-hand side of the split-form SBP/DG discretisation on a periodic
uniform mesh: volume terms, surface correction terms for general bases,
interface flux coupling and the finite-volume subcell fallback.
"""
import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from django.conf import settings

from apps.solver.exceptions import ConfigurationError, NonFiniteStateError, ShapeMismatchError
from apps.solver.services.fluxes import (
    ExtendedFluxPair,
    FluxParams,
    InterfaceFlux,
    ec_flux_extended,
    get_interface_flux,
)
from apps.solver.services.physics import PhysicsContext, SweState, entropy, velocity
from apps.solver.services.sbp_service import SbpOperator

logger = logging.getLogger(__name__)


# =============================================================================
# MESH AND FIELDS
# =============================================================================

@dataclass(frozen=True)
class Mesh:
    """Uniform periodic partition of [x_left, x_right]"""
    x_left: float
    x_right: float
    n_elements: int
    periodic: bool = True

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise ConfigurationError(f"Empty domain [{self.x_left}, {self.x_right}]")
        if self.n_elements < 1:
            raise ConfigurationError(f"Need at least one element, got {self.n_elements}")
        if not self.periodic:
            raise ConfigurationError("Only periodic meshes are supported")

    @property
    def dx(self) -> float:
        return (self.x_right - self.x_left) / self.n_elements

    def node_coordinates(self, op: SbpOperator) -> np.ndarray:
        """Physical node positions, shape (N, p+1)"""
        left = self.x_left + self.dx * np.arange(self.n_elements)
        return left[:, None] + 0.5 * (op.nodes[None, :] + 1.0) * self.dx


@dataclass
class SolutionField:
    """Nodal water height, discharge and bottom, each of shape (N, p+1)"""
    h: np.ndarray
    hv: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.hv = np.asarray(self.hv, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        if self.h.ndim != 2 or self.h.shape != self.hv.shape or self.h.shape != self.b.shape:
            raise ShapeMismatchError(
                f"Field shapes differ: h{self.h.shape}, hv{self.hv.shape}, b{self.b.shape}"
            )

    @property
    def shape(self) -> Tuple[int, int]:
        return self.h.shape

    def as_array(self) -> np.ndarray:
        """Stacked conserved state, shape (2, N, p+1)"""
        return np.stack([self.h, self.hv])

    @classmethod
    def from_array(cls, u: np.ndarray, b: np.ndarray) -> 'SolutionField':
        return cls(h=u[0], hv=u[1], b=b)

    def copy(self) -> 'SolutionField':
        return SolutionField(h=self.h.copy(), hv=self.hv.copy(), b=self.b)


def _check_shape(op: SbpOperator, *arrays: np.ndarray) -> None:
    for array in arrays:
        if np.shape(array)[-1] != op.size:
            raise ShapeMismatchError(
                f"Expected trailing length {op.size} for degree {op.degree}, got {np.shape(array)}"
            )


# =============================================================================
# SURFACE COEFFICIENTS
# =============================================================================

@dataclass(frozen=True)
class SurfaceCoefficients:
    b1: float; b2: float; b3: float; b4: float
    c1: float; c2: float; c3: float; c4: float
    d1: float; d2: float; d3: float; d4: float; d5: float; d6: float; d7: float; d8: float
    e1: float; e2: float; e3: float
    k1: float; k2: float; k3: float; k4: float; k5: float; k6: float
    k7: float; k8: float; k9: float; k10: float; k11: float
    l1: float; l2: float; l3: float; l4: float; l5: float
    l6: float; l7: float; l8: float; l9: float; l10: float
    m1: float; m2: float; m3: float; m4: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def surface_coefficients(params: FluxParams) -> SurfaceCoefficients:
    """
    Closed-form coefficients of the surface correction ansatz

    Free parameters m4, k9, k10, k11, l10 are taken from params.
    """
    a1, a2 = params.a1, params.a2
    m4, k9, k10, k11, l10 = params.m4, params.k9, params.k10, params.k11, params.l10
    c = (a1 + 3.0 * a2 - 2.0) / 8.0

    return SurfaceCoefficients(
        b1=(3.0 - a1) / 4.0,
        b2=(1.0 + a1) / 4.0 + m4,
        b3=0.0,
        b4=-m4,
        c1=c,
        c2=-c - 2.0 * k10 - 2.0 * k9,
        c3=2.0 * k10 - 2.0 * k11 + 2.0 * k9,
        c4=2.0 * k11,
        d1=(5.0 - 2.0 * a1 - 3.0 * a2) / 8.0,
        d2=(2.0 * a1 + 3.0 * a2 - 1.0) / 8.0 + 2.0 * k10 + 2.0 * k9 + 0.5 * m4,
        d3=0.0,
        d4=0.0,
        d5=2.0 * k11 + 0.5,
        d6=-2.0 * k11,
        d7=-0.5 * m4,
        d8=-2.0 * k10 - 2.0 * k9,
        e1=(1.0 + a1) / 4.0,
        e2=(1.0 - a1) / 4.0 - m4,
        e3=m4,
        k1=0.5 * c,
        k2=-k10,
        k3=-0.5 * c - k9,
        k4=0.0,
        k5=0.0,
        k6=k10 - k11,
        k7=-k10,
        k8=0.0,
        k9=k9,
        k10=k10,
        k11=k11,
        l1=c,
        l2=c + 2.0 * k10 + 2.0 * k9 - l10,
        l3=l10,
        l4=0.0,
        l5=l10 - 2.0 * c - 2.0 * k10 - 2.0 * k9,
        l6=0.0,
        l7=-2.0 * k11,
        l8=2.0 * k11 - l10,
        l9=-l10,
        l10=l10,
        m1=(1.0 + a1) / 4.0,
        m2=-(1.0 + a1) / 4.0 - m4,
        m3=0.0,
        m4=m4,
    )


def coefficient_system_residuals(coeffs: SurfaceCoefficients, params: FluxParams) -> Dict[str, float]:
    """
    Max-norm residuals of the conservation (h, hv) and stability conditions

    Returns:
        {'cons_h': ..., 'cons_hv': ..., 'stab': ...}
    """
    a1, a2 = params.a1, params.a2
    s = coeffs
    c = (a1 + 3.0 * a2 - 2.0) / 8.0

    cons_h = [
        s.b1 - (3.0 - a1) / 4.0,
        s.b2 + s.b3 + s.b4 - (1.0 + a1) / 4.0,
        s.c1 - c,
        s.c2 + s.c3 + s.c4 + c,
    ]
    cons_hv = [
        s.d1 - (5.0 - 2.0 * a1 - 3.0 * a2) / 8.0,
        s.d2 + s.d7 + s.d8 - (2.0 * a1 + 3.0 * a2 - 1.0) / 8.0,
        s.d3 + s.d5 + s.d6 - 0.5,
        s.d4,
        s.e1 - (1.0 + a1) / 4.0,
        s.e2 + s.e3 - (1.0 - a1) / 4.0,
        s.k1 - 0.5 * c,
        s.k2 + s.k6 + s.k11,
        s.k3 + s.k9 + 0.5 * c,
        s.k4 + s.k7 + s.k10,
        s.k5 + s.k8,
        s.l1 - c,
        s.l2 + s.l5 + s.l6 + c,
        s.l3 + s.l7 + s.l8,
        s.l4 + s.l9 + s.l10,
        s.m1 - (1.0 + a1) / 4.0,
        s.m2 + s.m3 + s.m4 + (1.0 + a1) / 4.0,
    ]
    stab = [
        s.b1 + s.b4 + s.e3 - (3.0 - a1) / 4.0,
        s.b2 + s.e2 - 0.5,
        s.b3 + s.e1 - (1.0 + a1) / 4.0,
        s.c1 - 0.5 * s.b4 + s.d7 - c,
        s.c2 - 0.5 * s.b2 + s.d2,
        s.c3 - 0.5 * s.b1 + s.d5 + s.d8 - (a1 + 1.0) / 8.0,
        s.c4 - 0.5 * s.b3 + s.d1 + s.d6 - (5.0 - 2.0 * a1 - 3.0 * a2) / 8.0,
        s.b1 + s.m3 - (3.0 - a1) / 4.0,
        s.b2 + s.m2,
        s.b3 + s.m1 - (a1 + 1.0) / 4.0,
        s.b4 + s.m4,
        s.c1 + s.l6 - c,
        s.c2 + s.l2 + s.l10,
        s.c3 + s.l5 + s.l8 + 2.0 * c,
        s.c4 + s.l1 + s.l7 - c,
        s.l4,
        -0.5 * s.c1 - 0.5 * s.c3 + s.k6 + s.k9 + 0.5 * c,
        -0.5 * s.c2 + s.k3 + s.k7,
        -0.5 * s.c4 + s.k1 + s.k11 - 0.5 * c,
        s.d3,
        s.d4,
        s.k2 + s.k10,
        s.k4 + s.k8,
        s.k5,
        s.l3 + s.l9,
    ]
    return {
        'cons_h': float(np.max(np.abs(cons_h))),
        'cons_hv': float(np.max(np.abs(cons_hv))),
        'stab': float(np.max(np.abs(stab))),
    }


# =============================================================================
# VOLUME TERMS
# =============================================================================

def volume_terms(h: np.ndarray, hv: np.ndarray, b: np.ndarray, op: SbpOperator,
                 params: FluxParams, ctx: PhysicsContext) -> Tuple[np.ndarray, np.ndarray]:
    """
    Split-form volume terms on the reference element

    Args:
        h, hv, b: nodal arrays (..., p+1)
        op: diagonal-norm nodal SBP operator

    Returns:
        (vol_h, vol_hv); the rate contribution is minus these values
    """
    _check_shape(op, h, hv, b)
    g = ctx.g
    a1, a2 = params.a1, params.a2
    c8 = (a1 + 3.0 * a2 - 2.0) / 8.0
    D = op.differentiate

    v = velocity(SweState(h=h, hv=hv), ctx)
    hv = h * v
    v2 = v * v
    Dv, Dh, Db = D(v), D(h), D(b)
    Dv2 = D(v2)
    D_hv = D(hv)

    vol_h = ((3.0 - a1) / 4.0 * D_hv
             + (1.0 + a1) / 4.0 * (h * Dv + v * Dh)
             + c8 / g * (D(v2 * v) - v * Dv2 - v2 * Dv))

    vol_hv = ((1.0 + a1) / 4.0 * g * D(h * h)
              + (1.0 - a1) / 2.0 * g * h * Dh
              - (2.0 * a1 + 3.0 * a2 - 5.0) / 8.0 * D(hv * v)
              + (2.0 * a1 + 3.0 * a2 - 1.0) / 8.0 * (h * Dv2 + v2 * Dh)
              + 0.5 * (hv * Dv + v * D_hv)
              + c8 / (2.0 * g) * (D(v2 * v2) - 2.0 * v2 * Dv2)
              + (3.0 - a1) / 4.0 * g * h * Db
              + (1.0 + a1) / 4.0 * g * (D(h * b) - b * Dh)
              + c8 * (D(b * v2) - b * Dv2 - 2.0 * v * D(b * v) + v2 * Db + 2.0 * b * v * Dv))
    return vol_h, vol_hv


def volume_terms_flux_differencing(h: np.ndarray, hv: np.ndarray, b: np.ndarray, op: SbpOperator,
                                   params: FluxParams, ctx: PhysicsContext) -> Tuple[np.ndarray, np.ndarray]:
    """Volume terms as sum_k 2 D_ik f_ext(u_i, u_k) with the extended EC flux"""
    _check_shape(op, h, hv, b)
    h = np.asarray(h, dtype=float)
    hv = np.asarray(hv, dtype=float)
    b = np.asarray(b, dtype=float)
    ui = SweState(h=h[..., :, None], hv=hv[..., :, None])
    uk = SweState(h=h[..., None, :], hv=hv[..., None, :])
    pair = ec_flux_extended(ui, uk, b[..., :, None], b[..., None, :], params, ctx)
    D = op.D
    vol_h = 2.0 * np.sum(D * pair.f_h, axis=-1)
    vol_hv = 2.0 * np.sum(D * pair.f_hv_into_left, axis=-1)
    return vol_h, vol_hv


# =============================================================================
# SURFACE CORRECTION TERMS
# =============================================================================

def surface_correction_terms(h: np.ndarray, hv: np.ndarray, b: np.ndarray, f_h: np.ndarray,
                             op: SbpOperator, coeffs: SurfaceCoefficients,
                             ctx: PhysicsContext) -> Tuple[np.ndarray, np.ndarray]:
    """
    Surface correction terms of the general-basis ansatz

    Args:
        h, hv, b: nodal arrays (..., p+1)
        f_h: mass component of the surface flux at the element boundaries (..., 2)
        op: SBP operator
        coeffs: resolved ansatz coefficients

    Returns:
        (surf_h, surf_hv) nodal arrays
    """
    _check_shape(op, h, hv, b)
    g = ctx.g
    s = coeffs
    P = op.lift
    R = op.restrict

    v = velocity(SweState(h=h, hv=hv), ctx)
    hv = h * v
    v2 = v * v
    Rh, Rv, Rb = R(h), R(v), R(b)
    Rhv, Rv2, Rv3 = R(hv), R(v2), R(v2 * v)
    Rbv = R(b * v)

    surf_h = (s.b1 * P(Rhv)
              + s.b2 * P(Rh * Rv)
              + s.b3 * h * P(Rv)
              + s.b4 * v * P(Rh)
              + s.c1 / g * P(Rv3)
              + s.c2 / g * P(Rv * Rv2)
              + s.c3 / g * v * P(Rv2)
              + s.c4 / g * v2 * P(Rv))

    surf_hv = (s.d1 * P(R(hv * v))
               + s.d2 * P(Rh * Rv2)
               + s.d3 * P(Rhv * Rv)
               + s.d4 * P(Rh * Rv * Rv)
               + s.d5 * v * P(Rhv)
               + s.d6 * hv * P(Rv)
               + s.d7 * v2 * P(Rh)
               + s.d8 * h * P(Rv2)
               # hydrostatic part
               + s.e1 * g * P(R(h * h))
               + s.e2 * g * P(Rh * Rh)
               + s.e3 * g * h * P(Rh)
               # velocity corrections
               + s.k1 / g * P(R(v2 * v2))
               + s.k2 / g * P(Rv * Rv3)
               + s.k3 / g * P(Rv2 * Rv2)
               + s.k4 / g * P(Rv * Rv * Rv2)
               + s.k5 / g * P(Rv ** 4)
               + s.k6 / g * v * P(Rv3)
               + s.k7 / g * v * P(Rv * Rv2)
               + s.k8 / g * v * P(Rv ** 3)
               + s.k9 / g * v2 * P(Rv2)
               + s.k10 / g * v2 * P(Rv * Rv)
               + s.k11 / g * v2 * v * P(Rv)
               # bottom coupling
               + s.l1 * P(R(b * v2))
               + s.l2 * P(Rb * Rv2)
               + s.l3 * P(Rbv * Rv)
               + s.l4 * P(Rb * Rv * Rv)
               + s.l5 * b * P(Rv2)
               + s.l6 * v2 * P(Rb)
               + s.l7 * b * v * P(Rv)
               + s.l8 * v * P(Rbv)
               + s.l9 * b * P(Rv * Rv)
               + s.l10 * v * P(Rb * Rv)
               + s.m1 * g * P(R(b * h))
               + s.m2 * g * P(Rb * Rh)
               + s.m3 * g * h * P(Rb)
               + s.m4 * g * b * P(Rh)
               # surface flux coupling
               - 0.5 * v * P(f_h)
               + 0.5 * P(f_h * Rv))
    return surf_h, surf_hv


def reduced_surface_terms_one_parameter(h: np.ndarray, hv: np.ndarray, b: np.ndarray,
                                        f_h: np.ndarray, op: SbpOperator, a1: float, m4: float,
                                        ctx: PhysicsContext) -> Tuple[np.ndarray, np.ndarray]:
    """Surface correction terms for a2 = (2 - a1)/3 with only m4 free"""
    _check_shape(op, h, hv, b)
    g = ctx.g
    P = op.lift
    R = op.restrict

    v = velocity(SweState(h=h, hv=hv), ctx)
    hv = h * v
    v2 = v * v
    Rh, Rv, Rb = R(h), R(v), R(b)
    Rhv = R(hv)
    mixed = (a1 + 1.0 + 4.0 * m4)

    surf_h = ((3.0 - a1) / 4.0 * P(Rhv)
              + mixed / 4.0 * P(Rh * Rv)
              - m4 * v * P(Rh))
    surf_hv = ((3.0 - a1) / 8.0 * P(R(hv * v))
               + mixed / 8.0 * P(Rh * R(v2))
               + 0.5 * v * P(Rhv)
               - 0.5 * m4 * v2 * P(Rh)
               + (a1 + 1.0) / 4.0 * g * P(R(h * h))
               + (1.0 - a1 - 4.0 * m4) / 4.0 * g * P(Rh * Rh)
               + m4 * g * h * P(Rh)
               + (a1 + 1.0) / 4.0 * g * P(R(b * h))
               - mixed / 4.0 * g * P(Rb * Rh)
               + m4 * g * b * P(Rh)
               - 0.5 * v * P(f_h)
               + 0.5 * P(f_h * Rv))
    return surf_h, surf_hv


def boundary_flux_terms(h: np.ndarray, hv: np.ndarray, op: SbpOperator,
                        ctx: PhysicsContext) -> Tuple[np.ndarray, np.ndarray]:
    """Lifted physical flux at the boundary, P(R f(u)); the Lobatto surface terms"""
    v = velocity(SweState(h=h, hv=hv), ctx)
    hv = h * v
    P = op.lift
    R = op.restrict
    return P(R(hv)), P(R(hv * v + 0.5 * ctx.g * h * h))


# =============================================================================
# SUBCELLS
# =============================================================================

@dataclass(frozen=True)
class SubcellConfig:
    """FV subcell activation; disabled when threshold is None"""
    threshold: Optional[float] = None
    include_neighbors: bool = False

    @property
    def enabled(self) -> bool:
        return self.threshold is not None


def subcell_detector(h: np.ndarray, threshold: float, include_neighbors: bool = False) -> np.ndarray:
    """
    Flag elements whose minimum nodal height is below threshold

    Args:
        h: nodal heights (N, p+1)
        include_neighbors: also flag elements next to a flagged one (periodic)

    Returns:
        Boolean mask (N,)
    """
    element_min = np.min(np.atleast_2d(h), axis=-1)
    if include_neighbors:
        element_min = np.minimum(element_min, np.minimum(np.roll(element_min, 1),
                                                         np.roll(element_min, -1)))
    return element_min < threshold


def fv_subcell_rhs(h: np.ndarray, hv: np.ndarray, b: np.ndarray, op: SbpOperator,
                   flux: InterfaceFlux, params: FluxParams, boundary: ExtendedFluxPair,
                   ctx: PhysicsContext) -> Tuple[np.ndarray, np.ndarray]:
    """
    First-order FV update on subcells of width w_k (reference scale)

    Args:
        h, hv, b: nodal arrays (M, p+1) of the subcell elements
        boundary: fluxes at the element boundaries, arrays (M, 2) for
            the left and right face, computed from the outer nodal values

    Returns:
        (rate_h, rate_hv) on the reference element; multiply by 2/dx
    """
    _check_shape(op, h, hv, b)
    n_faces = op.size + 1
    shape = h.shape[:-1] + (n_faces,)
    face_h = np.empty(shape)
    into_left = np.empty(shape)
    into_right = np.empty(shape)

    face_h[..., 0] = boundary.f_h[..., 0]
    into_right[..., 0] = boundary.f_hv_into_right[..., 0]
    face_h[..., -1] = boundary.f_h[..., 1]
    into_left[..., -1] = boundary.f_hv_into_left[..., 1]

    if op.size > 1:
        inner = flux(SweState(h=h[..., :-1], hv=hv[..., :-1]), SweState(h=h[..., 1:], hv=hv[..., 1:]),
                     b[..., :-1], b[..., 1:], params, ctx)
        face_h[..., 1:-1] = inner.f_h
        into_left[..., 1:-1] = inner.f_hv_into_left
        into_right[..., 1:-1] = inner.f_hv_into_right

    w = op.weights
    rate_h = -(face_h[..., 1:] - face_h[..., :-1]) / w
    rate_hv = -(into_left[..., 1:] - into_right[..., :-1]) / w
    return rate_h, rate_hv


# =============================================================================
# DIAGNOSTICS
# =============================================================================

@dataclass(frozen=True)
class Diagnostics:
    mass: float
    momentum: float
    entropy: float
    entropy_rate: float


def diagnostics(state: SolutionField, mesh: Mesh, op: SbpOperator, ctx: PhysicsContext,
                rate: Optional[Tuple[np.ndarray, np.ndarray]] = None) -> Diagnostics:
    """
    Quadrature totals of mass, momentum and entropy, plus the entropy rate

    The entropy rate is sum (w1^T M rate_h + w2^T M rate_hv) dx/2 and is 0
    when no rate is given.
    """
    scale = 0.5 * mesh.dx
    w = op.weights
    conserved = SweState(h=state.h, hv=state.hv)

    def total(values: np.ndarray) -> float:
        return float(scale * np.sum(values @ w))

    entropy_rate = 0.0
    if rate is not None:
        v = velocity(conserved, ctx)
        w1 = ctx.g * (state.h + state.b) - 0.5 * v * v
        entropy_rate = total(w1 * rate[0] + v * rate[1])

    return Diagnostics(
        mass=total(state.h),
        momentum=total(state.hv),
        entropy=total(entropy(conserved, state.b, ctx)),
        entropy_rate=entropy_rate,
    )


# =============================================================================
# GLOBAL RIGHT-HAND SIDE
# =============================================================================

@dataclass
class RhsResult:
    rate_h: np.ndarray
    rate_hv: np.ndarray
    subcell_mask: Optional[np.ndarray] = None

    @property
    def n_subcell_elements(self) -> int:
        return 0 if self.subcell_mask is None else int(np.count_nonzero(self.subcell_mask))


class SemiDiscretisation:
    """
    Global spatial operator for one mesh, basis and flux configuration

    Interface fluxes are evaluated once per interface from the element
    traces; elements flagged by the subcell detector are advanced with the
    FV subcell update instead of the high-order terms.
    """

    def __init__(
        self,
        mesh: Mesh,
        op: SbpOperator,
        ctx: PhysicsContext,
        vol_params: FluxParams,
        surface_flux: str = 'ec',
        surface_params: Optional[FluxParams] = None,
        subcell: Optional[SubcellConfig] = None,
    ):
        self.mesh = mesh
        self.op = op
        self.ctx = ctx
        self.vol_params = vol_params
        self.surface_flux_name = surface_flux
        self.surface_flux = get_interface_flux(surface_flux)
        self.surface_params = surface_params or vol_params
        self.subcell = subcell or SubcellConfig()
        self.coeffs = surface_coefficients(vol_params)
        self.nan_guard = settings.SOLVER['NAN_GUARD']
        self.last_subcell_count = 0

    def _traces(self, h: np.ndarray, v: np.ndarray, b: np.ndarray,
                fv_mask: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        R = self.op.restrict
        h_tr, v_tr, b_tr = R(h), R(v), R(b)
        if np.any(fv_mask):
            # subcell elements couple through their outer nodal values
            mask = fv_mask[:, None]
            h_tr = np.where(mask, h[:, [0, -1]], h_tr)
            v_tr = np.where(mask, v[:, [0, -1]], v_tr)
            b_tr = np.where(mask, b[:, [0, -1]], b_tr)
        return np.maximum(h_tr, 0.0), v_tr, b_tr

    def interface_fluxes(self, h: np.ndarray, v: np.ndarray, b: np.ndarray,
                         fv_mask: np.ndarray) -> ExtendedFluxPair:
        """Flux at interface j between element j and element (j+1) mod N"""
        h_tr, v_tr, b_tr = self._traces(h, v, b, fv_mask)
        uL = SweState.from_primitive(h_tr[:, 1], v_tr[:, 1])
        uR = SweState.from_primitive(np.roll(h_tr[:, 0], -1), np.roll(v_tr[:, 0], -1))
        return self.surface_flux(uL, uR, b_tr[:, 1], np.roll(b_tr[:, 0], -1),
                                 self.surface_params, self.ctx)

    def subcell_mask(self, h: np.ndarray) -> np.ndarray:
        if not self.subcell.enabled:
            return np.zeros(h.shape[0], dtype=bool)
        return subcell_detector(h, self.subcell.threshold, self.subcell.include_neighbors)

    def global_rhs(self, state: SolutionField) -> RhsResult:
        """
        Time derivative of (h, hv) for the whole mesh

        Raises:
            NonFiniteStateError: a rate is NaN or infinite
        """
        h, hv, b = state.h, state.hv, state.b
        if h.shape != (self.mesh.n_elements, self.op.size):
            raise ShapeMismatchError(
                f"Field shape {h.shape} does not match mesh ({self.mesh.n_elements}, {self.op.size})"
            )
        ctx = self.ctx
        v = velocity(SweState(h=h, hv=hv), ctx)
        fv_mask = self.subcell_mask(h)

        pair = self.interface_fluxes(h, v, b, fv_mask)
        f_h = np.stack([np.roll(pair.f_h, 1), pair.f_h], axis=-1)
        f_hv = np.stack([np.roll(pair.f_hv_into_right, 1), pair.f_hv_into_left], axis=-1)
        scale = 2.0 / self.mesh.dx

        rate_h = np.empty_like(h)
        rate_hv = np.empty_like(h)
        dg = ~fv_mask
        if np.any(dg):
            vol_h, vol_hv = volume_terms(h[dg], hv[dg], b[dg], self.op, self.vol_params, ctx)
            surf_h, surf_hv = surface_correction_terms(
                h[dg], hv[dg], b[dg], f_h[dg], self.op, self.coeffs, ctx
            )
            rate_h[dg] = (-vol_h + surf_h - self.op.lift(f_h[dg])) * scale
            rate_hv[dg] = (-vol_hv + surf_hv - self.op.lift(f_hv[dg])) * scale
        if np.any(fv_mask):
            boundary = ExtendedFluxPair(
                f_h=f_h[fv_mask],
                f_hv_into_left=f_hv[fv_mask],
                f_hv_into_right=f_hv[fv_mask],
            )
            sub_h, sub_hv = fv_subcell_rhs(h[fv_mask], hv[fv_mask], b[fv_mask], self.op,
                                           self.surface_flux, self.surface_params, boundary, ctx)
            rate_h[fv_mask] = sub_h * scale
            rate_hv[fv_mask] = sub_hv * scale

        self.last_subcell_count = int(np.count_nonzero(fv_mask))
        if self.nan_guard:
            self._guard(rate_h, 'rate_h')
            self._guard(rate_hv, 'rate_hv')
        return RhsResult(rate_h=rate_h, rate_hv=rate_hv, subcell_mask=fv_mask)

    def _guard(self, rate: np.ndarray, component: str) -> None:
        bad = ~np.isfinite(rate)
        if np.any(bad):
            element = int(np.argmax(np.any(bad, axis=-1)))
            logger.error(f"Non-finite {component} in element {element}")
            raise NonFiniteStateError(component, element=element)

    def rhs(self, u: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Stacked rate for a stacked state of shape (2, N, p+1)"""
        result = self.global_rhs(SolutionField.from_array(u, b))
        return np.stack([result.rate_h, result.rate_hv])

    def diagnostics(self, state: SolutionField, with_rate: bool = True) -> Diagnostics:
        rate = None
        if with_rate:
            result = self.global_rhs(state)
            rate = (result.rate_h, result.rate_hv)
        return diagnostics(state, self.mesh, self.op, self.ctx, rate)
