"""
Positivity Limiter
Linear scaling limiter keeping the nodal water height non-negative while
preserving element means. The minimum is taken over the solution nodes and
an auxiliary set of Lobatto check nodes.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from apps.solver.exceptions import LimiterPreconditionError
from apps.solver.services.physics import PhysicsContext
from apps.solver.services.sbp_service import (
    SbpOperator,
    lagrange_interpolation_matrix,
    lobatto_legendre_nodes,
)

logger = logging.getLogger(__name__)


def check_degree(p: int) -> int:
    """Smallest q >= 1 with 2q - 1 >= p"""
    return max(1, math.ceil((p + 1) / 2))


@dataclass(frozen=True, eq=False)
class LimiterConfig:
    """Lobatto check nodes and the interpolation onto them"""
    q: int
    check_nodes: np.ndarray
    check_weights: np.ndarray
    interpolation: np.ndarray
    enabled: bool = True

    @classmethod
    def for_operator(cls, op: SbpOperator, enabled: bool = True) -> 'LimiterConfig':
        q = check_degree(op.degree)
        nodes, weights = lobatto_legendre_nodes(q)
        return cls(
            q=q,
            check_nodes=nodes,
            check_weights=weights,
            interpolation=lagrange_interpolation_matrix(op.nodes, nodes),
            enabled=enabled,
        )

    def min_weight(self, op: SbpOperator) -> float:
        return float(min(op.weights.min(), self.check_weights.min()))


def scale_towards_mean(values: np.ndarray, theta: np.ndarray, op: SbpOperator,
                       mean: Optional[np.ndarray] = None) -> np.ndarray:
    """mean + theta (values - mean), element-wise over the last axis"""
    if mean is None:
        mean = op.mean(values)
    return mean[..., None] + np.asarray(theta)[..., None] * (values - mean[..., None])


def positivity_limit(h: np.ndarray, op: SbpOperator, cfg: LimiterConfig, ctx: PhysicsContext,
                     nodal_only: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Scale nodal heights towards the element mean until the check set is non-negative

    Args:
        h: nodal heights (N, p+1)
        nodal_only: optional mask (N,) of elements checked at solution nodes only

    Returns:
        (limited h, theta per element)

    Raises:
        LimiterPreconditionError: an element mean is below -h_dry
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    mean = op.mean(h)
    negative = mean < -ctx.h_dry
    if np.any(negative):
        element = int(np.argmax(negative))
        raise LimiterPreconditionError(element, float(mean[element]))
    mean = np.maximum(mean, 0.0)

    node_min = np.min(h, axis=-1)
    check_min = np.minimum(node_min, np.min(h @ cfg.interpolation.T, axis=-1))
    if nodal_only is not None:
        check_min = np.where(nodal_only, node_min, check_min)

    with np.errstate(divide='ignore', invalid='ignore'):
        theta = np.where(check_min >= 0.0, 1.0, mean / (mean - check_min))
    theta = np.clip(theta, 0.0, 1.0)

    limited = np.where((theta < 1.0)[:, None], scale_towards_mean(h, theta, op, mean), h)
    return limited, theta


def limit_discharge_consistency(hv: np.ndarray, theta: np.ndarray, op: SbpOperator) -> np.ndarray:
    """Scale discharge about its element mean with the height's theta"""
    hv = np.atleast_2d(np.asarray(hv, dtype=float))
    return np.where((np.asarray(theta) < 1.0)[:, None], scale_towards_mean(hv, theta, op), hv)


class PositivityLimiter:
    """Applies the scaling limiter to a stacked state after each stage"""

    def __init__(self, op: SbpOperator, ctx: PhysicsContext, enabled: bool = True,
                 limit_discharge: bool = False):
        self.op = op
        self.ctx = ctx
        self.cfg = LimiterConfig.for_operator(op, enabled=enabled)
        self.limit_discharge = limit_discharge
        self.nodal_only: Optional[np.ndarray] = None
        self.last_limited = 0

    @property
    def enabled(self) -> bool:
        return self.cfg.enabled

    def apply(self, u: np.ndarray) -> Tuple[np.ndarray, int]:
        """
        Limit a state of shape (2, N, p+1)

        Returns:
            (limited state, number of limited elements)
        """
        if not self.enabled:
            return u, 0
        h, theta = positivity_limit(u[0], self.op, self.cfg, self.ctx, self.nodal_only)
        hv = limit_discharge_consistency(u[1], theta, self.op) if self.limit_discharge else u[1]
        limited = int(np.count_nonzero(theta < 1.0))
        if limited:
            logger.debug(f"Positivity limiter active in {limited} elements")
        self.last_limited = limited
        return np.stack([h, hv]), limited

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.apply(u)[0]
