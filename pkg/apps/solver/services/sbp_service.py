"""
SBP Operator Service
Nodal summation-by-parts operators on the reference element [-1, 1]
for Lobatto-Legendre and Gauss-Legendre node families.

Nodes come from Newton iterations on the Legendre three-term recurrence,
derivative and restriction matrices from barycentric Lagrange formulas.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from django.conf import settings

from apps.solver.exceptions import ConfigurationError, ShapeMismatchError, UnsupportedDegreeError

logger = logging.getLogger(__name__)

LOBATTO = 'lobatto'
GAUSS = 'gauss'
NODE_FAMILIES = (LOBATTO, GAUSS)

BOUNDARY_SIGNS = np.array([-1.0, 1.0])


@dataclass(frozen=True, eq=False)
class SbpOperator:
    """
    One reference-element discretisation (M, D, R, B)

    The diagonal mass matrix is stored as its weight vector. All arrays are
    read-only once the operator is built.
    """
    degree: int
    family: str
    nodes: np.ndarray
    weights: np.ndarray
    D: np.ndarray
    R: np.ndarray

    @property
    def size(self) -> int:
        return self.degree + 1

    @property
    def M(self) -> np.ndarray:
        return np.diag(self.weights)

    @property
    def B(self) -> np.ndarray:
        return np.diag(BOUNDARY_SIGNS)

    @property
    def includes_boundary(self) -> bool:
        return self.family == LOBATTO

    def lift(self, boundary_values: np.ndarray) -> np.ndarray:
        """
        Apply M^{-1} R^T B to boundary data

        Args:
            boundary_values: array (..., 2) with left/right boundary values

        Returns:
            Nodal array (..., p+1)
        """
        return ((boundary_values * BOUNDARY_SIGNS) @ self.R) / self.weights

    def restrict(self, nodal: np.ndarray) -> np.ndarray:
        """Boundary values R u for nodal arrays (..., p+1) -> (..., 2)"""
        return nodal @ self.R.T

    def differentiate(self, nodal: np.ndarray) -> np.ndarray:
        """D u for nodal arrays (..., p+1)"""
        return nodal @ self.D.T

    def mean(self, nodal: np.ndarray) -> np.ndarray:
        """Element mean (1^T M u) / (1^T M 1)"""
        return (nodal @ self.weights) / self.weights.sum()


def _legendre(n: int, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """P_n(x) and P_{n-1}(x) by the three-term recurrence"""
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev, np.zeros_like(x)
    p_curr = x.copy()
    for k in range(2, n + 1):
        p_prev, p_curr = p_curr, ((2 * k - 1) * x * p_curr - (k - 1) * p_prev) / k
    return p_curr, p_prev


def _symmetrize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x - x[::-1])


def gauss_legendre_nodes(p: int, tol: float = 1e-15, max_iter: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights (p+1 points)

    Args:
        p: polynomial degree
        tol: absolute Newton tolerance

    Returns:
        (nodes, weights), nodes ascending
    """
    n = p + 1
    k = np.arange(n)
    # Chebyshev-Gauss nodes as initial guess
    x = -np.cos((2 * k + 1) * np.pi / (2 * n))
    for _ in range(max_iter):
        pn, pn1 = _legendre(n, x)
        dpn = n * (x * pn - pn1) / (x ** 2 - 1.0)
        dx = pn / dpn
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    x = _symmetrize(x)
    pn, pn1 = _legendre(n, x)
    dpn = n * (x * pn - pn1) / (x ** 2 - 1.0)
    w = 2.0 / ((1.0 - x ** 2) * dpn ** 2)
    return x, w


def lobatto_legendre_nodes(p: int, tol: float = 1e-15, max_iter: int = 100) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lobatto-Legendre nodes and weights (p+1 points, p >= 1)

    Zeros of (1 - x^2) P'_p(x), Newton iteration started from the
    Chebyshev-Gauss-Lobatto points.
    """
    if p == 0:
        return np.zeros(1), np.full(1, 2.0)
    x = -np.cos(np.pi * np.arange(p + 1) / p)
    for _ in range(max_iter):
        pp, pp1 = _legendre(p, x)
        dx = (x * pp - pp1) / ((p + 1) * pp)
        x = x - dx
        if np.max(np.abs(dx)) < tol:
            break
    x = _symmetrize(x)
    x[0], x[-1] = -1.0, 1.0
    pp, _ = _legendre(p, x)
    w = 2.0 / (p * (p + 1) * pp ** 2)
    return x, w


def barycentric_weights(x: np.ndarray) -> np.ndarray:
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_derivative_matrix(x: np.ndarray) -> np.ndarray:
    """Differentiation matrix of the Lagrange basis on nodes x"""
    lam = barycentric_weights(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    D = (lam[None, :] / lam[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def lagrange_interpolation_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Matrix L with L[i, j] = l_j(y[i]) for the Lagrange basis on nodes x

    Rows for points coinciding with a node are exact selections.
    """
    x = np.asarray(x, dtype=float)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.size == 1:
        return np.ones((y.size, 1))
    lam = barycentric_weights(x)
    diff = y[:, None] - x[None, :]
    hits = diff == 0.0
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = lam[None, :] / diff
        L = terms / terms.sum(axis=1, keepdims=True)
    rows = hits.any(axis=1)
    L[rows] = hits[rows].astype(float)
    return L


def _freeze(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


class SbpOperatorService:
    """Builds, validates and caches SBP operators per (family, degree)"""

    def __init__(self):
        self.max_degree = settings.SOLVER['MAX_DEGREE']
        self.newton_tol = settings.SOLVER['NEWTON_TOL']
        self._cache: Dict[Tuple[str, int], SbpOperator] = {}

    def get_operator(self, family: str, p: int) -> SbpOperator:
        """
        Get (or build) the operator for a node family and degree

        Args:
            family: 'lobatto' or 'gauss'
            p: polynomial degree

        Returns:
            Cached SbpOperator
        """
        if family not in NODE_FAMILIES:
            raise ConfigurationError(f"Unknown node family: {family}")
        if int(p) != p or p < 0 or p > self.max_degree:
            raise UnsupportedDegreeError(int(p), self.max_degree)
        key = (family, int(p))
        if key not in self._cache:
            self._cache[key] = self._build(family, int(p))
        return self._cache[key]

    def _build(self, family: str, p: int) -> SbpOperator:
        if family == LOBATTO:
            nodes, weights = lobatto_legendre_nodes(p, self.newton_tol)
            R = np.zeros((2, p + 1))
            R[0, 0] = 1.0
            R[1, -1] = 1.0
        else:
            nodes, weights = gauss_legendre_nodes(p, self.newton_tol)
            R = lagrange_interpolation_matrix(nodes, BOUNDARY_SIGNS)

        D = lagrange_derivative_matrix(nodes) if p > 0 else np.zeros((1, 1))
        _freeze(nodes, weights, D, R)

        op = SbpOperator(degree=p, family=family, nodes=nodes, weights=weights, D=D, R=R)
        logger.debug(f"Built {family} SBP operator p={p}, residual={verify_sbp(op):.2e}")
        return op


def verify_sbp(op: SbpOperator) -> float:
    """Max-norm residual of M D + D^T M - R^T B R"""
    MD = op.weights[:, None] * op.D
    residual = MD + MD.T - op.R.T @ op.B @ op.R
    return float(np.max(np.abs(residual)))


def adjoint_multiply(op: SbpOperator, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """
    M-adjoint of the multiplication operator: (M^{-1} diag(a)^T M) x

    For the diagonal mass matrices built here this is the pointwise product a * x.
    """
    a = np.asarray(a, dtype=float)
    x = np.asarray(x, dtype=float)
    if a.shape[-1] != op.size or x.shape[-1] != op.size:
        raise ShapeMismatchError(
            f"adjoint_multiply expects trailing length {op.size}, got {a.shape} and {x.shape}"
        )
    return a * x


# Singleton instance
_sbp_service = None

def get_sbp_service() -> SbpOperatorService:
    """Get or create SbpOperatorService singleton"""
    global _sbp_service
    if _sbp_service is None:
        _sbp_service = SbpOperatorService()
        logger.info("SBP operator service initialized")
    return _sbp_service


def lobatto_operator(p: int) -> SbpOperator:
    return get_sbp_service().get_operator(LOBATTO, p)


def gauss_operator(p: int) -> SbpOperator:
    return get_sbp_service().get_operator(GAUSS, p)


def sbp_operator(family: str, p: int) -> SbpOperator:
    return get_sbp_service().get_operator(family, p)
