"""
Polynomial bases on the reference element [0, 1].

Three families are supported, all of degree 1..4:

  - Bernstein (``B``), whose coefficients are obtained from point data by
    collocation at the equispaced nodes,
  - Lagrange on equispaced nodes (``P``),
  - Lagrange on Gauss-Lobatto nodes (``PGL``), paired with the Lobatto rule so
    that the mass matrix is diagonal.

Every family has the endpoints 0 and 1 among its nodes and satisfies
phi_i(0) = delta_i0, phi_i(1) = delta_iM, which is what makes the global space
C0 when elements share their end DoFs.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from math import comb, factorial
from typing import Tuple

import numpy as np
import numpy.typing as npt
from numpy.polynomial import Polynomial
from numpy.polynomial import legendre

from app.core.exceptions import ConfigurationError, InputDomainError, InternalError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

MAX_DERIVATIVE = 2


class BasisFamily(str, Enum):
    BERNSTEIN = "b"
    LAGRANGE_EQUISPACED = "p"
    LAGRANGE_GAUSS_LOBATTO = "pgl"

    @property
    def label(self) -> str:
        return self.value.upper()


@dataclass(frozen=True)
class BasisSpec:
    """Basis family plus polynomial degree M"""

    family: BasisFamily
    degree: int

    def __post_init__(self):
        family = BasisFamily(self.family)
        object.__setattr__(self, "family", family)
        if not 1 <= self.degree <= 4:
            raise ConfigurationError(
                f"Basis degree must lie in 1..4, got {self.degree}",
                details={"family": family.value, "degree": self.degree},
            )
        if family is BasisFamily.LAGRANGE_EQUISPACED and self.degree == 4:
            raise ConfigurationError(
                "Equispaced Lagrange basis of degree 4 is unstable and not supported",
                details={"family": family.value, "degree": self.degree},
            )

    @property
    def n_local(self) -> int:
        return self.degree + 1

    @property
    def label(self) -> str:
        """Short name such as B4, P3 or PGL2"""
        return f"{self.family.label}{self.degree}"

    @property
    def is_lagrange(self) -> bool:
        return self.family is not BasisFamily.BERNSTEIN


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Quadrature on [0, 1]"""

    points: FloatArray
    weights: FloatArray
    exactness_degree: int

    def integrate(self, values: FloatArray) -> float:
        """Integrate samples taken at ``points`` over [0, 1]"""
        return float(np.dot(self.weights, values))


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    """Precomputed reference-element tables for one basis"""

    spec: BasisSpec
    nodes: FloatArray
    quadrature: QuadratureRule
    # basis values and derivatives at the quadrature points, shape (Q, M+1)
    phi_q: Tuple[FloatArray, ...] = field(repr=False)
    # basis derivatives at xi = 0 and xi = 1, index r = 0..2, shape (M+1,)
    phi_left: Tuple[FloatArray, ...] = field(repr=False)
    phi_right: Tuple[FloatArray, ...] = field(repr=False)
    # nodal values -> coefficients, shape (M+1, M+1)
    interpolation: FloatArray = field(repr=False)
    # coefficients -> nodal values, shape (M+1, M+1)
    collocation: FloatArray = field(repr=False)
    # entry [k, j] = integral of phi_j over [0, xi_k]
    antiderivative: FloatArray = field(repr=False)
    # unit-length mass matrix and lumped masses
    mass: FloatArray = field(repr=False)
    lumped: FloatArray = field(repr=False)


# ----------------------------------------------------------------------
# Node sets and quadrature
# ----------------------------------------------------------------------


def _frozen(array: FloatArray) -> FloatArray:
    array.setflags(write=False)
    return array


def _lobatto_points(n: int) -> FloatArray:
    """Gauss-Lobatto points on [-1, 1] for n = 2..5 points"""
    if n == 2:
        x = [-1.0, 1.0]
    elif n == 3:
        x = [-1.0, 0.0, 1.0]
    elif n == 4:
        x = [-1.0, -1.0 / np.sqrt(5.0), 1.0 / np.sqrt(5.0), 1.0]
    elif n == 5:
        x = [-1.0, -np.sqrt(3.0 / 7.0), 0.0, np.sqrt(3.0 / 7.0), 1.0]
    else:
        raise InternalError(f"Gauss-Lobatto points not tabulated for n={n}")
    return np.array(x)


def _lobatto_weights(x: FloatArray) -> FloatArray:
    n = len(x)
    p = legendre.legval(x, [0.0] * (n - 1) + [1.0])
    return 2.0 / (n * (n - 1) * p**2)


@lru_cache(maxsize=None)
def gauss_legendre(n_points: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule mapped to [0, 1]"""
    x, w = legendre.leggauss(n_points)
    return QuadratureRule(
        points=0.5 * (x + 1.0),
        weights=0.5 * w,
        exactness_degree=2 * n_points - 1,
    )


@lru_cache(maxsize=None)
def local_nodes(spec: BasisSpec) -> FloatArray:
    """Local node layout of ``spec``: M+1 increasing points with both endpoints"""
    if spec.family is BasisFamily.LAGRANGE_GAUSS_LOBATTO:
        nodes = 0.5 * (_lobatto_points(spec.n_local) + 1.0)
        nodes[0], nodes[-1] = 0.0, 1.0
        return _frozen(nodes)
    return _frozen(np.linspace(0.0, 1.0, spec.n_local))


@lru_cache(maxsize=None)
def quadrature_for(spec: BasisSpec) -> QuadratureRule:
    """Lobatto rule on the basis nodes for PGL, M+1-point Gauss-Legendre otherwise"""
    if spec.family is BasisFamily.LAGRANGE_GAUSS_LOBATTO:
        x = _lobatto_points(spec.n_local)
        return QuadratureRule(
            points=local_nodes(spec),
            weights=0.5 * _lobatto_weights(x),
            exactness_degree=2 * spec.degree - 1,
        )
    return gauss_legendre(spec.n_local)


# ----------------------------------------------------------------------
# Basis evaluation
# ----------------------------------------------------------------------


def lagrange_cardinal_values(nodes: FloatArray, points: FloatArray) -> FloatArray:
    """
    Values of the Lagrange cardinal polynomials of ``nodes`` at ``points``.

    Returns:
        Array of shape (len(points), len(nodes)).
    """
    nodes = np.asarray(nodes, dtype=float)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    diff = points[:, None] - nodes[None, :]
    values = np.ones((len(points), len(nodes)))
    for i in range(len(nodes)):
        for j in range(len(nodes)):
            if j != i:
                values[:, i] *= diff[:, j] / (nodes[i] - nodes[j])
    return values


@lru_cache(maxsize=None)
def _lagrange_polynomials(spec: BasisSpec) -> Tuple[Polynomial, ...]:
    nodes = local_nodes(spec)
    polys = []
    for i in range(spec.n_local):
        others = np.delete(nodes, i)
        polys.append(Polynomial.fromroots(others) / np.prod(nodes[i] - others))
    return tuple(polys)


def _bernstein(n: int, i: int, xi: FloatArray) -> FloatArray:
    if i < 0 or i > n:
        return np.zeros_like(xi)
    return comb(n, i) * xi**i * (1.0 - xi) ** (n - i)


def _bernstein_matrix(degree: int, r: int, xi: FloatArray) -> FloatArray:
    values = np.zeros((len(xi), degree + 1))
    if r > degree:
        return values
    scale = factorial(degree) / factorial(degree - r)
    for i in range(degree + 1):
        for k in range(r + 1):
            sign = -1.0 if (r - k) % 2 else 1.0
            values[:, i] += sign * comb(r, k) * _bernstein(degree - r, i - k, xi)
    return scale * values


def basis_matrix(spec: BasisSpec, r: int, xi) -> FloatArray:
    """
    r-th derivatives of all basis functions at the points ``xi``.

    Returns:
        Array of shape (len(xi), M+1), reference-element units.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if spec.family is BasisFamily.BERNSTEIN:
        return _bernstein_matrix(spec.degree, r, xi)
    if r == 0:
        return lagrange_cardinal_values(local_nodes(spec), xi)
    polys = _lagrange_polynomials(spec)
    return np.stack([p.deriv(r)(xi) for p in polys], axis=1)


def eval_basis(spec: BasisSpec, r: int, xi: float) -> FloatArray:
    """
    Evaluate the r-th derivative of every basis function at one point.

    Args:
        spec: basis family and degree
        r: derivative order, 0..2
        xi: local coordinate in [0, 1]

    Returns:
        M+1 values; they sum to 1 for r = 0 and to 0 for r >= 1.

    Raises:
        InputDomainError: if ``xi`` is outside [0, 1] or ``r`` outside 0..2
    """
    if r not in range(MAX_DERIVATIVE + 1):
        raise InputDomainError(
            f"Derivative order must be 0..{MAX_DERIVATIVE}", details={"r": r}
        )
    if not (0.0 <= xi <= 1.0):
        raise InputDomainError(
            "Local coordinate outside the reference element [0, 1]",
            details={"xi": xi},
        )
    return basis_matrix(spec, r, [xi])[0]


# ----------------------------------------------------------------------
# Masses and interpolation
# ----------------------------------------------------------------------


def lumped_mass(spec: BasisSpec, h: float) -> FloatArray:
    """C_i = h * integral of phi_i over the reference element"""
    rule = quadrature_for(spec)
    masses = h * (basis_matrix(spec, 0, rule.points).T @ rule.weights)
    if np.any(masses <= 0.0):
        raise ConfigurationError(
            f"Non-positive lumped mass for basis {spec.label}",
            details={"masses": masses.tolist()},
        )
    return masses


def local_mass_matrix(spec: BasisSpec, h: float) -> FloatArray:
    rule = quadrature_for(spec)
    phi = basis_matrix(spec, 0, rule.points)
    return h * (phi.T * rule.weights) @ phi


@lru_cache(maxsize=None)
def interpolation_matrix(spec: BasisSpec) -> FloatArray:
    """
    Linear map from values at the local nodes to basis coefficients.

    Identity for both Lagrange families. For Bernstein the endpoint rows are
    kept exact (phi_j(0) = delta_j0, phi_j(1) = delta_jM) and only the interior
    collocation block is solved, so neighbouring elements always agree on their
    shared coefficient.
    """
    n = spec.n_local
    if spec.is_lagrange:
        return _frozen(np.eye(n))
    colloc = basis_matrix(spec, 0, local_nodes(spec))
    interior = slice(1, n - 1)
    matrix = np.zeros((n, n))
    matrix[0, 0] = 1.0
    matrix[-1, -1] = 1.0
    if n > 2:
        block = colloc[interior, interior]
        if abs(np.linalg.det(block)) < 1e-12:
            raise InternalError(
                "Singular Bernstein collocation system", details={"degree": spec.degree}
            )
        inv = np.linalg.inv(block)
        rhs = np.zeros((n - 2, n))
        rhs[:, interior] = np.eye(n - 2)
        rhs[:, 0] = -colloc[interior, 0]
        rhs[:, -1] = -colloc[interior, -1]
        matrix[interior, :] = inv @ rhs
    return _frozen(matrix)


def interpolation_coefficients(spec: BasisSpec, nodal_values) -> FloatArray:
    """
    Basis coefficients reproducing ``nodal_values`` at the local nodes.

    Args:
        spec: basis family and degree
        nodal_values: array whose first axis runs over the M+1 local nodes

    Returns:
        Coefficients with the same shape as ``nodal_values``.
    """
    values = np.asarray(nodal_values, dtype=float)
    if values.shape[0] != spec.n_local:
        raise InputDomainError(
            f"Expected {spec.n_local} nodal values, got {values.shape[0]}",
            details={"basis": spec.label},
        )
    if spec.is_lagrange:
        return values.copy()
    return np.tensordot(interpolation_matrix(spec), values, axes=(1, 0))


@lru_cache(maxsize=None)
def antiderivative_matrix(spec: BasisSpec) -> FloatArray:
    """Entry [k, j] = integral of phi_j from 0 to the k-th local node"""
    rule = gauss_legendre(spec.n_local)
    nodes = local_nodes(spec)
    matrix = np.zeros((spec.n_local, spec.n_local))
    for k, xk in enumerate(nodes):
        if xk == 0.0:
            continue
        phi = basis_matrix(spec, 0, xk * rule.points)
        matrix[k] = xk * (rule.weights @ phi)
    return _frozen(matrix)


@lru_cache(maxsize=None)
def reference_element(spec: BasisSpec) -> ReferenceElement:
    """All reference tables needed by the assembly routines"""
    rule = quadrature_for(spec)
    nodes = local_nodes(spec)
    ref = ReferenceElement(
        spec=spec,
        nodes=nodes,
        quadrature=rule,
        phi_q=tuple(basis_matrix(spec, r, rule.points) for r in range(MAX_DERIVATIVE + 1)),
        phi_left=tuple(basis_matrix(spec, r, [0.0])[0] for r in range(MAX_DERIVATIVE + 1)),
        phi_right=tuple(basis_matrix(spec, r, [1.0])[0] for r in range(MAX_DERIVATIVE + 1)),
        interpolation=interpolation_matrix(spec),
        collocation=np.eye(spec.n_local)
        if spec.is_lagrange
        else basis_matrix(spec, 0, nodes),
        antiderivative=antiderivative_matrix(spec),
        mass=local_mass_matrix(spec, 1.0),
        lumped=lumped_mass(spec, 1.0),
    )
    logger.debug(f"[BASIS] reference tables built for {spec.label}")
    return ref
