"""
Explicit deferred-correction (bDeC / bDeCu) time stepping.

One step solves M du/dt + G(u) = 0 on [t_n, t_n + dt] over M+1 equispaced
subtimenodes. Every iteration p updates each subtimenode m >= 1 with

    c^{m,(p)} = c^{m,(p-1)} - C^-1 [ M (c^{m,(p-1)} - c_n)
                                     + dt sum_l theta^m_l G(c^{l,(p-1)}) ]

where C is the assembled lumped mass and M the consistent mass matrix applied
element by element (never inverted). bDeCu starts from two subtimenodes and
adds one per iteration by Lagrange interpolation in time.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable, List, Optional

import numpy as np
import numpy.typing as npt

from app.core.exceptions import (
    ConfigurationError,
    InputDomainError,
    StateError,
    StepFailureError,
)
from app.models.basis import BasisSpec, gauss_legendre, lagrange_cardinal_values, reference_element
from app.models.discretization import check_mesh_spec
from app.models.mesh import Mesh1D
from app.models.swe import PhysParams, spectral_radius

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ResidualProvider = Callable[[FloatArray], FloatArray]

MAX_SUBINTERVALS = 6


class DeCVariant(str, Enum):
    BDEC = "bdec"
    BDECU = "bdecu"


@dataclass(frozen=True)
class DeCConfig:
    """M subintervals (order M+1), P iterations (default M+1) and the CFL number"""

    M: int
    variant: DeCVariant = DeCVariant.BDEC
    P: Optional[int] = None
    cfl: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "variant", DeCVariant(self.variant))
        if not 1 <= self.M <= MAX_SUBINTERVALS:
            raise ConfigurationError(
                f"DeC subinterval count must be 1..{MAX_SUBINTERVALS}", details={"M": self.M}
            )
        if self.P is not None and self.P < 1:
            raise ConfigurationError("DeC needs at least one iteration", details={"P": self.P})
        if not self.cfl > 0:
            raise ConfigurationError("CFL must be positive", details={"cfl": self.cfl})

    @property
    def iterations(self) -> int:
        return self.M + 1 if self.P is None else self.P

    @property
    def order(self) -> int:
        return min(self.M + 1, self.iterations)


@dataclass(frozen=True, eq=False)
class ThetaTable:
    """
    theta[m, l] = integral over [0, m/M] of the l-th Lagrange polynomial of the
    equispaced nodes; row 0 is zero.
    """

    M: int
    nodes: FloatArray
    theta: FloatArray = field(repr=False)

    @property
    def beta(self) -> FloatArray:
        return self.theta.sum(axis=1)


@lru_cache(maxsize=None)
def theta_coefficients(M: int) -> ThetaTable:
    """
    Integration weights of the subtimenode Lagrange basis.

    Raises:
        InputDomainError: if M is outside 1..6
    """
    if not 1 <= M <= MAX_SUBINTERVALS:
        raise InputDomainError(
            f"Theta tables are available for M = 1..{MAX_SUBINTERVALS}", details={"M": M}
        )
    nodes = np.linspace(0.0, 1.0, M + 1)
    rule = gauss_legendre(M + 1)
    theta = np.zeros((M + 1, M + 1))
    for m in range(1, M + 1):
        beta = nodes[m]
        psi = lagrange_cardinal_values(nodes, beta * rule.points)
        theta[m] = beta * (rule.weights @ psi)
    theta.setflags(write=False)
    nodes.setflags(write=False)
    return ThetaTable(M=M, nodes=nodes, theta=theta)


# ----------------------------------------------------------------------
# Boundary conditions and time step
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryCondition:
    """Conserved components prescribed at the two boundary DoFs; None leaves a component free"""

    left_H: Optional[float] = None
    left_q: Optional[float] = None
    right_H: Optional[float] = None
    right_q: Optional[float] = None

    def __post_init__(self):
        for name in ("left_H", "right_H"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ConfigurationError(
                    "Prescribed water height must be positive", details={name: value}
                )

    @property
    def is_empty(self) -> bool:
        return all(v is None for v in (self.left_H, self.left_q, self.right_H, self.right_q))

    def describe(self) -> str:
        parts = [
            f"{name}={value:g}"
            for name, value in (
                ("H(x_L)", self.left_H),
                ("q(x_L)", self.left_q),
                ("H(x_R)", self.right_H),
                ("q(x_R)", self.right_q),
            )
            if value is not None
        ]
        return ", ".join(parts) if parts else "none"


def apply_strong_bc(state: FloatArray, bc: Optional[BoundaryCondition]) -> FloatArray:
    """
    Overwrite the prescribed components at the first and last DoF.

    The endpoint coefficient equals the endpoint value for every basis family,
    so the overwrite acts on coefficients directly.
    """
    out = np.array(state, dtype=float)
    if bc is None:
        return out
    for dof, comp, value in (
        (0, 0, bc.left_H),
        (0, 1, bc.left_q),
        (-1, 0, bc.right_H),
        (-1, 1, bc.right_q),
    ):
        if value is not None:
            out[dof, comp] = value
    return out


def compute_dt(cfl: float, mesh: Mesh1D, state: FloatArray, p: PhysParams) -> float:
    """
    dt = CFL * min over elements of (dx_K / max over the DoFs of K of (|v| + c)).

    Raises:
        StateError: dry or non-finite DoF state
    """
    ref = reference_element(mesh.spec)
    local = np.asarray(state, dtype=float)[mesh.elem_to_dofs]
    if not mesh.spec.is_lagrange:
        local = np.einsum("ij,ejk->eik", ref.collocation, local)
    speeds = spectral_radius(local, p).max(axis=1)
    if not np.all(np.isfinite(speeds)) or np.any(speeds <= 0):
        raise StateError("Non-finite wave speed", details={"max_speed": float(np.max(speeds))})
    return float(cfl * np.min(mesh.element_lengths / speeds))


# ----------------------------------------------------------------------
# Integrator
# ----------------------------------------------------------------------


class DeCIntegrator:
    """
    bDeC / bDeCu stepper bound to one mesh.

    The residual provider maps a coefficient array (I, 2) to G = Phi + ST.
    """

    def __init__(
        self,
        config: DeCConfig,
        mesh: Mesh1D,
        bc: Optional[BoundaryCondition] = None,
    ):
        self.config = config
        self.mesh = mesh
        self.bc = bc
        ref = reference_element(mesh.spec)
        h = mesh.element_lengths
        self._elem_dofs = mesh.elem_to_dofs
        self._mass = h[:, None, None] * ref.mass[None, :, :]
        lumped = np.zeros(mesh.n_dofs)
        np.add.at(lumped, self._elem_dofs.ravel(), (h[:, None] * ref.lumped[None, :]).ravel())
        if np.any(lumped <= 0):
            raise ConfigurationError("Non-positive assembled lumped mass")
        self.lumped = lumped
        logger.info(
            f"[DEC] {config.variant.value} M={config.M} P={config.iterations} "
            f"on {mesh.n_elem} elements, bc: {bc.describe() if bc else 'none'}"
        )

    def mass_matvec(self, values: FloatArray) -> FloatArray:
        local = np.einsum("eij,ejk->eik", self._mass, values[self._elem_dofs])
        out = np.zeros_like(values)
        np.add.at(out, self._elem_dofs.ravel(), local.reshape(-1, values.shape[-1]))
        return out

    def step(
        self,
        state: FloatArray,
        dt: float,
        residual_provider: ResidualProvider,
        step_index: int = 0,
        time: float = 0.0,
    ) -> FloatArray:
        """
        Advance ``state`` by ``dt``.

        Raises:
            StepFailureError: NaN or dry state at any subtimenode
        """
        c0 = apply_strong_bc(state, self.bc)
        try:
            G0 = residual_provider(c0)
            if self.config.variant is DeCVariant.BDECU:
                return self._bdecu(c0, G0, dt, residual_provider, step_index, time)
            return self._bdec(c0, G0, dt, residual_provider, step_index, time)
        except StateError as exc:
            raise StepFailureError(
                "Invalid state during time step",
                details={"step": step_index, "time": time, "dt": dt, **exc.details},
            ) from exc

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------

    def _bdec(self, c0, G0, dt, provider, step_index, time) -> FloatArray:
        M = self.config.M
        table = theta_coefficients(M)
        stages = [c0] * (M + 1)
        for p in range(1, self.config.iterations + 1):
            residuals = self._residuals(stages, G0, provider, first=p == 1)
            stages = self._correct(c0, stages, residuals, table, dt, step_index, time)
        return stages[M]

    def _bdecu(self, c0, G0, dt, provider, step_index, time) -> FloatArray:
        M = self.config.M
        n = 1
        stages = [c0, c0]
        for p in range(1, self.config.iterations + 1):
            target = min(p, M)
            if target > n:
                stages = self._interpolate(c0, stages, target)
                n = target
            residuals = self._residuals(stages, G0, provider, first=p == 1)
            stages = self._correct(c0, stages, residuals, theta_coefficients(n), dt, step_index, time)
        if n < M:
            stages = self._interpolate(c0, stages, M)
        return stages[-1]

    @staticmethod
    def _residuals(stages, G0, provider, first: bool) -> List[FloatArray]:
        if first:
            return [G0] * len(stages)
        return [G0] + [provider(c) for c in stages[1:]]

    def _correct(self, c0, stages, residuals, table, dt, step_index, time) -> List[FloatArray]:
        updated = [c0]
        for m in range(1, len(stages)):
            combined = np.zeros_like(c0)
            for ell, G in enumerate(residuals):
                combined = combined + table.theta[m, ell] * G
            increment = self.mass_matvec(stages[m] - c0) + dt * combined
            new = stages[m] - increment / self.lumped[:, None]
            new = apply_strong_bc(new, self.bc)
            self._check(new, step_index, time, m)
            updated.append(new)
        return updated

    def _interpolate(self, c0, stages, target: int) -> List[FloatArray]:
        old_nodes = np.linspace(0.0, 1.0, len(stages))
        new_nodes = np.linspace(0.0, 1.0, target + 1)
        weights = lagrange_cardinal_values(old_nodes, new_nodes)
        offsets = np.stack([c - c0 for c in stages])
        values = np.tensordot(weights, offsets, axes=(1, 0))
        return [c0] + [apply_strong_bc(c0 + values[m], self.bc) for m in range(1, target + 1)]

    def _check(self, state: FloatArray, step_index: int, time: float, subnode: int) -> None:
        bad = ~np.isfinite(state).all(axis=1) | ~(state[:, 0] > 0)
        if np.any(bad):
            dof = int(np.argmax(bad))
            raise StepFailureError(
                "Dry or non-finite state during time step",
                details={
                    "step": step_index,
                    "time": time,
                    "subtimenode": subnode,
                    "dof": dof,
                    "x": float(self.mesh.dof_coords[dof]),
                    "H": float(state[dof, 0]),
                    "q": float(state[dof, 1]),
                },
            )


def bdec_step(
    state_n: FloatArray,
    dt: float,
    residual_provider: ResidualProvider,
    config: DeCConfig,
    spec: BasisSpec,
    mesh: Mesh1D,
    bc: Optional[BoundaryCondition] = None,
) -> FloatArray:
    """One bDeC step; ``config.variant`` is ignored"""
    check_mesh_spec(mesh, spec)
    cfg = DeCConfig(M=config.M, variant=DeCVariant.BDEC, P=config.P, cfl=config.cfl)
    return DeCIntegrator(cfg, mesh, bc).step(state_n, dt, residual_provider)


def bdecu_step(
    state_n: FloatArray,
    dt: float,
    residual_provider: ResidualProvider,
    config: DeCConfig,
    spec: BasisSpec,
    mesh: Mesh1D,
    bc: Optional[BoundaryCondition] = None,
) -> FloatArray:
    """One bDeCu step; ``config.variant`` is ignored"""
    check_mesh_spec(mesh, spec)
    cfg = DeCConfig(M=config.M, variant=DeCVariant.BDECU, P=config.P, cfl=config.cfl)
    return DeCIntegrator(cfg, mesh, bc).step(state_n, dt, residual_provider)
