"""
Time loop tying the space residual, the jump stabilization and the DeC
integrator together.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

from app.core.config import get_cip_coefficients, settings
from app.core.exceptions import StepFailureError
from app.models.bathymetry import Bathymetry
from app.models.discretization import Discretization
from app.models.mesh import Mesh1D
from app.models.swe import PhysParams
from app.services.dec_integrator import (
    BoundaryCondition,
    DeCConfig,
    DeCIntegrator,
    apply_strong_bc,
    compute_dt,
)
from app.services.global_flux import global_flux
from app.services.space_residual import SpaceScheme, get_space_scheme, space_residual
from app.services.stabilizations import JumpStabilization, get_stabilization
from app.utils.timing import timed

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

PERTURBATION_CENTER = 6.0
PERTURBATION_HALF_WIDTH = 0.5


@dataclass(frozen=True)
class SchemeConfig:
    """Space discretization, stabilization and physics of one run"""

    space: SpaceScheme = SpaceScheme.WB_HS
    stabilization: str = "jt"
    delta1: Optional[float] = None
    delta2: Optional[float] = None
    params: PhysParams = field(default_factory=PhysParams.from_settings)
    fix_fraction: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "space", get_space_scheme(self.space))
        object.__setattr__(self, "stabilization", str(self.stabilization).strip().lower())

    @property
    def label(self) -> str:
        return f"{self.space.value}+{self.stabilization}"

    @property
    def is_well_balanced(self) -> bool:
        return self.space.is_well_balanced and self.stabilization != "jc"


@dataclass
class SimulationResult:
    state: FloatArray
    time: float
    steps: int
    retries: int = 0
    snapshots: List[Tuple[float, FloatArray]] = field(default_factory=list)
    converged: Optional[bool] = None
    runtime_s: float = 0.0


class Simulation:
    """
    One discretized problem: G(c) = Phi(c) + ST(c) advanced in time with DeC.

    The global flux is rebuilt for every residual evaluation when either the
    space scheme or the stabilization needs it.
    """

    def __init__(
        self,
        mesh: Mesh1D,
        bathymetry: Bathymetry,
        scheme: SchemeConfig,
        dec: DeCConfig,
        bc: Optional[BoundaryCondition] = None,
    ):
        self.mesh = mesh
        self.scheme = scheme
        self.dec = dec
        self.bc = bc
        self.disc = Discretization(mesh, bathymetry, scheme.params, scheme.fix_fraction)
        self.stabilization = self._build_stabilization()
        self.integrator = DeCIntegrator(dec, mesh, bc)
        self._needs_gflux = (
            scheme.space is SpaceScheme.WB_GF or self.stabilization.requires_global_flux
        )
        logger.info(
            f"[SIMULATION] {mesh.spec.label}, {mesh.n_elem} elements, {scheme.label}, "
            f"{dec.variant.value} M={dec.M}, CFL={dec.cfl}"
        )

    # ------------------------------------------------------------------
    # Residual
    # ------------------------------------------------------------------

    def residual(self, state: FloatArray) -> FloatArray:
        """G_i = Phi_i + ST_i at the coefficient vector ``state``"""
        gflux = global_flux(self.disc, state) if self._needs_gflux else None
        phi = space_residual(self.scheme.space, self.disc, state, gflux)
        return phi + self.stabilization.assemble(self.disc, state, gflux)

    def dt(self, state: FloatArray) -> float:
        return compute_dt(self.dec.cfl, self.mesh, state, self.scheme.params)

    # ------------------------------------------------------------------
    # Time loops
    # ------------------------------------------------------------------

    def run(
        self,
        state: FloatArray,
        t_final: float,
        snapshot_times: Sequence[float] = (),
    ) -> SimulationResult:
        """
        Advance ``state`` from t = 0 to ``t_final``.

        Steps are shortened to land exactly on every snapshot time and on
        ``t_final``.

        Raises:
            StepFailureError: a step still fails after MAX_STEP_RETRIES halvings
        """
        targets = sorted({float(t) for t in snapshot_times if 0.0 <= t <= t_final})
        state = apply_strong_bc(state, self.bc)
        snapshots: List[Tuple[float, FloatArray]] = []
        if targets and targets[0] == 0.0:
            snapshots.append((0.0, state.copy()))
            targets.pop(0)

        t, steps, retries = 0.0, 0, 0
        with timed(f"run to T_f={t_final:g}") as timer:
            while t < t_final:
                stop = targets[0] if targets else t_final
                dt = min(self.dt(state), stop - t)
                state, dt, used = self._step(state, dt, steps, t)
                retries += used
                t = stop if dt >= stop - t else t + dt
                steps += 1
                if targets and t >= targets[0]:
                    snapshots.append((t, state.copy()))
                    targets.pop(0)
                if steps % settings.PROGRESS_LOG_EVERY == 0:
                    logger.info(f"[SIMULATION] step {steps}, t={t:.6g}, dt={dt:.3e}")

        logger.info(f"[SIMULATION] reached t={t:.6g} in {steps} steps ({retries} retries)")
        return SimulationResult(
            state=state,
            time=t,
            steps=steps,
            retries=retries,
            snapshots=snapshots,
            runtime_s=timer.elapsed,
        )

    def run_to_steady(
        self,
        state: FloatArray,
        tolerance: Optional[float] = None,
        max_time: Optional[float] = None,
    ) -> SimulationResult:
        """
        March until max |c^{n+1} - c^n| / dt drops below ``tolerance`` or
        ``max_time`` is reached.
        """
        tolerance = settings.STEADY_RUN_TOLERANCE if tolerance is None else tolerance
        max_time = settings.STEADY_RUN_MAX_TIME if max_time is None else max_time
        state = apply_strong_bc(state, self.bc)
        t, steps, retries = 0.0, 0, 0
        rate = np.inf
        with timed("run to steady state") as timer:
            while t < max_time:
                dt = min(self.dt(state), max_time - t)
                new_state, dt, used = self._step(state, dt, steps, t)
                retries += used
                rate = float(np.max(np.abs(new_state - state)) / dt)
                state, t, steps = new_state, t + dt, steps + 1
                if steps % settings.PROGRESS_LOG_EVERY == 0:
                    logger.info(f"[SIMULATION] steady march step {steps}, t={t:.6g}, rate={rate:.3e}")
                if rate < tolerance:
                    break

        converged = rate < tolerance
        log = logger.info if converged else logger.warning
        log(
            f"[SIMULATION] steady march {'converged' if converged else 'stopped'} "
            f"at t={t:.6g} after {steps} steps, rate={rate:.3e}"
        )
        return SimulationResult(
            state=state,
            time=t,
            steps=steps,
            retries=retries,
            converged=converged,
            runtime_s=timer.elapsed,
        )

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------

    def _step(self, state: FloatArray, dt: float, step_index: int, t: float):
        """One DeC step, halving dt after a failure; returns (state, dt used, retries)"""
        for attempt in range(settings.MAX_STEP_RETRIES + 1):
            try:
                return self.integrator.step(state, dt, self.residual, step_index, t), dt, attempt
            except StepFailureError as exc:
                if attempt == settings.MAX_STEP_RETRIES:
                    logger.error(
                        f"[SIMULATION] step {step_index} failed after {attempt} retries",
                        extra={"details": exc.details},
                    )
                    raise
                logger.warning(
                    f"[SIMULATION] step {step_index} failed at t={t:.6g}, retrying with dt={dt / 2:.3e}"
                )
                dt = dt / 2.0
        raise AssertionError("unreachable")

    def _build_stabilization(self) -> JumpStabilization:
        default1, default2 = get_cip_coefficients(self.mesh.spec.degree)
        return get_stabilization(
            self.scheme.stabilization,
            delta1=default1 if self.scheme.delta1 is None else self.scheme.delta1,
            delta2=default2 if self.scheme.delta2 is None else self.scheme.delta2,
            fix_fraction=self.scheme.fix_fraction,
        )


# ----------------------------------------------------------------------
# Initial data
# ----------------------------------------------------------------------


def perturbation_bump(x, amplitude: float) -> FloatArray:
    """A exp(1 - 1/(1 - ((x-6)/0.5)^2)) on (5.5, 6.5), zero elsewhere"""
    x = np.asarray(x, dtype=float)
    s = (x - PERTURBATION_CENTER) / PERTURBATION_HALF_WIDTH
    inside = np.abs(s) < 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        bump = amplitude * np.exp(1.0 - 1.0 / (1.0 - s * s))
    return np.where(inside, bump, 0.0)


def state_from_nodal(disc: Discretization, nodal: FloatArray) -> FloatArray:
    """Coefficients whose interpolant takes the values ``nodal`` at the DoFs"""
    return disc.states_from_nodal(np.asarray(nodal, dtype=float))


def perturbed_state(disc: Discretization, nodal_steady: FloatArray, amplitude: float) -> FloatArray:
    """Add the bump to eta at the DoFs, H = eta - B, q unchanged"""
    nodal = np.array(nodal_steady, dtype=float)
    nodal[:, 0] += perturbation_bump(disc.mesh.dof_coords, amplitude)
    return disc.states_from_nodal(nodal)
