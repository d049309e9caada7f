"""
Reference steady states: lake at rest, frictionless moving equilibria from the
energy cubic, and friction equilibria from the steady ODE (or from a long
degree-1 run). Also the L1 error against a reference.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import numpy.typing as npt
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from app.core.config import get_default_cfl, settings
from app.core.exceptions import ConfigurationError, InfeasibleSteadyStateError
from app.models.basis import BasisFamily, BasisSpec, basis_matrix, gauss_legendre, reference_element
from app.models.bathymetry import Bathymetry
from app.models.discretization import check_mesh_spec
from app.models.mesh import Mesh1D, build_uniform_mesh
from app.models.swe import PhysParams
from app.services.dec_integrator import BoundaryCondition, DeCConfig

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

ENERGY_TOLERANCE = 1e-11
ODE_MIN_STEPS = 2**15
ERROR_QUADRATURE_POINTS = 10
H_FLOOR = 1e-12


class Regime(str, Enum):
    LAKE_AT_REST = "lake"
    SUPERCRITICAL = "super"
    SUBCRITICAL = "sub"
    TRANSCRITICAL = "trans"


class FrictionMethod(str, Enum):
    ODE = "ode"
    SIMULATION = "simulation"


class ErrorMode(str, Enum):
    INTERPOLANT = "interpolant"
    EXACT = "exact"


@dataclass(frozen=True)
class SteadyData:
    """Boundary data of a steady state: constant momentum plus one height datum"""

    q_bar: float = 0.0
    H_left: Optional[float] = None
    H_right: Optional[float] = None
    eta_bar: Optional[float] = None


DEFAULT_STEADY_DATA = {
    Regime.LAKE_AT_REST: SteadyData(q_bar=0.0, eta_bar=settings.ETA_BAR),
    Regime.SUPERCRITICAL: SteadyData(q_bar=24.0, H_left=2.0),
    Regime.SUBCRITICAL: SteadyData(q_bar=4.42, H_right=2.0),
    Regime.TRANSCRITICAL: SteadyData(q_bar=1.53),
}


def default_steady_data(regime: Union[str, Regime]) -> SteadyData:
    return DEFAULT_STEADY_DATA[Regime(regime)]


@dataclass(frozen=True, eq=False)
class SteadyReference:
    """
    Samplable steady state.

    ``sampler`` maps coordinates (n,) to states (n, 2); ``energy`` is set for
    frictionless moving equilibria.
    """

    regime: Regime
    q_bar: float
    bathymetry: Bathymetry
    params: PhysParams
    domain: Tuple[float, float]
    sampler: Callable[[FloatArray], FloatArray]
    energy: Optional[float] = None
    eta_bar: Optional[float] = None
    n_M: float = 0.0
    method: str = "exact"

    def sample(self, xs) -> FloatArray:
        return self.sampler(np.atleast_1d(np.asarray(xs, dtype=float)))

    def eta(self, xs) -> FloatArray:
        return self.sample(xs)[:, 0] + self.bathymetry.value(np.atleast_1d(xs))

    def boundary_condition(self) -> BoundaryCondition:
        """Strong boundary data of the regime, taken from the reference itself"""
        ends = self.sample(np.array(self.domain))
        left, right = ends[0], ends[1]
        if self.regime is Regime.LAKE_AT_REST:
            return BoundaryCondition(left_H=left[0], left_q=left[1], right_H=right[0], right_q=right[1])
        if self.regime is Regime.SUPERCRITICAL:
            return BoundaryCondition(left_H=left[0], left_q=self.q_bar)
        if self.regime is Regime.SUBCRITICAL:
            return BoundaryCondition(left_q=self.q_bar, right_H=right[0])
        return BoundaryCondition(left_q=self.q_bar)


# ----------------------------------------------------------------------
# Frictionless steady states
# ----------------------------------------------------------------------


def critical_height(q_bar: float, p: PhysParams) -> float:
    return float(np.cbrt(q_bar * q_bar / p.g))


def specific_energy(H, q_bar: float, B, p: PhysParams):
    """q^2/(2H^2) + g(H + B)"""
    H = np.asarray(H, dtype=float)
    return q_bar * q_bar / (2.0 * H * H) + p.g * (H + np.asarray(B, dtype=float))


def _energy_root(x: float, B: float, q_bar: float, energy: float, supercritical: bool, p: PhysParams) -> float:
    """Root of g H^3 + (g B - E) H^2 + q^2/2 on the requested branch"""
    g = p.g
    H_c = critical_height(q_bar, p)

    def cubic(H: float) -> float:
        return g * H**3 + (g * B - energy) * H * H + 0.5 * q_bar * q_bar

    # cubic(H)/H^2 is the energy defect, minimal at the critical height
    defect_c = specific_energy(H_c, q_bar, B, p) - energy
    if defect_c >= 0.0:
        if defect_c <= ENERGY_TOLERANCE * abs(energy):
            return H_c
        raise InfeasibleSteadyStateError(
            f"No admissible steady height at x={x:g}",
            details={"x": x, "B": B, "energy": energy, "critical_energy": energy + defect_c},
        )
    if supercritical:
        lower, upper = min(H_FLOOR, 0.5 * H_c), H_c
        while cubic(lower) <= 0.0:
            lower *= 0.5
    else:
        lower, upper = H_c, max((energy - g * B) / g, H_c) * (1.0 + 1e-12) + H_FLOOR
    H = brentq(cubic, lower, upper, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=200)
    return float(H)


def steady_energy(regime: Regime, data: SteadyData, bathy: Bathymetry, p: PhysParams, domain) -> float:
    x_L, x_R = domain
    q = data.q_bar
    if regime is Regime.SUPERCRITICAL:
        if data.H_left is None:
            raise ConfigurationError("Supercritical steady state needs H at x_L")
        return float(specific_energy(data.H_left, q, bathy.value(x_L), p))
    if regime is Regime.SUBCRITICAL:
        if data.H_right is None:
            raise ConfigurationError("Subcritical steady state needs H at x_R")
        return float(specific_energy(data.H_right, q, bathy.value(x_R), p))
    if regime is Regime.TRANSCRITICAL:
        crest = bathy.crest(x_L, x_R)
        return float(1.5 * p.g * critical_height(q, p) + p.g * bathy.value(crest))
    raise ConfigurationError("Lake at rest has no energy cubic")


def solve_frictionless_steady(
    regime: Union[str, Regime],
    data: SteadyData,
    bathy: Bathymetry,
    xs,
    p: PhysParams,
    domain: Optional[Tuple[float, float]] = None,
) -> FloatArray:
    """
    Sample a frictionless steady state at ``xs``.

    Args:
        regime: lake / super / sub / trans
        data: q_bar and the height datum of the regime
        bathy: bathymetry
        xs: sample coordinates
        p: physical parameters
        domain: (x_L, x_R), defaults to the configured domain

    Returns:
        Array (n, 2) of (H, q).

    Raises:
        InfeasibleSteadyStateError: no admissible root at some x
    """
    regime = Regime(regime)
    domain = settings.domain if domain is None else domain
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    B = bathy.value(xs)
    out = np.empty((len(xs), 2))
    out[:, 1] = data.q_bar

    if regime is Regime.LAKE_AT_REST:
        eta_bar = settings.ETA_BAR if data.eta_bar is None else data.eta_bar
        out[:, 0] = eta_bar - B
        out[:, 1] = 0.0
        if np.any(out[:, 0] <= 0):
            raise InfeasibleSteadyStateError("Bathymetry emerges above the lake surface")
        return out

    if data.q_bar == 0.0:
        raise ConfigurationError(
            "Moving equilibria need a non-zero momentum", details={"regime": regime.value}
        )
    energy = steady_energy(regime, data, bathy, p, domain)
    crest = bathy.crest(*domain) if regime is Regime.TRANSCRITICAL else None
    for k, (x, b) in enumerate(zip(xs, B)):
        if regime is Regime.TRANSCRITICAL:
            if x == crest:
                out[k, 0] = critical_height(data.q_bar, p)
                continue
            supercritical = x > crest
        else:
            supercritical = regime is Regime.SUPERCRITICAL
        out[k, 0] = _energy_root(float(x), float(b), data.q_bar, energy, supercritical, p)
    return out


# ----------------------------------------------------------------------
# Friction steady states
# ----------------------------------------------------------------------


def _friction_rhs(H, dBdx, q_bar: float, p: PhysParams):
    denom = p.g - q_bar * q_bar / H**3
    return (-p.g * dBdx - p.g * p.n_M**2 * abs(q_bar) * q_bar * H ** (-10.0 / 3.0)) / denom, denom


def _integrate_friction_ode(
    bathy: Bathymetry,
    q_bar: float,
    H_start: float,
    p: PhysParams,
    domain: Tuple[float, float],
    leftward: bool,
    n_steps: int,
) -> List[CubicHermiteSpline]:
    """
    Classical RK4 for dH/dx, one segment per smooth piece of B.

    Returns one Hermite interpolant per segment, ordered left to right.
    """
    x_L, x_R = domain
    cuts = sorted({x_L, x_R, *(b for b in bathy.breakpoints if x_L < b < x_R)})
    segments = list(zip(cuts[:-1], cuts[1:]))
    if leftward:
        segments = [(b, a) for a, b in reversed(segments)]

    total = x_R - x_L
    splines = []
    H = H_start
    sign0 = None
    for a, b in segments:
        n = max(int(np.ceil(n_steps * abs(b - a) / total)), 4)
        xs = np.linspace(a, b, n + 1)
        step = (b - a) / n
        # B is smooth inside a segment: take one-sided slopes at its ends
        lo, hi = min(a, b), max(a, b)
        eps = 1e-12 * (hi - lo)
        slope_nodes = bathy.slope(np.clip(xs, lo + eps, hi - eps))
        slope_mid = bathy.slope(xs[:-1] + 0.5 * step)
        Hs = np.empty(n + 1)
        dHs = np.empty(n + 1)
        Hs[0] = H
        for i in range(n):
            k1, d1 = _friction_rhs(H, slope_nodes[i], q_bar, p)
            k2, d2 = _friction_rhs(H + 0.5 * step * k1, slope_mid[i], q_bar, p)
            k3, d3 = _friction_rhs(H + 0.5 * step * k2, slope_mid[i], q_bar, p)
            k4, d4 = _friction_rhs(H + step * k3, slope_nodes[i + 1], q_bar, p)
            signs = np.sign([d1, d2, d3, d4])
            if sign0 is None:
                sign0 = signs[0]
            if np.any(signs != sign0) or not np.isfinite(k4):
                raise InfeasibleSteadyStateError(
                    f"Sonic point reached by the friction steady state near x={xs[i]:g}",
                    details={"x": float(xs[i]), "H": float(H)},
                )
            dHs[i] = k1
            H = H + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            Hs[i + 1] = H
        dHs[n] = _friction_rhs(H, slope_nodes[n], q_bar, p)[0]
        if leftward:
            xs, Hs, dHs = xs[::-1], Hs[::-1], dHs[::-1]
        splines.append(CubicHermiteSpline(xs, Hs, dHs))
    return splines[::-1] if leftward else splines


def _piecewise_sampler(splines: List[CubicHermiteSpline], q_bar: float) -> Callable[[FloatArray], FloatArray]:
    bounds = np.array([s.x[0] for s in splines] + [splines[-1].x[-1]])

    def sample(xs: FloatArray) -> FloatArray:
        idx = np.clip(np.searchsorted(bounds, xs, side="right") - 1, 0, len(splines) - 1)
        out = np.empty((len(xs), 2))
        out[:, 1] = q_bar
        for k, spline in enumerate(splines):
            mask = idx == k
            if np.any(mask):
                out[mask, 0] = spline(xs[mask])
        return out

    return sample


def _interpolating_sampler(x: FloatArray, eta: FloatArray, q: FloatArray, bathy: Bathymetry):
    def sample(xs: FloatArray) -> FloatArray:
        out = np.empty((len(xs), 2))
        out[:, 0] = np.interp(xs, x, eta) - bathy.value(xs)
        out[:, 1] = np.interp(xs, x, q)
        return out

    return sample


def friction_ode_reference(
    regime: Union[str, Regime],
    data: SteadyData,
    bathy: Bathymetry,
    p: PhysParams,
    domain: Optional[Tuple[float, float]] = None,
    n_steps: int = ODE_MIN_STEPS,
) -> SteadyReference:
    regime = Regime(regime)
    domain = settings.domain if domain is None else domain
    if regime is Regime.SUPERCRITICAL:
        if data.H_left is None:
            raise ConfigurationError("Supercritical steady state needs H at x_L")
        splines = _integrate_friction_ode(bathy, data.q_bar, data.H_left, p, domain, False, n_steps)
    elif regime is Regime.SUBCRITICAL:
        if data.H_right is None:
            raise ConfigurationError("Subcritical steady state needs H at x_R")
        splines = _integrate_friction_ode(bathy, data.q_bar, data.H_right, p, domain, True, n_steps)
    else:
        raise ConfigurationError(
            "Friction steady states are supported for super/sub regimes only",
            details={"regime": regime.value},
        )
    logger.info(f"[STEADY] friction ODE reference ({regime.value}, n_M={p.n_M}) with {n_steps} steps")
    return SteadyReference(
        regime=regime,
        q_bar=data.q_bar,
        bathymetry=bathy,
        params=p,
        domain=tuple(domain),
        sampler=_piecewise_sampler(splines, data.q_bar),
        n_M=p.n_M,
        method=FrictionMethod.ODE.value,
    )


def friction_simulation_reference(
    regime: Union[str, Regime],
    data: SteadyData,
    bathy: Bathymetry,
    p: PhysParams,
    domain: Optional[Tuple[float, float]] = None,
    n_elem: Optional[int] = None,
    space: str = "wbgf",
    stabilization: str = "jg",
    tolerance: Optional[float] = None,
    max_time: Optional[float] = None,
) -> SteadyReference:
    """
    Long degree-1 run from the frictionless steady state with the same boundary
    data; sampled by linear interpolation of eta and q.
    """
    from app.services.simulation import SchemeConfig, Simulation

    regime = Regime(regime)
    domain = settings.domain if domain is None else domain
    n_elem = settings.STEADY_RUN_ELEMENTS if n_elem is None else n_elem
    spec = BasisSpec(BasisFamily.LAGRANGE_EQUISPACED, 1)
    mesh = build_uniform_mesh(domain[0], domain[1], n_elem, spec)

    frictionless = PhysParams(g=p.g, n_M=0.0)
    start = solve_frictionless_steady(regime, data, bathy, mesh.dof_coords, frictionless, domain)
    scheme = SchemeConfig(space=space, stabilization=stabilization, params=p)
    dec = DeCConfig(M=spec.degree, cfl=get_default_cfl(spec.degree))
    bc = BoundaryCondition(
        left_H=start[0, 0] if regime is Regime.SUPERCRITICAL else None,
        left_q=data.q_bar,
        right_H=start[-1, 0] if regime is Regime.SUBCRITICAL else None,
    )
    simulation = Simulation(mesh, bathy, scheme, dec, bc)
    result = simulation.run_to_steady(start.copy(), tolerance=tolerance, max_time=max_time)

    nodal = simulation.disc.to_nodal(result.state)
    eta = nodal[:, 0] + simulation.disc.bathy.nodal
    logger.info(
        f"[STEADY] long-run friction reference ({regime.value}, n_M={p.n_M}) on {n_elem} "
        f"elements: t={result.time:.4g}, converged={result.converged}"
    )
    return SteadyReference(
        regime=regime,
        q_bar=data.q_bar,
        bathymetry=bathy,
        params=p,
        domain=tuple(domain),
        sampler=_interpolating_sampler(mesh.dof_coords, eta, nodal[:, 1], bathy),
        n_M=p.n_M,
        method=FrictionMethod.SIMULATION.value,
    )


def solve_friction_steady(
    regime: Union[str, Regime],
    data: SteadyData,
    bathy: Bathymetry,
    n_M: float,
    xs,
    p: PhysParams,
    method: Union[str, FrictionMethod] = FrictionMethod.ODE,
    domain: Optional[Tuple[float, float]] = None,
) -> FloatArray:
    """
    Sample a steady state with Manning friction ``n_M`` at ``xs``.

    Raises:
        InfeasibleSteadyStateError: the ODE reaches a sonic point
        ConfigurationError: lake / transcritical regimes
    """
    params = PhysParams(g=p.g, n_M=n_M)
    if FrictionMethod(method) is FrictionMethod.SIMULATION:
        ref = friction_simulation_reference(regime, data, bathy, params, domain)
    else:
        ref = friction_ode_reference(regime, data, bathy, params, domain)
    return ref.sample(xs)


def build_reference(
    regime: Union[str, Regime],
    bathy: Bathymetry,
    p: PhysParams,
    data: Optional[SteadyData] = None,
    domain: Optional[Tuple[float, float]] = None,
    friction_method: Union[str, FrictionMethod] = FrictionMethod.ODE,
) -> SteadyReference:
    """Reference steady state of a regime; friction references when p.n_M > 0"""
    regime = Regime(regime)
    data = default_steady_data(regime) if data is None else data
    domain = settings.domain if domain is None else tuple(domain)
    if p.has_friction and regime is not Regime.LAKE_AT_REST:
        if FrictionMethod(friction_method) is FrictionMethod.SIMULATION:
            return friction_simulation_reference(regime, data, bathy, p, domain)
        return friction_ode_reference(regime, data, bathy, p, domain)

    energy = None if regime is Regime.LAKE_AT_REST else steady_energy(regime, data, bathy, p, domain)

    def sample(xs: FloatArray) -> FloatArray:
        return solve_frictionless_steady(regime, data, bathy, xs, p, domain)

    return SteadyReference(
        regime=regime,
        q_bar=data.q_bar,
        bathymetry=bathy,
        params=p,
        domain=domain,
        sampler=sample,
        energy=energy,
        eta_bar=data.eta_bar if regime is Regime.LAKE_AT_REST else None,
    )


# ----------------------------------------------------------------------
# Error norms
# ----------------------------------------------------------------------


def l1_error(
    state: FloatArray,
    ref: Union[SteadyReference, FloatArray],
    mesh: Mesh1D,
    spec: BasisSpec,
    mode: Union[str, ErrorMode] = ErrorMode.INTERPOLANT,
) -> Tuple[float, float]:
    """
    L1 norms of (H_h - H_ref, q_h - q_ref) with a 10-point Gauss-Legendre rule
    per element, summed left to right.

    Args:
        state: coefficient array (I, 2)
        ref: reference steady state, or its (H, q) values at the DoFs
        mesh: mesh of ``state``
        spec: basis of ``mesh``
        mode: ``interpolant`` compares with the nodal interpolant of the
              reference, ``exact`` samples the reference at the quadrature points
    """
    check_mesh_spec(mesh, spec)
    mode = ErrorMode(mode)
    rule = gauss_legendre(ERROR_QUADRATURE_POINTS)
    phi = basis_matrix(spec, 0, rule.points)
    coeffs = np.asarray(state, dtype=float)
    u_q = np.einsum("qj,ejk->eqk", phi, coeffs[mesh.elem_to_dofs])

    h = mesh.element_lengths
    if mode is ErrorMode.EXACT:
        if not isinstance(ref, SteadyReference):
            raise ConfigurationError("Exact error mode needs a samplable reference")
        x_q = mesh.element_bounds[:-1, None] + h[:, None] * rule.points[None, :]
        ref_q = ref.sample(x_q.ravel()).reshape(u_q.shape)
    else:
        nodal = ref.sample(mesh.dof_coords) if isinstance(ref, SteadyReference) else np.asarray(ref)
        local = nodal[mesh.elem_to_dofs]
        if not spec.is_lagrange:
            local = np.einsum("ij,ejk->eik", reference_element(spec).interpolation, local)
        ref_q = np.einsum("qj,ejk->eqk", phi, local)

    per_element = h[:, None] * np.einsum("q,eqk->ek", rule.weights, np.abs(u_q - ref_q))
    total = np.zeros(2)
    for row in per_element:
        total += row
    return float(total[0]), float(total[1])


def energy_residual(samples: FloatArray, xs: Sequence[float], ref: SteadyReference) -> float:
    """max |q^2/(2H^2) + g(H + B) - E| / E over the samples"""
    if ref.energy is None:
        raise ConfigurationError("Reference has no energy level")
    B = ref.bathymetry.value(np.asarray(xs, dtype=float))
    E = specific_energy(samples[:, 0], ref.q_bar, B, ref.params)
    return float(np.max(np.abs(E - ref.energy)) / abs(ref.energy))
