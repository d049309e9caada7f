"""
Per-DoF spatial residuals Phi_i = int [dF/dx - S]_h phi_i dx.

Three discretizations of the bracket are available:

  - ``nonwb``: interpolate F and S separately,
  - ``wbhs``: interpolate the velocity parts and write the hydrostatic pair as
    g H_h d(H_h + B_h)/dx,
  - ``wbgf``: differentiate the interpolated global flux G_h.
"""

import logging
from enum import Enum
from typing import Callable, Dict, Optional, Union

import numpy as np
import numpy.typing as npt

from app.core.exceptions import ConfigurationError
from app.models.bathymetry import Bathymetry
from app.models.basis import BasisSpec
from app.models.discretization import Discretization, check_mesh_spec
from app.models.mesh import Mesh1D
from app.models.swe import PhysParams, flux, flux_V, source, source_V
from app.services.global_flux import GlobalFluxField, global_flux

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


class SpaceScheme(str, Enum):
    NON_WB = "nonwb"
    WB_HS = "wbhs"
    WB_GF = "wbgf"

    @property
    def is_well_balanced(self) -> bool:
        return self is not SpaceScheme.NON_WB


def _divergence_terms(disc: Discretization, flux_c: FloatArray, source_c: FloatArray) -> FloatArray:
    """Element-local int (dF_h/dx - S_h) phi_i, shape (n_elem, M+1, 2)"""
    F_loc = disc.gather(flux_c)
    S_loc = disc.gather(source_c)
    conv = np.einsum("ij,ejk->eik", disc.convection, F_loc)
    mass = np.einsum("ij,ejk->eik", disc.unit_mass, S_loc)
    return conv - disc.h[:, None, None] * mass


def hydrostatic_terms(disc: Discretization, state: FloatArray) -> FloatArray:
    """int g H_h d(H_h + B_h)/dx phi_i on every element, shape (n_elem, M+1, 2)"""
    rule = disc.ref.quadrature
    H_c = state[:, 0]
    eta_c = H_c + disc.bathy.coeffs
    H_q = disc.gather(H_c) @ disc.ref.phi_q[0].T
    # the 1/h of the derivative cancels the h of the integral
    deta_q = disc.gather(eta_c) @ disc.ref.phi_q[1].T
    integrand = disc.params.g * rule.weights[None, :] * H_q * deta_q
    out = np.zeros((disc.n_elem, disc.spec.n_local, 2))
    out[..., 1] = integrand @ disc.ref.phi_q[0]
    return out


def _nonwb_residual(disc: Discretization, state: FloatArray, gflux=None) -> FloatArray:
    u = disc.nodal_states(state)
    F = flux(u, disc.params)
    S = source(disc.mesh.dof_coords, u, disc.bathy.slope_nodal, disc.params)
    local = _divergence_terms(disc, disc.to_coefficients(F), disc.to_coefficients(S))
    return disc.scatter_add(local)


def _wbhs_residual(disc: Discretization, state: FloatArray, gflux=None) -> FloatArray:
    u = disc.nodal_states(state)
    FV = flux_V(u, disc.params)
    SV = source_V(u, disc.params)
    local = _divergence_terms(disc, disc.to_coefficients(FV), disc.to_coefficients(SV))
    local = local + hydrostatic_terms(disc, state)
    return disc.scatter_add(local)


def _wbgf_residual(
    disc: Discretization, state: FloatArray, gflux: Optional[GlobalFluxField] = None
) -> FloatArray:
    if gflux is None:
        gflux = global_flux(disc, state)
    G_loc = disc.gather(gflux.coeffs)
    return disc.scatter_add(np.einsum("ij,ejk->eik", disc.convection, G_loc))


# ---------------------------------------------------------------------------
# Scheme registry
# ---------------------------------------------------------------------------
SPACE_RESIDUALS: Dict[SpaceScheme, Callable[..., FloatArray]] = {
    SpaceScheme.NON_WB: _nonwb_residual,
    SpaceScheme.WB_HS: _wbhs_residual,
    SpaceScheme.WB_GF: _wbgf_residual,
}


def get_space_scheme(name: Union[str, SpaceScheme]) -> SpaceScheme:
    """Look up a space scheme case-insensitively"""
    try:
        return SpaceScheme(str(getattr(name, "value", name)).strip().lower())
    except ValueError:
        available = ", ".join(s.value for s in SpaceScheme)
        raise ConfigurationError(
            f"Space scheme not supported: '{name}'. Available: {available}"
        ) from None


def space_residual(
    scheme: Union[str, SpaceScheme],
    disc: Discretization,
    state: FloatArray,
    gflux: Optional[GlobalFluxField] = None,
) -> FloatArray:
    """Residual on a prepared discretization; ``gflux`` is reused by ``wbgf`` when given"""
    scheme = get_space_scheme(scheme)
    return SPACE_RESIDUALS[scheme](disc, np.asarray(state, dtype=float), gflux)


def assemble_space_residual(
    scheme: Union[str, SpaceScheme],
    mesh: Mesh1D,
    spec: BasisSpec,
    state: FloatArray,
    bathy: Bathymetry,
    p: PhysParams,
) -> FloatArray:
    """
    Assemble Phi_i for every DoF.

    Args:
        scheme: ``nonwb``, ``wbhs`` or ``wbgf``
        mesh: mesh (DoFs sorted left to right for ``wbgf``)
        spec: basis of ``mesh``
        state: coefficient array (I, 2) of (H, q)
        bathy: bathymetry
        p: physical parameters

    Returns:
        Array (I, 2) of per-DoF residuals.

    Raises:
        StateError: on a dry or non-finite DoF state
        InternalError: ``wbgf`` on a mesh with unsorted DoFs
    """
    check_mesh_spec(mesh, spec)
    return space_residual(scheme, Discretization(mesh, bathy, p), state)


def wb_hs_hydrostatic_term(
    element: int,
    spec: BasisSpec,
    state: FloatArray,
    bathy: Union[Bathymetry, Discretization],
    p: Optional[PhysParams] = None,
    mesh: Optional[Mesh1D] = None,
) -> FloatArray:
    """
    Contribution of (0, g H_h d(H_h + B_h)/dx) to the local DoFs of one element.

    ``bathy`` may be a prepared Discretization; otherwise ``mesh`` and ``p``
    are required to build one.

    Returns:
        Array (M+1, 2).
    """
    if isinstance(bathy, Discretization):
        disc = bathy
    else:
        if mesh is None or p is None:
            raise ConfigurationError("mesh and physical parameters are required")
        disc = Discretization(mesh, bathy, p)
    check_mesh_spec(disc.mesh, spec)
    return hydrostatic_terms(disc, np.asarray(state, dtype=float))[element]
