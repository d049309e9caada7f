"""
Global flux G = F + R, R being the primitive of -S accumulated from x_L.

Inside every element the hydrostatic integrand is the local interpolant of
g (H_h + B_h) dB_h/dx minus d/dx [g B^2 / 2]_h, and the friction integrand is
the interpolant of the nodal friction samples; both are integrated exactly as
polynomials and summed element by element from left to right.
"""

import logging
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

from app.models.bathymetry import Bathymetry
from app.models.basis import BasisSpec
from app.models.discretization import Discretization, check_mesh_spec
from app.models.mesh import Mesh1D
from app.models.swe import PhysParams, flux, source_V

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class GlobalFluxField:
    """G at the DoFs, the coefficients of its interpolant G_h and the primitive R_h(x_i)"""

    nodal: FloatArray
    coeffs: FloatArray
    primitive: FloatArray


def global_flux(disc: Discretization, state: FloatArray) -> GlobalFluxField:
    """Global flux of the coefficient vector ``state`` on a prepared discretization"""
    disc.require_sorted_dofs()
    g = disc.params.g
    u = disc.nodal_states(state)

    u_loc = disc.gather(u)
    B_loc = disc.gather(disc.bathy.nodal)
    dB_loc = disc.element_derivative_at_nodes(disc.bathy.coeffs, 1)
    A = disc.ref.antiderivative
    h = disc.h[:, None]

    hydro = g * (u_loc[..., 0] + B_loc) * dB_loc
    hydro_c = disc.local_to_coefficients(hydro)
    increment = h * (hydro_c @ A.T) - 0.5 * g * (B_loc * B_loc - (B_loc[:, :1] * B_loc[:, :1]))

    if disc.params.has_friction:
        friction = source_V(u_loc, disc.params)[..., 1]
        friction_c = disc.local_to_coefficients(friction)
        increment = increment - h * (friction_c @ A.T)

    # R_h at the left end of each element, summed left to right
    left_values = np.concatenate(([0.0], np.cumsum(increment[:, -1])[:-1]))
    R2 = disc.scatter_set(left_values[:, None] + increment)

    primitive = np.zeros((disc.n_dofs, 2))
    primitive[:, 1] = R2
    nodal = flux(u, disc.params) + primitive
    return GlobalFluxField(nodal=nodal, coeffs=disc.to_coefficients(nodal), primitive=primitive)


def compute_global_flux(
    mesh: Mesh1D,
    spec: BasisSpec,
    state: FloatArray,
    bathy: Bathymetry,
    p: PhysParams,
) -> GlobalFluxField:
    """
    Global flux of ``state`` on ``mesh``.

    Args:
        mesh: mesh whose DoFs are sorted left to right
        spec: basis of ``mesh``
        state: coefficient array (I, 2)
        bathy: bathymetry
        p: physical parameters

    Returns:
        GlobalFluxField with G_i = F(u_i) + R_h(x_i)
    """
    check_mesh_spec(mesh, spec)
    return global_flux(Discretization(mesh, bathy, p), state)
