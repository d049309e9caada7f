"""
Discrete context shared by the space residuals, the stabilizations and the
time integrator: a mesh, its basis tables, the sampled bathymetry and
vectorised gather/scatter helpers.

Global fields are stored as coefficient arrays whose first axis runs over the
I global DoFs (shape (I,) for scalars, (I, 2) for (H, q)). Assembly always
visits elements left to right and local DoFs in index order, so floating-point
sums are reproducible.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import numpy.typing as npt

from app.core.exceptions import ConfigurationError, InternalError
from app.models.basis import BasisSpec, basis_matrix, reference_element
from app.models.bathymetry import Bathymetry
from app.models.mesh import Mesh1D, Side
from app.models.swe import PhysParams, check_state

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True, eq=False)
class DiscreteBathymetry:
    """B sampled at the DoFs, its interpolant B_h and the DoF-averaged slope of B_h"""

    nodal: FloatArray
    coeffs: FloatArray
    slope_nodal: FloatArray


class Discretization:
    """Mesh + basis + bathymetry + physics, with reference tables cached"""

    def __init__(
        self,
        mesh: Mesh1D,
        bathymetry: Bathymetry,
        params: PhysParams,
        fix_fraction: Optional[float] = None,
    ):
        self.mesh = mesh
        self.spec = mesh.spec
        self.ref = reference_element(mesh.spec)
        self.bathymetry = bathymetry
        self.params = params
        self.fix_fraction = fix_fraction

        self.h = mesh.element_lengths
        self.elem_dofs = mesh.elem_to_dofs
        self.n_dofs = mesh.n_dofs
        self.n_elem = mesh.n_elem
        self.dofs_sorted = bool(np.all(np.diff(mesh.dof_coords) > 0))

        # basis derivatives at the element's own nodes, (M+1 nodes, M+1 functions)
        self.phi_nodes = tuple(
            basis_matrix(self.spec, r, self.ref.nodes) for r in range(3)
        )

        rule = self.ref.quadrature
        phi0, phi1 = self.ref.phi_q[0], self.ref.phi_q[1]
        # int phi_i phi_j' and int phi_i phi_j on the unit element
        self.convection = (phi0.T * rule.weights) @ phi1
        self.unit_mass = (phi0.T * rule.weights) @ phi0

        self.lumped = self.scatter_add(self.h[:, None] * self.ref.lumped[None, :])
        if np.any(self.lumped <= 0.0):
            raise ConfigurationError(
                "Non-positive assembled lumped mass", details={"basis": self.spec.label}
            )

        # interior faces: face f joins elements f and f+1
        self.face_dofs = np.array([f.shared_dof for f in mesh.faces], dtype=np.int64)
        self.left_dofs = self.elem_dofs[:-1]
        self.right_dofs = self.elem_dofs[1:]
        self.h_left = self.h[:-1]
        self.h_right = self.h[1:]

        self.bathy = self._sample_bathymetry()
        logger.debug(
            f"[DISCRETIZATION] {self.spec.label}, {self.n_elem} elements, {self.n_dofs} DoFs"
        )

    # ------------------------------------------------------------------
    # Gather / scatter
    # ------------------------------------------------------------------

    def gather(self, values: FloatArray) -> FloatArray:
        """Global (I, ...) -> element-local (n_elem, M+1, ...)"""
        return np.asarray(values)[self.elem_dofs]

    def scatter_add(self, local: FloatArray) -> FloatArray:
        """Element-local (n_elem, M+1, ...) -> global sum (I, ...)"""
        local = np.asarray(local, dtype=float)
        out = np.zeros((self.n_dofs,) + local.shape[2:])
        np.add.at(out, self.elem_dofs.ravel(), local.reshape((-1,) + local.shape[2:]))
        return out

    def scatter_set(self, local: FloatArray) -> FloatArray:
        """Element-local values that agree on shared DoFs -> global array"""
        local = np.asarray(local, dtype=float)
        out = np.empty((self.n_dofs,) + local.shape[2:])
        out[self.elem_dofs] = local
        return out

    # ------------------------------------------------------------------
    # Nodal values <-> coefficients
    # ------------------------------------------------------------------

    def to_coefficients(self, nodal: FloatArray) -> FloatArray:
        """Interpolate values at the DoFs into basis coefficients"""
        nodal = np.asarray(nodal, dtype=float)
        if self.spec.is_lagrange:
            return nodal.copy()
        local = np.tensordot(self.ref.interpolation, self.gather(nodal), axes=(1, 1))
        return self.scatter_set(np.moveaxis(local, 0, 1))

    def to_nodal(self, coeffs: FloatArray) -> FloatArray:
        """Values of the piecewise polynomial at the DoFs"""
        coeffs = np.asarray(coeffs, dtype=float)
        if self.spec.is_lagrange:
            return coeffs.copy()
        local = np.tensordot(self.ref.collocation, self.gather(coeffs), axes=(1, 1))
        return self.scatter_set(np.moveaxis(local, 0, 1))

    def local_to_coefficients(self, local_nodal: FloatArray) -> FloatArray:
        """Element-local nodal values (n_elem, M+1, ...) -> element-local coefficients"""
        if self.spec.is_lagrange:
            return np.array(local_nodal, dtype=float)
        local = np.tensordot(self.ref.interpolation, local_nodal, axes=(1, 1))
        return np.moveaxis(local, 0, 1)

    def nodal_states(self, coeffs: FloatArray) -> FloatArray:
        """(H, q) at the DoFs, validated"""
        nodal = self.to_nodal(coeffs)
        return check_state(nodal, where=self.mesh.dof_coords)

    def states_from_nodal(self, nodal: FloatArray) -> FloatArray:
        """Coefficients of a state given (H, q) at the DoFs"""
        check_state(nodal, where=self.mesh.dof_coords)
        return self.to_coefficients(nodal)

    # ------------------------------------------------------------------
    # Derivatives and traces
    # ------------------------------------------------------------------

    def element_derivative_at_nodes(self, coeffs: FloatArray, r: int = 1) -> FloatArray:
        """r-th x-derivative of each element polynomial at that element's nodes"""
        local = np.tensordot(self.phi_nodes[r], self.gather(coeffs), axes=(1, 1))
        scale = self.h ** (-r)
        local = np.moveaxis(local, 0, 1)
        return local * scale.reshape((-1,) + (1,) * (local.ndim - 1))

    def face_trace(self, coeffs: FloatArray, side: Side, r: int) -> FloatArray:
        """One-sided r-th derivative at every interior face, shape (n_faces, ...)"""
        coeffs = np.asarray(coeffs, dtype=float)
        if Side(side) is Side.LEFT:
            phi, dofs, h = self.ref.phi_right[r], self.left_dofs, self.h_left
        else:
            phi, dofs, h = self.ref.phi_left[r], self.right_dofs, self.h_right
        values = np.tensordot(phi, coeffs[dofs], axes=(0, 1))
        scale = h ** (-r)
        return values * scale.reshape((-1,) + (1,) * (values.ndim - 1))

    def face_jump(self, coeffs: FloatArray, r: int) -> FloatArray:
        """Left-minus-right jump of the r-th derivative at every interior face"""
        return self.face_trace(coeffs, Side.LEFT, r) - self.face_trace(coeffs, Side.RIGHT, r)

    def face_values(self, coeffs: FloatArray) -> FloatArray:
        """Values at the face nodes (the shared endpoint coefficient)"""
        return np.asarray(coeffs)[self.face_dofs]

    def evaluate(self, coeffs: FloatArray, xi: FloatArray, r: int = 0) -> FloatArray:
        """Values (or derivatives) at local points ``xi`` of every element, (n_elem, len(xi), ...)"""
        phi = basis_matrix(self.spec, r, xi)
        local = np.tensordot(phi, self.gather(coeffs), axes=(1, 1))
        local = np.moveaxis(local, 0, 1)
        scale = self.h ** (-r)
        return local * scale.reshape((-1,) + (1,) * (local.ndim - 1))

    def mass_matvec(self, coeffs: FloatArray) -> FloatArray:
        """Consistent mass matrix times a global vector, assembled element by element"""
        local = np.tensordot(self.unit_mass, self.gather(coeffs), axes=(1, 1))
        local = np.moveaxis(local, 0, 1)
        local = local * self.h.reshape((-1,) + (1,) * (local.ndim - 1))
        return self.scatter_add(local)

    def require_sorted_dofs(self) -> None:
        if not self.dofs_sorted:
            raise InternalError("Global DoFs are not sorted left to right")

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------

    def _sample_bathymetry(self) -> DiscreteBathymetry:
        nodal = np.asarray(self.bathymetry.value(self.mesh.dof_coords), dtype=float)
        coeffs = self.to_coefficients(nodal)
        slopes = self.element_derivative_at_nodes(coeffs, 1)
        counts = self.scatter_add(np.ones_like(slopes))
        slope_nodal = self.scatter_add(slopes) / counts
        return DiscreteBathymetry(nodal=nodal, coeffs=coeffs, slope_nodal=slope_nodal)


def check_mesh_spec(mesh: Mesh1D, spec: BasisSpec) -> None:
    """The mesh carries its basis; a different ``spec`` is a caller error"""
    if mesh.spec != spec:
        raise ConfigurationError(
            f"Mesh built for {mesh.spec.label} used with basis {spec.label}",
            details={"mesh_basis": mesh.spec.label, "basis": spec.label},
        )
