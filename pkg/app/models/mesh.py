"""
One-dimensional C0 mesh: element partition, global DoF numbering and the
interior-face list.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List

import numpy as np
import numpy.typing as npt

from app.core.exceptions import ConfigurationError, InputDomainError
from app.models.basis import BasisSpec, basis_matrix, local_nodes

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Face:
    index: int
    left_elem: int
    right_elem: int
    x_f: float
    shared_dof: int


@dataclass(frozen=True, eq=False)
class Mesh1D:
    x_L: float
    x_R: float
    spec: BasisSpec
    element_bounds: FloatArray
    dof_coords: FloatArray
    elem_to_dofs: IntArray
    faces: List[Face] = field(repr=False)

    @property
    def n_elem(self) -> int:
        return len(self.element_bounds) - 1

    @property
    def n_dofs(self) -> int:
        return len(self.dof_coords)

    @property
    def element_lengths(self) -> FloatArray:
        return np.diff(self.element_bounds)

    @property
    def h(self) -> float:
        """Largest element length"""
        return float(self.element_lengths.max())

    def element_of(self, x: float) -> int:
        """Index of the element containing ``x`` (left element at a face)"""
        k = int(np.searchsorted(self.element_bounds, x, side="left")) - 1
        return min(max(k, 0), self.n_elem - 1)


def build_uniform_mesh(x_L: float, x_R: float, n_elem: int, spec: BasisSpec) -> Mesh1D:
    """
    Uniform mesh of ``n_elem`` elements with the local node layout of ``spec``.

    Raises:
        ConfigurationError: if the domain is empty or there are fewer than 2 elements
    """
    if x_R <= x_L:
        raise ConfigurationError(
            "Domain must satisfy x_R > x_L", details={"x_L": x_L, "x_R": x_R}
        )
    if n_elem < 2:
        raise ConfigurationError(
            "At least two elements are required (no interior faces otherwise)",
            details={"n_elem": n_elem},
        )

    M = spec.degree
    bounds = np.linspace(x_L, x_R, n_elem + 1)
    lengths = np.diff(bounds)
    nodes = local_nodes(spec)

    dof_coords = np.empty(n_elem * M + 1)
    for k in range(n_elem):
        dof_coords[k * M : (k + 1) * M + 1] = bounds[k] + lengths[k] * nodes
    # shared nodes take the exact element bound
    dof_coords[::M] = bounds

    elem_to_dofs = np.arange(M + 1)[None, :] + M * np.arange(n_elem)[:, None]
    faces = [
        Face(index=f, left_elem=f, right_elem=f + 1, x_f=float(bounds[f + 1]), shared_dof=(f + 1) * M)
        for f in range(n_elem - 1)
    ]

    logger.debug(
        f"[MESH] built {n_elem} elements of degree {M} on ({x_L}, {x_R}): "
        f"{len(dof_coords)} DoFs, {len(faces)} faces"
    )
    return Mesh1D(
        x_L=float(x_L),
        x_R=float(x_R),
        spec=spec,
        element_bounds=bounds,
        dof_coords=dof_coords,
        elem_to_dofs=elem_to_dofs.astype(np.int64),
        faces=faces,
    )


def one_sided_eval(
    mesh: Mesh1D, coefficients, face: Face, side: Side, r: int
) -> FloatArray:
    """
    r-th spatial derivative at ``face.x_f`` using only the polynomial of one side.

    Args:
        mesh: the mesh
        coefficients: global coefficient array, first axis of size I
        face: interior face
        side: ``Side.LEFT`` uses the left element at xi = 1, ``Side.RIGHT`` the
              right element at xi = 0
        r: derivative order 0..2
    """
    if r not in (0, 1, 2):
        raise InputDomainError("Derivative order must be 0..2", details={"r": r})
    coefficients = np.asarray(coefficients, dtype=float)
    side = Side(side)
    if side is Side.LEFT:
        elem, xi = face.left_elem, 1.0
    else:
        elem, xi = face.right_elem, 0.0
    h = mesh.element_lengths[elem]
    phi = basis_matrix(mesh.spec, r, [xi])[0]
    local = coefficients[mesh.elem_to_dofs[elem]]
    return np.tensordot(phi, local, axes=(0, 0)) / h**r
