import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import numpy.typing as npt

from app.models.basis import BasisSpec, basis_matrix
from app.models.discretization import Discretization
from app.models.mesh import Mesh1D
from app.models.swe import spectral_radius
from app.services.global_flux import GlobalFluxField

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]


# ----------------------------------------------------------------------
# Face scales
# ----------------------------------------------------------------------


def _test_jumps(
    spec: BasisSpec, h_left: FloatArray, h_right: FloatArray, r: int
) -> Tuple[FloatArray, FloatArray]:
    """One-sided r-th derivatives of the left element's functions at xi = 1 and
    the right element's functions at xi = 0, each of shape (n_faces, M+1)"""
    d_left = basis_matrix(spec, r, [1.0])[0][None, :] / h_left[:, None] ** r
    d_right = basis_matrix(spec, r, [0.0])[0][None, :] / h_right[:, None] ** r
    return d_left, d_right


def patch_jumps(d_left: FloatArray, d_right: FloatArray) -> FloatArray:
    """
    Jumps [[d^r phi_i]] over the 2M+1 DoFs of the two elements sharing a face.

    The shared DoF sits at patch index M and receives both contributions.
    """
    n_faces, n_local = d_left.shape
    M = n_local - 1
    jumps = np.zeros((n_faces, 2 * M + 1))
    jumps[:, : M + 1] += d_left
    jumps[:, M:] -= d_right
    return jumps


def face_length_scale(mesh: Mesh1D, spec: BasisSpec) -> FloatArray:
    """h_f = (1/2 sum over the two elements' DoFs of |[[dphi_i/dx]]|)^-1, per interior face"""
    lengths = mesh.element_lengths
    d_left, d_right = _test_jumps(spec, lengths[:-1], lengths[1:], 1)
    return 1.0 / (0.5 * np.abs(patch_jumps(d_left, d_right)).sum(axis=1))


def stab_coefficient(delta: float, rho, h_f, r: int):
    """alpha_{f,r} = delta_r * rho_f * h_f^(2r)"""
    return delta * rho * h_f ** (2 * r)


@dataclass(frozen=True, eq=False)
class FaceTerm:
    """
    One penalty term on every interior face:
    ST_i += alpha * [[d^r phi_i]] * (matrix @ jump)
    """

    order: int
    alpha: FloatArray
    jump: FloatArray
    matrix: Optional[FloatArray] = None

    def weighted_jump(self) -> FloatArray:
        jump = self.jump if self.matrix is None else np.einsum("fij,fj->fi", self.matrix, self.jump)
        return self.alpha[:, None] * jump


@dataclass(frozen=True, eq=False)
class FaceContext:
    """Face-node state and scales shared by every term of one assembly"""

    states: FloatArray
    rho: FloatArray
    h_f: FloatArray


class JumpStabilization(ABC):
    """
    Abstract base class for continuous-interior-penalty stabilizations.

    Each stabilization defines, per interior face, a list of FaceTerm
    objects (derivative order, alpha, state jump and an optional 2x2 weight
    evaluated at the face node). The base class turns them into the CG
    penalty ST_i and into its element-by-element split ST_i^K.

    To add a new stabilization:
      1. Create a subclass in this package.
      2. Implement `name` and `face_terms`.
      3. Register the subclass in factory.py.
    """

    requires_global_flux: bool = False

    def __init__(
        self,
        delta1: float,
        delta2: Optional[float] = None,
        fix_fraction: Optional[float] = None,
    ):
        self.delta1 = delta1
        self.delta2 = delta2
        self.fix_fraction = fix_fraction
        logger.debug(
            f"[{self.__class__.__name__}] initialized: delta1={delta1}, delta2={delta2}"
        )

    # ------------------------------------------------------------------
    # Abstract properties / methods
    # ------------------------------------------------------------------

    @property
    @abstractmethod
    def name(self) -> str:
        """Registry key, e.g. ``jt``"""
        ...

    @abstractmethod
    def face_terms(
        self,
        disc: Discretization,
        state: FloatArray,
        ctx: FaceContext,
        gflux: Optional[GlobalFluxField] = None,
    ) -> List[FaceTerm]:
        """Penalty terms of this stabilization on all interior faces"""
        ...

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------

    def assemble(
        self,
        disc: Discretization,
        state: FloatArray,
        gflux: Optional[GlobalFluxField] = None,
    ) -> FloatArray:
        """CG form: ST_i summed over faces, patch jumps of the test functions"""
        out = np.zeros((disc.n_dofs, 2))
        if disc.n_elem < 2:
            return out
        patch = np.concatenate([disc.left_dofs, disc.right_dofs[:, 1:]], axis=1)
        for term in self._terms(disc, state, gflux):
            d_left, d_right = _test_jumps(disc.spec, disc.h_left, disc.h_right, term.order)
            test = patch_jumps(d_left, d_right)
            contrib = test[:, :, None] * term.weighted_jump()[:, None, :]
            np.add.at(out, patch.ravel(), contrib.reshape(-1, 2))
        return out

    def rd_split(
        self,
        disc: Discretization,
        state: FloatArray,
        gflux: Optional[GlobalFluxField] = None,
    ) -> FloatArray:
        """
        Element split ST_i^K with the one-sided test factor d^r phi_i|_K and the
        jump taken from K's side, shape (n_elem, M+1, 2).
        """
        local = np.zeros((disc.n_elem, disc.spec.n_local, 2))
        if disc.n_elem < 2:
            return local
        for term in self._terms(disc, state, gflux):
            d_left, d_right = _test_jumps(disc.spec, disc.h_left, disc.h_right, term.order)
            weighted = term.weighted_jump()
            local[:-1] += d_left[:, :, None] * weighted[:, None, :]
            local[1:] -= d_right[:, :, None] * weighted[:, None, :]
        return local

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------

    def _terms(
        self,
        disc: Discretization,
        state: FloatArray,
        gflux: Optional[GlobalFluxField],
    ) -> List[FaceTerm]:
        state = np.asarray(state, dtype=float)
        ctx = self.face_context(disc, state)
        return self.face_terms(disc, state, ctx, gflux)

    def face_context(self, disc: Discretization, state: FloatArray) -> FaceContext:
        states = disc.face_values(state)
        h_f = face_length_scale(disc.mesh, disc.spec)
        return FaceContext(states=states, rho=spectral_radius(states, disc.params), h_f=h_f)

    def fix(self, disc: Discretization) -> Optional[float]:
        return self.fix_fraction if self.fix_fraction is not None else disc.fix_fraction

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}(delta1={self.delta1}, delta2={self.delta2})"
