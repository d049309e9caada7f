from typing import List, Optional

import numpy as np

from app.core.config import get_cip_coefficients
from app.models.discretization import Discretization
from app.services.global_flux import GlobalFluxField
from app.services.stabilizations.base import (
    FaceContext,
    FaceTerm,
    FloatArray,
    JumpStabilization,
    stab_coefficient,
)


class ConservedJumpStabilization(JumpStabilization):
    """
    jc: jumps of the first and second derivatives of (H, q).

    Not well-balanced: at rest H_h = eta - B_h has kinks wherever B_h does.
    """

    @property
    def name(self) -> str:
        return "jc"

    def penalized_field(self, disc: Discretization, state: FloatArray) -> FloatArray:
        return state

    def face_terms(
        self,
        disc: Discretization,
        state: FloatArray,
        ctx: FaceContext,
        gflux: Optional[GlobalFluxField] = None,
    ) -> List[FaceTerm]:
        field = self.penalized_field(disc, state)
        delta2 = self.delta2
        if delta2 is None:
            delta2 = get_cip_coefficients(disc.spec.degree)[1]
        terms = []
        for r, delta in ((1, self.delta1), (2, delta2)):
            terms.append(
                FaceTerm(
                    order=r,
                    alpha=stab_coefficient(delta, ctx.rho, ctx.h_f, r),
                    jump=disc.face_jump(field, r),
                )
            )
        return terms


class TotalHeightJumpStabilization(ConservedJumpStabilization):
    """jt: as jc with H replaced by the total height H + B"""

    @property
    def name(self) -> str:
        return "jt"

    def penalized_field(self, disc: Discretization, state: FloatArray) -> FloatArray:
        field = np.array(state, dtype=float)
        field[:, 0] += disc.bathy.coeffs
        return field
