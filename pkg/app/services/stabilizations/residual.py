from typing import List, Optional

import numpy as np

from app.models.discretization import Discretization
from app.models.swe import abs_jacobian_inverse, jacobian
from app.services.global_flux import GlobalFluxField
from app.services.stabilizations.base import (
    FaceContext,
    FaceTerm,
    FloatArray,
    JumpStabilization,
    stab_coefficient,
)


def residual_jump(disc: Discretization, state: FloatArray, face_states: FloatArray) -> FloatArray:
    """
    [[J du_h/dx - S*]] with S* = -(0, g H_h dB_h/dx).

    J and H are taken at the face node, where u_h is single-valued.
    """
    J = jacobian(face_states, disc.params)
    du_jump = disc.face_jump(state, 1)
    dB_jump = disc.face_jump(disc.bathy.coeffs, 1)
    jump = np.einsum("fij,fj->fi", J, du_jump)
    jump[:, 1] += disc.params.g * face_states[:, 0] * dB_jump
    return jump


class ResidualJumpStabilization(JumpStabilization):
    """jr: jump of the steady residual, weighted by J |J|^-1"""

    @property
    def name(self) -> str:
        return "jr"

    def face_terms(
        self,
        disc: Discretization,
        state: FloatArray,
        ctx: FaceContext,
        gflux: Optional[GlobalFluxField] = None,
    ) -> List[FaceTerm]:
        weight = jacobian(ctx.states, disc.params) @ abs_jacobian_inverse(
            ctx.states, disc.params, self.fix(disc)
        )
        return [
            FaceTerm(
                order=1,
                alpha=stab_coefficient(self.delta1, ctx.rho, ctx.h_f, 1),
                jump=residual_jump(disc, state, ctx.states),
                matrix=weight,
            )
        ]
