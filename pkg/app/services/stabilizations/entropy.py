from typing import List, Optional

from app.models.discretization import Discretization
from app.models.swe import entropy_jac_Af, entropy_vars
from app.services.global_flux import GlobalFluxField
from app.services.stabilizations.base import (
    FaceContext,
    FaceTerm,
    FloatArray,
    JumpStabilization,
    stab_coefficient,
)


class EntropyJumpStabilization(JumpStabilization):
    """
    je: jump of dw/dx with w = (g eta - v^2/2, v) interpolated from its DoF
    values, weighted by A_f = du/dw at the face node.
    """

    @property
    def name(self) -> str:
        return "je"

    def face_terms(
        self,
        disc: Discretization,
        state: FloatArray,
        ctx: FaceContext,
        gflux: Optional[GlobalFluxField] = None,
    ) -> List[FaceTerm]:
        u = disc.nodal_states(state)
        w = disc.to_coefficients(entropy_vars(u, disc.bathy.nodal, disc.params))
        return [
            FaceTerm(
                order=1,
                alpha=stab_coefficient(self.delta1, ctx.rho, ctx.h_f, 1),
                jump=disc.face_jump(w, 1),
                matrix=entropy_jac_Af(ctx.states, disc.params),
            )
        ]
