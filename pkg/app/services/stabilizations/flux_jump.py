from typing import List, Optional

from app.core.exceptions import ConfigurationError
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


class GlobalFluxJumpStabilization(JumpStabilization):
    """jg: jump of dG_h/dx, weighted by J |J|^-1; needs the global flux of the same state"""

    requires_global_flux = True

    @property
    def name(self) -> str:
        return "jg"

    def face_terms(
        self,
        disc: Discretization,
        state: FloatArray,
        ctx: FaceContext,
        gflux: Optional[GlobalFluxField] = None,
    ) -> List[FaceTerm]:
        if gflux is None:
            raise ConfigurationError(
                "Stabilization 'jg' requires the global flux of the current state"
            )
        weight = jacobian(ctx.states, disc.params) @ abs_jacobian_inverse(
            ctx.states, disc.params, self.fix(disc)
        )
        return [
            FaceTerm(
                order=1,
                alpha=stab_coefficient(self.delta1, ctx.rho, ctx.h_f, 1),
                jump=disc.face_jump(gflux.coeffs, 1),
                matrix=weight,
            )
        ]
