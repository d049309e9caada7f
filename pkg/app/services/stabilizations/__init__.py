from app.services.stabilizations.base import (
    FaceTerm,
    JumpStabilization,
    face_length_scale,
    stab_coefficient,
)
from app.services.stabilizations.factory import (
    STABILIZATIONS,
    assemble_stabilization,
    get_stabilization,
    rd_split_stabilization,
)

__all__ = [
    "FaceTerm",
    "JumpStabilization",
    "STABILIZATIONS",
    "assemble_stabilization",
    "face_length_scale",
    "get_stabilization",
    "rd_split_stabilization",
    "stab_coefficient",
]
