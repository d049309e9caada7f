import logging
from typing import Dict, Optional, Type

import numpy as np

from app.core.config import get_cip_coefficients
from app.core.exceptions import ConfigurationError
from app.models.basis import BasisSpec
from app.models.bathymetry import Bathymetry
from app.models.discretization import Discretization, check_mesh_spec
from app.models.mesh import Mesh1D
from app.models.swe import PhysParams
from app.services.global_flux import GlobalFluxField
from app.services.stabilizations.base import FloatArray, JumpStabilization
from app.services.stabilizations.conserved import (
    ConservedJumpStabilization,
    TotalHeightJumpStabilization,
)
from app.services.stabilizations.entropy import EntropyJumpStabilization
from app.services.stabilizations.flux_jump import GlobalFluxJumpStabilization
from app.services.stabilizations.residual import ResidualJumpStabilization

logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Stabilization registry
# ---------------------------------------------------------------------------
# Maps stabilization identifiers to their implementation classes.
# To add a new stabilization:
#   1. Create a subclass of JumpStabilization in this package.
#   2. Add an entry here.
# ---------------------------------------------------------------------------
STABILIZATIONS: Dict[str, Type[JumpStabilization]] = {
    "jc": ConservedJumpStabilization,
    "jt": TotalHeightJumpStabilization,
    "je": EntropyJumpStabilization,
    "jr": ResidualJumpStabilization,
    "jg": GlobalFluxJumpStabilization,
}


def get_stabilization(
    name: str,
    delta1: float,
    delta2: Optional[float] = None,
    fix_fraction: Optional[float] = None,
) -> JumpStabilization:
    """
    Factory function: returns a JumpStabilization for the given name.

    Args:
        name: Identifier such as ``"jt"`` or ``"jg"``, looked up case-insensitively.
        delta1: coefficient of the first-derivative term
        delta2: coefficient of the second-derivative term (jc / jt only)
        fix_fraction: entropy-fix fraction for |J|^-1 (jr / jg only)

    Raises:
        ConfigurationError: If the stabilization is not registered.
    """
    key = str(name).strip().lower()
    stab_class = STABILIZATIONS.get(key)
    if stab_class is None:
        available = ", ".join(sorted(STABILIZATIONS.keys()))
        raise ConfigurationError(
            f"Stabilization not supported: '{name}'. Available: {available}",
            details={"stabilization": name},
        )
    logger.debug(f"[STABILIZATION] using {key} ({stab_class.__name__})")
    return stab_class(delta1=delta1, delta2=delta2, fix_fraction=fix_fraction)


def _resolve(
    name: str,
    spec: BasisSpec,
    delta1: Optional[float],
    delta2: Optional[float],
    fix_fraction: Optional[float],
) -> JumpStabilization:
    default1, default2 = get_cip_coefficients(spec.degree)
    return get_stabilization(
        name,
        delta1=default1 if delta1 is None else delta1,
        delta2=default2 if delta2 is None else delta2,
        fix_fraction=fix_fraction,
    )


def assemble_stabilization(
    scheme: str,
    mesh: Mesh1D,
    spec: BasisSpec,
    state: FloatArray,
    bathy: Bathymetry,
    p: PhysParams,
    gflux: Optional[GlobalFluxField] = None,
    delta1: Optional[float] = None,
    delta2: Optional[float] = None,
    fix_fraction: Optional[float] = None,
) -> FloatArray:
    """
    Per-DoF penalty ST_i, summed over interior faces left to right.

    Unset coefficients default to the per-degree table of
    ``get_cip_coefficients``.

    Raises:
        ConfigurationError: unknown scheme, or ``jg`` without ``gflux``
        StateError: dry face state
    """
    check_mesh_spec(mesh, spec)
    stab = _resolve(scheme, spec, delta1, delta2, fix_fraction)
    return stab.assemble(Discretization(mesh, bathy, p), np.asarray(state, dtype=float), gflux)


def rd_split_stabilization(
    scheme: str,
    mesh: Mesh1D,
    spec: BasisSpec,
    state: FloatArray,
    bathy: Bathymetry,
    p: PhysParams,
    gflux: Optional[GlobalFluxField] = None,
    delta1: Optional[float] = None,
    delta2: Optional[float] = None,
    fix_fraction: Optional[float] = None,
) -> FloatArray:
    """
    Element split ST_i^K, shape (n_elem, M+1, 2).

    Scattering the split over the elements reproduces ``assemble_stabilization``.
    """
    check_mesh_spec(mesh, spec)
    stab = _resolve(scheme, spec, delta1, delta2, fix_fraction)
    return stab.rd_split(Discretization(mesh, bathy, p), np.asarray(state, dtype=float), gflux)
