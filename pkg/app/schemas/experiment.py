import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from app.core.config import get_cip_coefficients, get_default_cfl, settings
from app.core.exceptions import ConfigurationError
from app.models.basis import BasisFamily, BasisSpec
from app.models.bathymetry import Bathymetry, BathymetryKind
from app.models.swe import PhysParams
from app.services.dec_integrator import DeCConfig, DeCVariant
from app.services.simulation import SchemeConfig
from app.services.space_residual import SpaceScheme
from app.services.stabilizations import STABILIZATIONS
from app.services.steady_reference import ErrorMode, FrictionMethod, Regime

logger = logging.getLogger(__name__)


class ExperimentCase(str, Enum):
    LAKE = "lake"
    SUPER = "super"
    SUB = "sub"
    TRANS = "trans"
    PERTURB_LAKE = "perturb-lake"
    PERTURB_SUPER = "perturb-super"
    PERTURB_SUB = "perturb-sub"
    PERTURB_TRANS = "perturb-trans"

    @property
    def is_perturbation(self) -> bool:
        return self.value.startswith("perturb-")

    @property
    def regime(self) -> Regime:
        return Regime(self.value.replace("perturb-", ""))

    @property
    def default_t_final(self) -> float:
        return TEST_DEFAULTS[self][0]

    @property
    def default_amplitude(self) -> Optional[float]:
        return TEST_DEFAULTS[self][1]

    @property
    def default_bathymetry(self) -> BathymetryKind:
        return TEST_DEFAULTS[self][2]


# final time, perturbation amplitude, bathymetry
TEST_DEFAULTS: Dict[ExperimentCase, Tuple[float, Optional[float], BathymetryKind]] = {
    ExperimentCase.LAKE: (10.0, None, BathymetryKind.C0_PARABOLA),
    ExperimentCase.SUPER: (100.0, None, BathymetryKind.SMOOTH_BUMP),
    ExperimentCase.SUB: (100.0, None, BathymetryKind.SMOOTH_BUMP),
    ExperimentCase.TRANS: (100.0, None, BathymetryKind.SMOOTH_BUMP),
    ExperimentCase.PERTURB_LAKE: (1.5, 5e-5, BathymetryKind.C0_PARABOLA),
    ExperimentCase.PERTURB_SUPER: (1.0, 5e-5, BathymetryKind.C0_PARABOLA),
    ExperimentCase.PERTURB_SUB: (1.5, 5e-4, BathymetryKind.C0_PARABOLA),
    ExperimentCase.PERTURB_TRANS: (1.5, 5e-4, BathymetryKind.C0_PARABOLA),
}

# Config-file sections and the fields each one holds
SECTIONS: Dict[str, List[str]] = {
    "case": ["test"],
    "discretization": [
        "basis",
        "degree",
        "elems",
        "scheme",
        "stab",
        "delta1",
        "delta2",
        "dec",
        "dec_subintervals",
        "dec_iterations",
    ],
    "physics": ["g", "friction", "bathymetry", "bathymetry_file", "eta_bar", "fix_fraction"],
    "time": ["cfl", "tfinal", "snapshots"],
    "perturbation": ["amp", "fair", "friction_method"],
    "output": ["out", "error_mode", "wb_threshold"],
}


class ExperimentConfig(BaseModel):
    """One experiment; unset fields resolve to the per-test defaults"""

    model_config = ConfigDict(use_enum_values=False, validate_assignment=True, extra="forbid")

    # case
    test: ExperimentCase = Field(ExperimentCase.LAKE, description="Test case")

    # discretization
    basis: BasisFamily = Field(BasisFamily.BERNSTEIN, description="Basis family: b, p or pgl")
    degree: int = Field(4, ge=1, le=4, description="Polynomial degree M")
    elems: List[int] = Field(default_factory=lambda: [100], description="Element counts")
    scheme: SpaceScheme = Field(SpaceScheme.WB_HS, description="Space discretization")
    stab: str = Field("jt", description="Jump stabilization")
    delta1: Optional[float] = Field(None, gt=0, description="First-derivative CIP coefficient")
    delta2: Optional[float] = Field(None, ge=0, description="Second-derivative CIP coefficient")
    dec: DeCVariant = Field(DeCVariant.BDEC, description="DeC variant")
    dec_subintervals: Optional[int] = Field(None, ge=1, le=6, description="DeC subintervals, defaults to M")
    dec_iterations: Optional[int] = Field(None, ge=1, description="DeC iterations, defaults to subintervals + 1")

    # physics
    g: Optional[float] = Field(None, gt=0, description="Gravity, defaults to GRAVITY")
    friction: float = Field(0.0, ge=0, description="Manning coefficient n_M")
    bathymetry: Optional[BathymetryKind] = Field(None, description="Bathymetry, defaults per test")
    bathymetry_file: Optional[str] = Field(None, description="CSV with columns x,B")
    eta_bar: Optional[float] = Field(None, description="Lake level, defaults to ETA_BAR")
    fix_fraction: Optional[float] = Field(None, gt=0, lt=1, description="Entropy-fix fraction for |J|^-1")

    # time
    cfl: Optional[float] = Field(None, gt=0, description="CFL number, defaults per degree")
    tfinal: Optional[float] = Field(None, gt=0, description="Final time, defaults per test")
    snapshots: int = Field(5, ge=2, description="Output times of perturbation runs, t = 0 and T_f included")

    # perturbation
    amp: Optional[float] = Field(None, ge=0, description="Perturbation amplitude, defaults per test")
    fair: bool = Field(False, description="Constant-DoF mesh pairs for PGL2..PGL4")
    friction_method: FrictionMethod = Field(FrictionMethod.ODE, description="Friction reference construction")

    # output
    out: str = Field(settings.OUTPUT_DIR, description="Output directory")
    error_mode: ErrorMode = Field(ErrorMode.EXACT, description="L1 error against the exact reference or its interpolant")
    wb_threshold: Optional[float] = Field(None, gt=0, description="wb-check pass threshold")

    @field_validator("stab")
    @classmethod
    def validate_stab(cls, v):
        key = v.strip().lower()
        if key not in STABILIZATIONS:
            raise ValueError(f"stab must be one of {sorted(STABILIZATIONS)}, got: {v}")
        return key

    @field_validator("elems")
    @classmethod
    def validate_elems(cls, v):
        if not v:
            raise ValueError("at least one element count is required")
        if any(n < 2 for n in v):
            raise ValueError(f"element counts must be >= 2, got: {v}")
        return v

    @model_validator(mode="after")
    def validate_combination(self):
        if self.basis is BasisFamily.LAGRANGE_EQUISPACED and self.degree == 4:
            raise ValueError("P4 (equispaced Lagrange of degree 4) is not supported")
        if self.friction > 0 and self.test.regime is Regime.TRANSCRITICAL:
            raise ValueError("friction is not supported for the transcritical test")
        if self.bathymetry is BathymetryKind.TABULATED and not self.bathymetry_file:
            raise ValueError("tabulated bathymetry needs bathymetry_file")
        return self

    # ------------------------------------------------------------------
    # Resolved values
    # ------------------------------------------------------------------

    @property
    def spec(self) -> BasisSpec:
        return BasisSpec(self.basis, self.degree)

    @property
    def resolved_t_final(self) -> float:
        return self.test.default_t_final if self.tfinal is None else self.tfinal

    @property
    def resolved_amplitude(self) -> float:
        if self.amp is not None:
            return self.amp
        return self.test.default_amplitude or 0.0

    @property
    def resolved_cfl(self) -> float:
        return get_default_cfl(self.degree) if self.cfl is None else self.cfl

    @property
    def resolved_deltas(self) -> Tuple[float, float]:
        default1, default2 = get_cip_coefficients(self.degree)
        return (
            default1 if self.delta1 is None else self.delta1,
            default2 if self.delta2 is None else self.delta2,
        )

    @property
    def resolved_bathymetry_kind(self) -> BathymetryKind:
        if self.bathymetry is not None:
            return self.bathymetry
        if self.bathymetry_file:
            return BathymetryKind.TABULATED
        return self.test.default_bathymetry

    @property
    def resolved_eta_bar(self) -> float:
        return settings.ETA_BAR if self.eta_bar is None else self.eta_bar

    @property
    def threshold(self) -> float:
        return settings.WB_CHECK_THRESHOLD if self.wb_threshold is None else self.wb_threshold

    def params(self) -> PhysParams:
        return PhysParams(g=settings.GRAVITY if self.g is None else self.g, n_M=self.friction)

    def build_bathymetry(self) -> Bathymetry:
        return Bathymetry.from_kind(self.resolved_bathymetry_kind, self.bathymetry_file)

    def scheme_config(self) -> SchemeConfig:
        delta1, delta2 = self.resolved_deltas
        return SchemeConfig(
            space=self.scheme,
            stabilization=self.stab,
            delta1=delta1,
            delta2=delta2,
            params=self.params(),
            fix_fraction=self.fix_fraction,
        )

    def dec_config(self) -> DeCConfig:
        return DeCConfig(
            M=self.degree if self.dec_subintervals is None else self.dec_subintervals,
            variant=self.dec,
            P=self.dec_iterations,
            cfl=self.resolved_cfl,
        )

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Copy with the non-None overrides applied and validated"""
        values = self.model_dump(exclude_unset=True)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig(**values)


# ----------------------------------------------------------------------
# Config file I/O
# ----------------------------------------------------------------------


def config_to_sections(config: ExperimentConfig) -> Dict[str, Dict[str, Any]]:
    """Explicitly set fields grouped by section, enums as their values"""
    flat = config.model_dump(mode="json", exclude_unset=True)
    sections: Dict[str, Dict[str, Any]] = {}
    for section, keys in SECTIONS.items():
        block = {key: flat[key] for key in keys if key in flat}
        if block:
            sections[section] = block
    return sections


def config_from_sections(data: Optional[Dict[str, Any]]) -> ExperimentConfig:
    """
    Build a config from the sectioned mapping of a config file.

    Raises:
        ConfigurationError: unknown section, unknown key or invalid value
    """
    flat: Dict[str, Any] = {}
    for section, block in (data or {}).items():
        if section not in SECTIONS:
            raise ConfigurationError(
                f"Unknown config section '{section}'", details={"sections": list(SECTIONS)}
            )
        for key, value in (block or {}).items():
            if key not in SECTIONS[section]:
                raise ConfigurationError(
                    f"Unknown key '{key}' in section '{section}'",
                    details={"allowed": SECTIONS[section]},
                )
            flat[key] = value
    try:
        return ExperimentConfig(**flat)
    except ValidationError as exc:
        errors = [
            {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
            for err in exc.errors()
        ]
        raise ConfigurationError("Invalid experiment configuration", details={"errors": errors}) from exc


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_sections(config), sort_keys=False)


def parse_config(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigurationError("Config file is not valid YAML", details={"error": str(exc)}) from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError("Config file must be a mapping of sections")
    return config_from_sections(data)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"Cannot read config file {path}", details={"error": str(exc)}) from exc
    config = parse_config(text)
    logger.info(f"[CONFIG] loaded {path}: {config.test.value}, {config.spec.label}")
    return config


def save_config(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(config), encoding="utf-8")
    return path
