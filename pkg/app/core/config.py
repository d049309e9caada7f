"""
Application configuration using Pydantic Settings v2
"""

from functools import lru_cache
from typing import Dict, Tuple

from pydantic import Field, field_validator, model_validator
from pydantic_settings import BaseSettings

from app.core.exceptions import ConfigurationError


class Settings(BaseSettings):
    """Solver settings with environment variable support"""

    # Application Configuration
    APP_NAME: str = Field(default="WB-SWE Solver")
    VERSION: str = Field(default="1.0.0")
    LOG_LEVEL: str = Field(default="INFO")

    # Physical model
    GRAVITY: float = Field(default=9.81)
    ENTROPY_FIX_FRACTION: float = Field(default=0.05)

    # Domain and reference states (one-dimensional tests)
    DOMAIN_LEFT: float = Field(default=0.0)
    DOMAIN_RIGHT: float = Field(default=25.0)
    ETA_BAR: float = Field(default=0.5)

    # Output
    OUTPUT_DIR: str = Field(default="results")
    CSV_FLOAT_FORMAT: str = Field(default="%.17g")

    # Checks and runtime control
    WB_CHECK_THRESHOLD: float = Field(default=1e-11)
    PROGRESS_LOG_EVERY: int = Field(default=500)
    MAX_STEP_RETRIES: int = Field(default=3)

    # Long-run steady state construction (friction references)
    STEADY_RUN_TOLERANCE: float = Field(default=1e-10)
    STEADY_RUN_MAX_TIME: float = Field(default=500.0)
    STEADY_RUN_ELEMENTS: int = Field(default=2048)

    # Validation
    @field_validator("LOG_LEVEL")
    @classmethod
    def validate_log_level(cls, v):
        allowed = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        if v.upper() not in allowed:
            raise ValueError(f"LOG_LEVEL must be one of {allowed}, got: {v}")
        return v.upper()

    @field_validator("GRAVITY")
    @classmethod
    def validate_gravity(cls, v):
        if v <= 0:
            raise ValueError(f"GRAVITY must be positive, got: {v}")
        return v

    @field_validator("ENTROPY_FIX_FRACTION")
    @classmethod
    def validate_entropy_fix(cls, v):
        if not 0 < v < 1:
            raise ValueError(f"ENTROPY_FIX_FRACTION must lie in (0, 1), got: {v}")
        return v

    @field_validator("PROGRESS_LOG_EVERY", "STEADY_RUN_ELEMENTS")
    @classmethod
    def validate_positive_count(cls, v):
        if v < 1:
            raise ValueError(f"count settings must be >= 1, got: {v}")
        return v

    @model_validator(mode="after")
    def validate_domain(self):
        if self.DOMAIN_RIGHT <= self.DOMAIN_LEFT:
            raise ValueError(
                f"DOMAIN_RIGHT ({self.DOMAIN_RIGHT}) must exceed DOMAIN_LEFT ({self.DOMAIN_LEFT})"
            )
        return self

    @property
    def domain(self) -> Tuple[float, float]:
        """Domain endpoints (x_L, x_R)"""
        return self.DOMAIN_LEFT, self.DOMAIN_RIGHT

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": True,
        "validate_assignment": True,
        "extra": "ignore",
    }


@lru_cache()
def get_settings() -> Settings:
    """
    Get cached settings instance.
    This ensures we don't read environment variables multiple times.
    """
    return Settings()


# Global settings instance
settings = get_settings()


# CIP coefficients (delta_1, delta_2) per polynomial degree; the three basis
# families of a given degree share one column.
CIP_COEFFICIENTS: Dict[int, Tuple[float, float]] = {
    1: (0.05, 0.5),
    2: (0.3, 0.2),
    3: (0.15, 0.2),
    4: (0.5, 0.01),
}


def get_cip_coefficients(degree: int) -> Tuple[float, float]:
    """
    Default (delta_1, delta_2) for a basis degree.

    Raises:
        ConfigurationError: no coefficients for ``degree``
    """
    try:
        return CIP_COEFFICIENTS[degree]
    except KeyError:
        raise ConfigurationError(
            f"No CIP coefficients for degree {degree}; available: {sorted(CIP_COEFFICIENTS)}",
            details={"degree": degree},
        ) from None


def get_default_cfl(degree: int) -> float:
    """CFL is 0.1 everywhere except degree 4, which runs at 0.05"""
    return 0.05 if degree == 4 else 0.1


# Development helpers
def print_config():
    """Print current configuration (for debugging)"""
    print(f"=== {settings.APP_NAME} Configuration ===")
    print(f"Version: {settings.VERSION}")
    print(f"Log level: {settings.LOG_LEVEL}")
    print(f"g: {settings.GRAVITY}")
    print(f"Entropy fix fraction: {settings.ENTROPY_FIX_FRACTION}")
    print(f"Domain: ({settings.DOMAIN_LEFT}, {settings.DOMAIN_RIGHT})")
    print(f"Output dir: {settings.OUTPUT_DIR}")
    print("================================")


if __name__ == "__main__":
    # Print configuration when run directly
    print_config()
