from datetime import datetime, timezone
from typing import Any, Dict, Optional
import logging

logger = logging.getLogger(__name__)


class SolverError(Exception):
    def __init__(
        self,
        message: str,
        exit_code: int = 1,
        error_code: str = "INTERNAL_ERROR",
        details: Optional[Dict[str, Any]] = None,
    ):
        self.message = message
        self.exit_code = exit_code
        self.error_code = error_code
        self.details = details or {}
        self.timestamp = datetime.now(timezone.utc)
        super().__init__(self.message)


class InputDomainError(SolverError):
    def __init__(
        self,
        message: str = "Input outside of the admissible domain",
        details: Optional[Dict[str, Any]] = None,
    ):
        logger.warning(f"InputDomainError: {message}, Details: {details}")
        super().__init__(
            message, exit_code=2, error_code="INPUT_DOMAIN_ERROR", details=details
        )


class ConfigurationError(SolverError):
    def __init__(
        self,
        message: str = "Invalid configuration",
        details: Optional[Dict[str, Any]] = None,
    ):
        logger.warning(f"ConfigurationError: {message}, Details: {details}")
        super().__init__(
            message, exit_code=2, error_code="CONFIGURATION_ERROR", details=details
        )


class StateError(SolverError):
    def __init__(
        self,
        message: str = "Invalid (dry or non-finite) state",
        details: Optional[Dict[str, Any]] = None,
    ):
        logger.error(f"StateError: {message}, Details: {details}")
        super().__init__(
            message, exit_code=3, error_code="STATE_ERROR", details=details
        )


class StepFailureError(SolverError):
    def __init__(
        self,
        message: str = "Time step failed",
        details: Optional[Dict[str, Any]] = None,
    ):
        logger.error(f"StepFailureError: {message}, Details: {details}")
        super().__init__(
            message, exit_code=3, error_code="STEP_FAILURE", details=details
        )


class InfeasibleSteadyStateError(SolverError):
    def __init__(
        self,
        message: str = "No admissible steady state",
        details: Optional[Dict[str, Any]] = None,
    ):
        logger.error(f"InfeasibleSteadyStateError: {message}, Details: {details}")
        super().__init__(
            message,
            exit_code=4,
            error_code="INFEASIBLE_STEADY_STATE",
            details=details,
        )


class InternalError(SolverError):
    def __init__(
        self,
        message: str = "Internal solver error",
        details: Optional[Dict[str, Any]] = None,
    ):
        logger.error(f"InternalError: {message}, Details: {details}")
        super().__init__(
            message, exit_code=1, error_code="INTERNAL_ERROR", details=details
        )
