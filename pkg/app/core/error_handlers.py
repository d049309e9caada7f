import json
import logging
from typing import Any, Callable, Dict, List, Tuple, Type

import click
from pydantic import ValidationError

from app.core.exceptions import (
    ConfigurationError,
    InfeasibleSteadyStateError,
    SolverError,
    StateError,
    StepFailureError,
)

logger = logging.getLogger(__name__)

ExceptionHandler = Callable[[Exception], int]


def _emit(payload: Dict[str, Any]) -> None:
    click.echo(json.dumps(payload, default=str), err=True)


def _payload(exc: SolverError) -> Dict[str, Any]:
    return {
        "error": exc.error_code,
        "message": exc.message,
        "details": exc.details,
        "timestamp": exc.timestamp.isoformat(),
    }


def configuration_error_handler(exc: ConfigurationError) -> int:
    """Handler for configuration errors"""
    logger.warning(
        f"Configuration error: {exc.message}",
        extra={"details": exc.details},
    )
    _emit(_payload(exc))
    return exc.exit_code


def step_failure_handler(exc: SolverError) -> int:
    """Handler for dry or non-finite states reached while time stepping"""
    logger.error(
        f"Solver failure: {exc.message}",
        extra={"details": exc.details},
    )
    _emit(_payload(exc))
    return exc.exit_code


def infeasible_steady_handler(exc: InfeasibleSteadyStateError) -> int:
    """Handler for steady states that cannot be constructed"""
    logger.error(
        f"Steady state infeasible: {exc.message}",
        extra={"details": exc.details},
    )
    _emit(_payload(exc))
    return exc.exit_code


def solver_exception_handler(exc: SolverError) -> int:
    """Handler for any other solver exception"""
    logger.error(
        f"Solver exception: {exc.message}",
        extra={"details": exc.details},
    )
    _emit(_payload(exc))
    return exc.exit_code


def validation_error_handler(exc: ValidationError) -> int:
    """Pydantic validation failures are configuration errors"""
    errors = [
        {"loc": ".".join(str(p) for p in err["loc"]), "msg": err["msg"]}
        for err in exc.errors()
    ]
    return configuration_error_handler(
        ConfigurationError("Invalid experiment configuration", details={"errors": errors})
    )


def general_exception_handler(exc: Exception) -> int:
    """Handler for unhandled exceptions"""
    logger.error(f"Unhandled exception: {str(exc)}", exc_info=True)
    _emit(
        {
            "error": "INTERNAL_SERVER_ERROR",
            "message": "An unexpected error occurred",
            "details": {"error": str(exc)},
        }
    )
    return 1


# Most specific first; the first isinstance match wins.
DEFAULT_HANDLERS: List[Tuple[Type[Exception], ExceptionHandler]] = [
    (ConfigurationError, configuration_error_handler),
    (StepFailureError, step_failure_handler),
    (StateError, step_failure_handler),
    (InfeasibleSteadyStateError, infeasible_steady_handler),
    (SolverError, solver_exception_handler),
    (ValidationError, validation_error_handler),
    (Exception, general_exception_handler),
]


def handle_exception(
    exc: Exception,
    handlers: List[Tuple[Type[Exception], ExceptionHandler]] = DEFAULT_HANDLERS,
) -> int:
    """Dispatch an exception to its handler and return the process exit code"""
    for exc_type, handler in handlers:
        if isinstance(exc, exc_type):
            return handler(exc)
    return general_exception_handler(exc)


def register_exception_handlers(group) -> None:
    """Registers all exception handlers on the CLI group"""
    group.exception_handlers = list(DEFAULT_HANDLERS)
