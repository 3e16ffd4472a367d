import json
import sys
from typing import Any, Dict, Optional

from pydantic import ValidationError

from app.utils.logger import logger


EXIT_OK = 0
EXIT_PARSE_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET_EXCEEDED = 3


class PlannerError(Exception):
    """Base class for every error the planner reports to its caller."""

    error_type = "planner_error"
    exit_code = EXIT_PARSE_ERROR

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ScenarioError(PlannerError, ValueError):
    """Scenario document or grid model violates an invariant."""

    error_type = "scenario_error"


class InfeasibleScenarioError(PlannerError):
    """Some robot has no valid path, or a population member is infeasible."""

    error_type = "infeasible_scenario"
    exit_code = EXIT_INFEASIBLE


class BudgetExceededError(PlannerError):
    """An exhaustive search or simulation guard refused to continue."""

    error_type = "budget_exceeded"
    exit_code = EXIT_BUDGET_EXCEEDED


class SbfMoveError(PlannerError, ValueError):
    error_type = "sbf_move_error"


class QuantumStateError(PlannerError, ValueError):
    error_type = "quantum_state_error"


class ArtifactStorageError(PlannerError):
    """Custom exception for artifact write operations"""

    error_type = "artifact_storage_error"


def create_error_response(
    error_type: str, message: str, details: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Create a standardized error response payload."""
    response = {
        "error": error_type,
        "message": message,
    }
    if details:
        response["details"] = details
    return response


def clean_validation_errors(errors: list) -> list:
    """Clean validation errors to make them JSON serializable."""
    cleaned_errors = []
    for error in errors:
        cleaned_error = {
            "type": error.get("type"),
            "loc": list(error.get("loc", ())),
            "msg": error.get("msg"),
            "input": error.get("input"),
        }

        # ctx may hold the raised exception object
        if "ctx" in error:
            ctx = error["ctx"]
            cleaned_ctx = {}
            for key, value in ctx.items():
                if isinstance(value, Exception):
                    cleaned_ctx[key] = str(value)
                else:
                    cleaned_ctx[key] = value
            cleaned_error["ctx"] = cleaned_ctx

        cleaned_errors.append(cleaned_error)

    return json.loads(json.dumps(cleaned_errors, default=str))


def scenario_error_from_validation(exc: ValidationError, source: str) -> ScenarioError:
    """Wrap a pydantic validation failure of a scenario document."""
    cleaned_errors = clean_validation_errors(exc.errors())
    locations = ", ".join(
        ".".join(str(part) for part in error["loc"]) or "<root>" for error in cleaned_errors
    )
    return ScenarioError(
        f"Invalid scenario {source}: check {locations}",
        {"errors": cleaned_errors},
    )


def handle_cli_error(exc: BaseException, command: str) -> int:
    """Log an error raised by a command, print its payload, return the exit code."""
    if isinstance(exc, PlannerError):
        logger.warning(
            "Command failed",
            command=command,
            error_type=exc.error_type,
            error=exc.message,
        )
        payload = create_error_response(exc.error_type, exc.message, exc.details)
        exit_code = exc.exit_code
    else:
        logger.error(
            "Unexpected error occurred",
            command=command,
            error=str(exc),
            exc_info=True,
        )
        payload = create_error_response(
            "internal_error", "An unexpected error occurred."
        )
        exit_code = EXIT_PARSE_ERROR

    print(json.dumps(payload, indent=2, default=str), file=sys.stderr)
    return exit_code
