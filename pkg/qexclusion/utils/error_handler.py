"""
Common error handling for CLI commands: every failure becomes an error report.
"""

import functools
import logging
from typing import Callable, Optional

from pydantic import ValidationError

from qexclusion.constants import MODE_BLOCK
from qexclusion.errors import INTERNAL_ERROR_CODE, ExclusionToolkitError, SchemaError, UnsupportedMode
from qexclusion.models import ErrorInfo, Report

logger = logging.getLogger(__name__)


def error_report(command: str, code: str, message: str, details: Optional[dict] = None) -> Report:
    return Report(command=command, error=ErrorInfo(code=code, message=message, details=details or {}))


def handle_command_errors(command: str) -> Callable:
    """
    Decorator turning toolkit and schema errors into an error Report.

    Args:
        command: Command name recorded on the report

    Returns:
        Decorated function; never raises for toolkit, schema or unexpected errors
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> Report:
            try:
                return func(*args, **kwargs)
            except ValidationError as e:
                details = {"errors": [{"loc": [str(p) for p in err["loc"]], "msg": err["msg"]} for err in e.errors()]}
                logger.error(f"Schema error in {command}: {e.error_count()} validation error(s)")
                return error_report(command, SchemaError.code, "Scenario does not match the schema", details)
            except ExclusionToolkitError as e:
                logger.error(f"{command} failed [{e.code}]: {e.message}")
                return Report(command=command, error=ErrorInfo(**e.to_dict()))
            except Exception as e:
                logger.error(f"Unexpected error in {command}: {type(e).__name__}: {str(e)}")
                logger.debug("Traceback", exc_info=True)
                return error_report(command, INTERNAL_ERROR_CODE, f"{type(e).__name__}: {str(e)}")
        return wrapper
    return decorator


def require_finite_group(instance, operation: str) -> None:
    """
    Validate that an instance carries an explicit finite action.

    Raises:
        UnsupportedMode: For block-level instances, whose orbit cannot be enumerated
    """
    if instance.mode == MODE_BLOCK:
        raise UnsupportedMode(
            f"{operation} needs an explicit finite group action; block-level instances only expose the seed",
            {"operation": operation, "group": instance.group_name},
        )
