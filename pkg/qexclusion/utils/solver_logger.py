import logging
import time
from functools import wraps
from typing import Any, Callable, Dict, Mapping, Optional

logger = logging.getLogger(__name__)

SOLVER_TAG = "[solver=call]"


def _metadata(extractors: Mapping[str, Callable], result: Any, kwargs: Dict[str, Any]) -> str:
    parts = []
    for name, extractor in extractors.items():
        if name in kwargs and kwargs[name] is not None:
            value = kwargs[name]
        else:
            try:
                value = extractor(result) if result is not None else None
            except Exception:
                # metadata must never break a solve
                continue
        if value is not None:
            parts.append(f"{name}={value}")
    return "".join(f" {p}" for p in parts)


def log_solver_call(
    solver_name: str,
    metadata_fields: Optional[Dict[str, Callable]] = None,
    level: int = logging.INFO,
):
    """
    Decorator to log numerical solver calls.

    Every call produces one line tagged [solver=call] so runs can be filtered with
    ``grep "\\[solver=call\\]"``. Failures are logged at WARNING and re-raised unchanged.

    Args:
        solver_name: Short name of the solver (e.g. "hermitian_eigen", "simplex")
        metadata_fields: Field name -> extractor applied to the result. A keyword argument of the
                         same name passed to the call takes precedence.
        level: Log level for successful calls (kernels in inner loops use DEBUG)

    Example:
        @log_solver_call(solver_name="simplex", metadata_fields={"alpha_star": lambda r: r.alpha_star})
        def fractional_packing(graph):
            ...
    """
    extractors = metadata_fields or {}

    def decorator(func: Callable) -> Callable:
        method = f"{func.__module__.rsplit('.', 1)[-1]}.{func.__name__}"
        prefix = f"{SOLVER_TAG} [solver_name={solver_name}] method={method}"

        @wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            started = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                elapsed = int((time.perf_counter() - started) * 1000)
                logger.warning(
                    f"{prefix} status=error duration={elapsed}ms error_type={type(e).__name__} error={e}"
                )
                raise

            if logger.isEnabledFor(level):
                elapsed = int((time.perf_counter() - started) * 1000)
                logger.log(
                    level,
                    f"{prefix} status=success duration={elapsed}ms{_metadata(extractors, result, kwargs)}",
                )
            return result

        return wrapper

    return decorator
