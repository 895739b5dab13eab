"""
Structured logging for the CLI and the HTTP surface.

Records are rendered as one JSON object per line on stderr, so results
written to stdout stay machine-readable.
"""

import functools
import json
import logging
import sys
import time
from datetime import datetime, timezone
from typing import Any, Callable, Optional, TextIO

from flask import has_request_context, request

_RESERVED = frozenset(
    vars(logging.LogRecord("", 0, "", 0, "", None, None)).keys()
) | {"message", "asctime"}

_HANDLER_NAME = "lasso_ate_structured"


class StructuredFormatter(logging.Formatter):
    """Custom formatter that outputs structured JSON logs."""

    def __init__(self, include_request_info: bool = True):
        super().__init__()
        self.include_request_info = include_request_info

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as structured JSON."""
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
            "thread": record.thread,
        }

        if self.include_request_info and has_request_context():
            log_entry["request"] = {
                "method": request.method,
                "path": request.path,
                "endpoint": request.endpoint,
                "remote_addr": request.remote_addr,
            }

        if record.exc_info and record.exc_info[0] is not None:
            log_entry["exception"] = {
                "type": record.exc_info[0].__name__,
                "message": str(record.exc_info[1]),
                "traceback": self.formatException(record.exc_info),
            }

        extra = {
            key: value
            for key, value in record.__dict__.items()
            if key not in _RESERVED
        }
        if extra:
            log_entry["extra"] = extra

        return json.dumps(log_entry, default=str)


def configure_logging(
    level: str = "INFO",
    structured: bool = True,
    stream: Optional[TextIO] = None,
) -> logging.Logger:
    """
    Install a single stderr handler on the "app" logger

    Calling it again replaces the previous handler, so the CLI and
    create_app can both call it safely.

    Args:
        level: Log level name
        structured: JSON lines when True, plain text otherwise
        stream: Target stream, stderr by default

    Returns:
        The configured "app" logger
    """
    logger = logging.getLogger("app")
    numeric_level = logging.getLevelName(str(level).upper())
    if not isinstance(numeric_level, int):
        numeric_level = logging.INFO
    logger.setLevel(numeric_level)

    for handler in list(logger.handlers):
        if handler.get_name() == _HANDLER_NAME:
            logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.set_name(_HANDLER_NAME)
    handler.setFormatter(
        StructuredFormatter()
        if structured
        else logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    )
    logger.addHandler(handler)
    logger.propagate = False
    return logger


def log_function_call(
    logger_name: Optional[str] = None, level: int = logging.INFO
) -> Callable[[Callable[..., Any]], Callable[..., Any]]:
    """Decorator logging start, duration and failure of a call."""

    def decorator(func: Callable[..., Any]) -> Callable[..., Any]:
        @functools.wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            logger = logging.getLogger(logger_name or func.__module__)
            logger.log(level, f"Calling {func.__name__}", extra={"call": func.__name__})
            start_time = time.perf_counter()
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                logger.error(
                    f"Error in {func.__name__}: {e}",
                    extra={
                        "call": func.__name__,
                        "duration": time.perf_counter() - start_time,
                        "success": False,
                        "error_type": type(e).__name__,
                    },
                )
                raise
            logger.log(
                level,
                f"Completed {func.__name__}",
                extra={
                    "call": func.__name__,
                    "duration": time.perf_counter() - start_time,
                    "success": True,
                },
            )
            return result

        return wrapper

    return decorator
