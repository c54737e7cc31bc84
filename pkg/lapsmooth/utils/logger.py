"""
Logging configuration for lapsmooth.

Everything goes to stderr; stdout carries only result tables.
"""

import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, Optional

import structlog
from pythonjsonlogger import jsonlogger

# LogRecord attributes that stdlib logging refuses to overwrite through ``extra``
RESERVED_RECORD_KEYS = frozenset(
    logging.LogRecord("", 0, "", 0, "", (), None).__dict__
) | {"message", "asctime"}


def rename_reserved_keys(_, __, event_dict: Dict[str, Any]) -> Dict[str, Any]:
    """Prefix event keys that would collide with LogRecord attributes."""
    for key in [k for k in event_dict if k in RESERVED_RECORD_KEYS and k != "event"]:
        event_dict[f"field_{key}"] = event_dict.pop(key)
    return event_dict


def _formatter(json_format: bool) -> logging.Formatter:
    if json_format:
        return jsonlogger.JsonFormatter('%(asctime)s %(name)s %(levelname)s %(message)s')
    return logging.Formatter('%(asctime)s %(levelname)-7s %(name)s: %(message)s', datefmt='%H:%M:%S')


def setup_logger(
    name: str,
    level: str = "INFO",
    log_file: Optional[str] = None,
    json_format: bool = True,
) -> structlog.BoundLogger:
    """
    Set up structured logging for the application.

    Args:
        name: Logger name (typically __name__)
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path to a log file that receives DEBUG and above
        json_format: JSON lines when true, plain text otherwise

    Returns:
        Configured structured logger
    """
    numeric_level = getattr(logging, str(level).upper(), logging.INFO)
    formatter = _formatter(json_format)

    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setLevel(numeric_level)
    stderr_handler.setFormatter(formatter)
    handlers = [stderr_handler]

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)

    root_level = logging.DEBUG if log_file else numeric_level
    logging.basicConfig(level=root_level, handlers=handlers, force=True)
    # joblib and scipy chatter stays out of experiment logs
    logging.getLogger("joblib").setLevel(max(numeric_level, logging.WARNING))

    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            rename_reserved_keys,
            structlog.stdlib.render_to_log_kwargs,
        ],
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=True,
    )

    return structlog.get_logger(name)


class StepLogger:
    """
    Context manager that logs the start, end and wall time of a run stage.

    Exceptions propagate unchanged.
    """

    def __init__(self, logger: structlog.BoundLogger, stage_name: str, stage_num: int):
        self.logger = logger
        self.stage_name = stage_name
        self.stage_num = stage_num
        self.elapsed: Optional[float] = None
        self._started = 0.0

    def __enter__(self):
        self._started = time.perf_counter()
        self.logger.info(f"Starting {self.stage_name}", stage=self.stage_num, status="started")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self._started
        if exc_type is None:
            self.logger.info(
                f"Finished {self.stage_name} in {self.elapsed:.2f}s",
                stage=self.stage_num,
                status="completed",
                elapsed_s=round(self.elapsed, 3),
            )
        else:
            self.logger.error(
                f"{self.stage_name} failed after {self.elapsed:.2f}s: {exc_val}",
                stage=self.stage_num,
                status="failed",
                error_type=exc_type.__name__,
            )
        return False
