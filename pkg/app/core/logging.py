"""
Logging configuration for the laboratory
"""

import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Optional

from app.core.config import settings

DETAILED_FORMAT = (
    "%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s"
)

# Per-area debug logs
AREA_LOGS = [
    ("app.services.revsim", "simulation.log"),
    ("app.services.analysis", "analysis.log"),
]


def _drop_own_handlers(logger: logging.Logger) -> None:
    for handler in list(logger.handlers):
        if getattr(handler, "_revlab", False):
            logger.removeHandler(handler)
            handler.close()


def _file_handler(logs_dir: str, filename: str, level: int) -> RotatingFileHandler:
    handler = RotatingFileHandler(
        os.path.join(logs_dir, filename),
        maxBytes=10485760,  # 10MB
        backupCount=5,
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter(DETAILED_FORMAT))
    return handler


def setup_logging(level: Optional[str] = None, to_file: Optional[bool] = None) -> None:
    """
    Set up logging for the application

    Args:
        level: Root level name, defaults to settings.LOG_LEVEL
        to_file: Also write rotating log files, defaults to settings.LOG_TO_FILE
    """
    level_name = (level or settings.LOG_LEVEL).upper()
    to_file = settings.LOG_TO_FILE if to_file is None else to_file

    root_logger = logging.getLogger()
    root_logger.setLevel(level_name)

    # Avoid stacking handlers when called more than once (tests, repeated CLI runs)
    for logger in [root_logger] + [logging.getLogger(name) for name, _ in AREA_LOGS]:
        _drop_own_handlers(logger)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level_name)
    console_handler.setFormatter(logging.Formatter(DETAILED_FORMAT))
    console_handler._revlab = True  # type: ignore[attr-defined]
    root_logger.addHandler(console_handler)

    if to_file:
        logs_dir = os.path.join(os.getcwd(), settings.LOGS_DIR)
        os.makedirs(logs_dir, exist_ok=True)

        main_handler = _file_handler(logs_dir, "revlab.log", logging.INFO)
        main_handler._revlab = True  # type: ignore[attr-defined]
        root_logger.addHandler(main_handler)

        # Per-area debug logs
        for logger_name, filename in AREA_LOGS:
            area_logger = logging.getLogger(logger_name)
            area_logger.setLevel(logging.DEBUG)
            area_handler = _file_handler(logs_dir, filename, logging.DEBUG)
            area_handler._revlab = True  # type: ignore[attr-defined]
            area_logger.addHandler(area_handler)

    # numpy and asyncio are chatty at DEBUG
    logging.getLogger("asyncio").setLevel(logging.WARNING)

    logging.getLogger("app").debug(
        f"Logging configured at {level_name} (files={'on' if to_file else 'off'})"
    )
