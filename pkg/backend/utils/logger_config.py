import os
import sys
from typing import Optional

from loguru import logger

CONSOLE_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | <level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> - <level>{message}</level>"
)
FILE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | {name}:{function}:{line} - {message}"

# (file name pattern, minimum level, retention, extra sink options)
FILE_SINKS = (
    ("ptkr_{time:YYYY-MM-DD}.log", None, "30 days", {"format": FILE_FORMAT, "compression": "zip"}),
    ("errors_{time:YYYY-MM-DD}.log", "ERROR", "90 days", {"format": FILE_FORMAT, "compression": "zip"}),
    ("structured_{time:YYYY-MM-DD}.json", "INFO", "30 days", {"serialize": True}),
)


def setup_logging(level: Optional[str] = None) -> None:
    """Configure loguru for the CLI and the HTTP service.

    The console sink writes to stderr so that data the CLI prints on stdout
    is never interleaved with log lines. File sinks are only added when
    LOG_DIR is set.
    """
    logger.remove()

    log_level = (level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logger.add(sys.stderr, format=CONSOLE_FORMAT, level=log_level, colorize=True)

    log_dir = os.getenv("LOG_DIR")
    if not log_dir:
        logger.debug(f"Logging configured, level {log_level}, console only")
        return

    os.makedirs(log_dir, exist_ok=True)
    for pattern, sink_level, retention, options in FILE_SINKS:
        logger.add(
            os.path.join(log_dir, pattern),
            level=sink_level or log_level,
            rotation="1 day",
            retention=retention,
            **options
        )

    logger.info(f"Log level set to: {log_level}")
    logger.info(f"Logs directory: {os.path.abspath(log_dir)}")
