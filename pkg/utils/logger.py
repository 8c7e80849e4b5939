import logging
import sys
from typing import Optional, TextIO

from core.errors import ConfigurationError

# Run context travels in the message as a "[scenario/controller]" prefix
LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"
DATE_FORMAT = "%H:%M:%S"

LEVELS = ("debug", "info", "warning", "error")


def parse_level(level: str) -> int:
    name = level.strip().lower()
    if name not in LEVELS:
        raise ConfigurationError(f"unknown log level {level!r}, expected one of {', '.join(LEVELS)}", field="log_level")
    return getattr(logging, name.upper())


def setup_logging(level: str = "info", log_format: Optional[str] = None, stream: Optional[TextIO] = None) -> None:
    """
    Configure the process-wide handler. Records go to stderr so the JSON
    summaries `run` prints on stdout stay parseable, and numpy's overflow
    warnings from a diverging run land in the same log.
    """
    handler = logging.StreamHandler(stream if stream is not None else sys.stderr)
    handler.setFormatter(logging.Formatter(log_format or LOG_FORMAT, DATE_FORMAT))
    logging.basicConfig(level=parse_level(level), handlers=[handler], force=True)
    logging.captureWarnings(True)


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)
