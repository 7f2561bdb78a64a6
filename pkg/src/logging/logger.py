import logging
import sys

import structlog

from src.config import settings

# stdout is reserved for command output; logs go to stderr
logging.basicConfig(
    level=settings.LOG_LEVEL.upper(),
    format="%(message)s",
    stream=sys.stderr,
)

_renderer = (
    structlog.processors.JSONRenderer()
    if settings.LOG_FORMAT.lower() == "json"
    else structlog.dev.ConsoleRenderer(colors=False)
)

structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
        _renderer,
    ],
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)


def get_logger(name: str):
    """Gets a logger instance."""
    return structlog.get_logger(name)


logger = get_logger(__name__)
logger.debug("logger initialized", level=settings.LOG_LEVEL)
