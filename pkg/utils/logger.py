import logging
import os
import sys

from pythonjsonlogger import jsonlogger

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def setup_logging(level=None, json_format=None):
    """
    Configure root logging on stderr. Level and format fall back to
    TORIC_LOG_LEVEL / TORIC_LOG_JSON, then INFO and plain text.
    """
    if level is None:
        level = os.getenv("TORIC_LOG_LEVEL", "INFO")
    if json_format is None:
        json_format = os.getenv("TORIC_LOG_JSON", "").lower() in ("1", "true", "yes")

    handler = logging.StreamHandler(sys.stderr)
    if json_format:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(LOG_FORMAT))

    logging.basicConfig(
        level=level.upper() if isinstance(level, str) else level,
        handlers=[handler],
        force=True,
    )
