"""Logging bootstrap driven by the ``logging`` section of config.json."""

from __future__ import annotations

import logging
import logging.handlers
from typing import Optional

from .moduli_config import CONFIG

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(
    level: Optional[str] = None,
    file: Optional[str] = None,
    max_size_mb: Optional[int] = None,
    backup_count: Optional[int] = None,
) -> logging.Logger:
    """
    Install a stream handler and, if a file is configured, a rotating file handler.

    Arguments left as None fall back to CONFIG.logging.
    """
    settings = CONFIG.logging
    level = (level or settings.LEVEL).upper()
    file = file if file is not None else settings.FILE
    max_size_mb = max_size_mb if max_size_mb is not None else settings.MAX_SIZE_MB
    backup_count = backup_count if backup_count is not None else settings.BACKUP_COUNT

    root = logging.getLogger("descentlab")
    root.setLevel(level)
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)
    stream = logging.StreamHandler()
    stream.setFormatter(formatter)
    root.addHandler(stream)

    if file:
        rotating = logging.handlers.RotatingFileHandler(
            file,
            maxBytes=int(max_size_mb) * 1024 * 1024,
            backupCount=int(backup_count),
            encoding="utf-8",
        )
        rotating.setFormatter(formatter)
        root.addHandler(rotating)

    root.propagate = False
    return root
