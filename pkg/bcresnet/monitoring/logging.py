"""Structured logging configuration helpers."""

from __future__ import annotations

import logging
from typing import Mapping

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s%(context)s"


class ContextFilter(logging.Filter):
    """Appends fixed ``key=value`` pairs to every record passing a handler."""

    def __init__(self, extra: Mapping[str, object] | None = None) -> None:
        super().__init__()
        pairs = sorted((extra or {}).items())
        self.context = "".join(f" {key}={value}" for key, value in pairs)

    def filter(self, record: logging.LogRecord) -> bool:
        record.context = self.context
        return True


def configure_logging(
    level: int | str = logging.INFO, extra: Mapping[str, object] | None = None
) -> None:
    """Configure standard library logging with structured run context.

    ``extra`` is rendered after each message, e.g. ``seed=7 tau=1.0``.
    Calling again replaces the previous context.
    """

    if isinstance(level, str):
        resolved = logging.getLevelName(level.upper())
        if not isinstance(resolved, int):
            msg = f"Unknown log level {level!r}"
            raise ValueError(msg)
        level = resolved
    logging.basicConfig(level=level, format=LOG_FORMAT)
    root = logging.getLogger()
    root.setLevel(level)
    context = ContextFilter(extra)
    for handler in root.handlers:
        for old in [f for f in handler.filters if isinstance(f, ContextFilter)]:
            handler.removeFilter(old)
        handler.addFilter(context)


__all__ = ["ContextFilter", "LOG_FORMAT", "configure_logging"]
