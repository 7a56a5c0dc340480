"""Monitoring utilities: structured logging and gradient verification."""

from .gradcheck import (
    CheckStatus,
    GradCheckReport,
    GradCheckResult,
    check_case,
    run_gradchecks,
)
from .logging import configure_logging

__all__ = [
    "CheckStatus",
    "GradCheckReport",
    "GradCheckResult",
    "check_case",
    "configure_logging",
    "run_gradchecks",
]
