"""Application routes."""

from . import api, reports

__all__ = ["api", "reports"]
