"""Structured logging setup shared by the CLI and the simulator."""

from .structured_logger import bind_context, clear_context, configure_logging

__all__ = ["configure_logging", "bind_context", "clear_context"]
