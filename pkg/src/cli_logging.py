"""Shared console logging helpers for senet-desk commands."""

from __future__ import annotations

import enum
import os
import sys

LOG_LEVELS = ("compact", "verbose", "debug")
DEFAULT_LOG_LEVEL = "compact"


class LogLevel(str, enum.Enum):
    """Enum used by Typer CLI options for --log-level validation."""

    compact = "compact"
    verbose = "verbose"
    debug = "debug"


_current_log_level = DEFAULT_LOG_LEVEL


def configure_log_level(level: str) -> None:
    """Set the process-wide logging level."""
    global _current_log_level
    if level not in LOG_LEVELS:
        raise ValueError(
            f"invalid log level '{level}'. Allowed values: compact, verbose, debug"
        )
    _current_log_level = level


def get_log_level() -> str:
    """Get the active process-wide logging level."""
    return _current_log_level


def is_verbose() -> bool:
    """Return True when verbose output should be shown."""
    return _current_log_level in ("verbose", "debug")


def is_debug() -> bool:
    """Return True when debug output should be shown."""
    return _current_log_level == "debug"


def _supports_color(stream) -> bool:
    if os.getenv("NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _use_emoji() -> bool:
    return not os.getenv("SENET_NO_EMOJI")


def _decorate(message: str, kind: str, stream) -> str:
    # Compact mode is undecorated.
    if _current_log_level == "compact":
        return message

    color = ""
    reset = ""
    emoji = ""
    if _supports_color(stream):
        color = {
            "success": "\033[32m",
            "warning": "\033[33m",
            "error": "\033[31m",
            "info": "\033[36m",
            "debug": "\033[90m",
        }.get(kind, "")
        reset = "\033[0m" if color else ""
    if _use_emoji():
        emoji = {
            "success": "✅ ",
            "warning": "⚠️ ",
            "error": "❌ ",
            "info": "ℹ️ ",
            "debug": "🛠️ ",
        }.get(kind, "")
    return f"{color}{emoji}{message}{reset}"


def _emit(message: str, kind: str, stream=None) -> None:
    stream = stream or sys.stdout
    print(_decorate(message, kind, stream), file=stream)


def info(message: str) -> None:
    _emit(message, "info")


def success(message: str) -> None:
    _emit(message, "success")


def warning(message: str) -> None:
    _emit(message, "warning", sys.stderr)


def error(message: str) -> None:
    _emit(message, "error", sys.stderr)


def verbose(message: str) -> None:
    if is_verbose():
        _emit(message, "info")


def debug(message: str) -> None:
    if is_debug():
        _emit(message, "debug")
