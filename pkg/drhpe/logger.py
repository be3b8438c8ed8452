"""Session and solver logging.

Records are plain text lines, optionally timestamped and indented by the
number of open start/end blocks. Everything at or above the threshold level
goes to stdout and, when a log file is configured, is appended there too.
"""
from contextlib import contextmanager
from datetime import datetime
import functools
from typing import Any, Mapping, Optional

LEVELS = {"DEBUG": 10, "INFO": 20, "STATUS": 25, "WARN": 30, "ERROR": 40}
TIME_FORMAT = "%d-%b-%Y (%H:%M:%S)"


class Logger:
    """Leveled text logger with nested start/end blocks.

    Args:
        level: threshold level name, one of LEVELS
        log_file: optional path of a text file to append records to
    """

    def __init__(self, level: str = "INFO", log_file: Optional[str] = None):
        level = level.upper()
        if level not in LEVELS:
            raise ValueError(f"unknown log level {level}, use one of {', '.join(LEVELS)}")
        self.level = level
        self.log_file = log_file
        self._depth = 0

    @classmethod
    def quiet(cls) -> "Logger":
        """Logger used by library calls when the caller supplies none."""
        return cls(level="WARN")

    @property
    def depth(self) -> int:
        """Number of open start/end blocks."""
        return self._depth

    def enabled(self, level: str) -> bool:
        """True if records at level pass the threshold."""
        return LEVELS.get(level.upper(), 0) >= LEVELS[self.level]

    def log(self, text: str, level: str = "INFO"):
        """Write text as one record if level passes the threshold."""
        if not self.enabled(level):
            return
        print(text)
        if self.log_file:
            with open(self.log_file, "a", encoding="utf-8") as sink:
                sink.write(f"{text}\n")

    def log_time(self, msg: str, level: str = "INFO", indent: bool = True):
        """Log msg prefixed with the current time.

        Args:
            msg: message text
            level: logging level
            indent: indent msg by the number of open start/end blocks
        """
        prefix = "  " * self._depth if indent else ""
        self.log(f"{datetime.now().strftime(TIME_FORMAT)}: {prefix}{msg}", level)

    def log_start(self, msg: str, level: str = "INFO"):
        """Open a block: log 'Start msg' and indent what follows."""
        self.log_time(f"Start {msg}", level)
        self._depth += 1

    def log_end(self, msg: str, level: str = "INFO"):
        """Close the innermost block with 'End msg'."""
        self._depth = max(self._depth - 1, 0)
        self.log_time(f"End {msg}", level)

    @contextmanager
    def log_start_end(self, msg: str, level: str = "INFO"):
        """Context manager form of log_start / log_end."""
        self.log_start(msg, level)
        try:
            yield self
        finally:
            self.log_end(msg, level)

    def log_dict(self, mapping: Mapping[str, Any], level: str = "INFO"):
        """Log one 'key: value' record per entry of mapping, floats in short form."""
        if not self.enabled(level):
            return
        for key, value in mapping.items():
            if isinstance(value, float):
                value = f"{value:.6g}"
            self.log_time(f"{key}: {value}", level)


# pylint: disable=too-few-public-methods


class LogStartEnd:
    """Component method decorator wrapping the call in a start/end block.

    Args:
        msg: block message, defaults to "<class name> <method name>"
        level: logging level
    """

    def __init__(self, msg: Optional[str] = None, level: str = "INFO"):
        self.msg = msg
        self.level = level

    def __call__(self, func):
        @functools.wraps(func)
        def wrapper(component, *args, **kwargs):
            msg = self.msg or f"{type(component).__name__} {func.__name__}"
            with component.logger.log_start_end(msg, self.level):
                return func(component, *args, **kwargs)

        return wrapper
