"""
Logging Setup
Configures stderr logging for the command-line tool and keeps long values
(sentences, serialized charts) from flooding log lines.
"""

import logging
import sys
from typing import Any

LOG_FORMAT = '%(asctime)s [%(levelname)8s] %(name)s: %(message)s'


class LongValueFilter(logging.Filter):
    """
    Truncate oversized log messages and string arguments.

    Debug logging of chart cells and SSBN summaries can carry whole
    sentences; anything longer than `max_length` is cut with a marker.
    """

    def __init__(self, name: str = '', max_length: int = 500):
        super().__init__(name)
        self.max_length = max_length

    def _truncate(self, value: Any) -> Any:
        if isinstance(value, str) and len(value) > self.max_length:
            return value[:self.max_length] + f'...[{len(value) - self.max_length} more chars]'
        return value

    def filter(self, record: logging.LogRecord) -> bool:
        if isinstance(record.msg, str):
            record.msg = self._truncate(record.msg)

        if hasattr(record, 'args') and record.args:
            if isinstance(record.args, dict):
                record.args = {k: self._truncate(v) for k, v in record.args.items()}
            elif isinstance(record.args, (list, tuple)):
                record.args = type(record.args)(self._truncate(v) for v in record.args)

        return True


def configure_logging(level: str = 'WARNING', stream=None) -> logging.Logger:
    """
    Route all logging to stderr (stdout carries only results).

    Args:
        level: Level name such as DEBUG, INFO or WARNING
        stream: Override for the output stream (tests)
    """
    numeric_level = logging.getLevelName(level.upper()) if isinstance(level, str) else level
    if not isinstance(numeric_level, int):
        numeric_level = logging.WARNING

    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        if getattr(handler, '_ssparse_handler', False):
            root_logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.addFilter(LongValueFilter())
    handler._ssparse_handler = True

    root_logger.addHandler(handler)
    root_logger.setLevel(numeric_level)
    return root_logger
