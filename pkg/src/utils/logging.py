"""
Structured JSON logging utility for the simulator.

This module provides structured JSON logging with run IDs, preset names and
trial indices so that interleaved output from experiment workers can be
correlated afterwards.
"""
import json
import logging
import os
import sys
from typing import Optional, Dict, Any
from datetime import datetime, timezone


class JSONFormatter(logging.Formatter):
    """Custom JSON formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        """
        Format log record as JSON.

        Args:
            record: Log record to format

        Returns:
            JSON string representation of log record
        """
        log_data = {
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'level': record.levelname,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        for field in ('run_id', 'preset', 'trial'):
            if hasattr(record, field):
                log_data[field] = getattr(record, field)

        if hasattr(record, 'context') and isinstance(record.context, dict):
            log_data['context'] = record.context

        if record.exc_info:
            # exc_info can be True (use sys.exc_info()) or a tuple
            if record.exc_info is True:
                exc_info = sys.exc_info()
            else:
                exc_info = record.exc_info
            if exc_info[0] is not None:
                log_data['exception'] = self.formatException(exc_info)

        return json.dumps(log_data, default=str)


class StructuredLogger:
    """
    Structured logger with support for run IDs, presets and trial indices.

    This logger automatically includes correlation fields in all log entries
    and writes JSON lines to stderr, leaving stdout for command output.
    """

    def __init__(self, name: str, level: int = logging.INFO):
        """
        Initialize structured logger.

        Args:
            name: Logger name (typically __name__)
            level: Logging level (default: INFO)
        """
        self.logger = logging.getLogger(name)
        self.logger.setLevel(level)
        self.logger.propagate = False

        # Remove existing handlers to avoid duplicate logs
        self.logger.handlers.clear()

        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JSONFormatter())
        self.logger.addHandler(handler)

        self._run_id: Optional[str] = None
        self._preset: Optional[str] = None
        self._trial: Optional[int] = None

    def set_run_id(self, run_id: Optional[str]):
        """Set run ID for all subsequent log entries."""
        self._run_id = run_id

    def set_preset(self, preset: Optional[str]):
        """Set preset name for all subsequent log entries."""
        self._preset = preset

    def set_trial(self, trial: Optional[int]):
        """Set trial index for all subsequent log entries."""
        self._trial = trial

    def _make_record(self, level: int, msg: str, *args, context: Optional[Dict[str, Any]] = None) -> logging.LogRecord:
        """Create log record with correlation fields."""
        record = self.logger.makeRecord(
            self.logger.name,
            level,
            '',
            0,
            msg,
            args,
            None
        )

        if self._run_id:
            record.run_id = self._run_id
        if self._preset:
            record.preset = self._preset
        if self._trial is not None:
            record.trial = self._trial
        if context:
            record.context = context

        return record

    def _emit(self, level: int, msg: str, *args, context: Optional[Dict[str, Any]] = None, exc_info=None):
        if not self.logger.isEnabledFor(level):
            return
        record = self._make_record(level, msg, *args, context=context)
        if exc_info:
            record.exc_info = sys.exc_info() if exc_info is True else exc_info
        self.logger.handle(record)

    def debug(self, msg: str, *args, context: Optional[Dict[str, Any]] = None):
        """Log debug message."""
        self._emit(logging.DEBUG, msg, *args, context=context)

    def info(self, msg: str, *args, context: Optional[Dict[str, Any]] = None):
        """Log info message."""
        self._emit(logging.INFO, msg, *args, context=context)

    def warning(self, msg: str, *args, context: Optional[Dict[str, Any]] = None):
        """Log warning message."""
        self._emit(logging.WARNING, msg, *args, context=context)

    def error(self, msg: str, *args, context: Optional[Dict[str, Any]] = None, exc_info=None):
        """Log error message."""
        self._emit(logging.ERROR, msg, *args, context=context, exc_info=exc_info)


def get_logger(name: str, level: Optional[int] = None) -> StructuredLogger:
    """
    Get or create a structured logger instance.

    Args:
        name: Logger name (typically __name__)
        level: Logging level (default: INFO, or from LOG_LEVEL env var)

    Returns:
        StructuredLogger instance

    Example:
        >>> logger = get_logger(__name__)
        >>> logger.set_run_id('run_fig1_0_ab12cd34')
        >>> logger.info('Trial finished', context={'trial': 3, 'final_median': 0.41})
    """
    if level is None:
        level_str = os.environ.get('LOG_LEVEL', 'INFO').upper()
        level = getattr(logging, level_str, logging.INFO)

    return StructuredLogger(name, level)
