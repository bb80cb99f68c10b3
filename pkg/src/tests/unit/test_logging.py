"""
Unit tests for logging utility.
"""
import json
import logging

from src.utils.logging import StructuredLogger, get_logger


class TestStructuredLogger:
    """Test StructuredLogger class."""

    def test_logger_creation(self):
        """Test logger creation."""
        logger = get_logger(__name__)
        assert isinstance(logger, StructuredLogger)

    def test_set_correlation_fields(self):
        """Test setting run ID, preset and trial."""
        logger = get_logger(__name__)
        logger.set_run_id('run_fig1_0_ab12cd34')
        logger.set_preset('fig1')
        logger.set_trial(3)

        assert logger._run_id == 'run_fig1_0_ab12cd34'
        assert logger._preset == 'fig1'
        assert logger._trial == 3

    def test_info_log(self, capsys):
        """Test info logging goes to stderr with correlation fields."""
        # Create a fresh logger instance; the handler binds the captured stderr
        logger = StructuredLogger(f"{__name__}.test_info_log", logging.INFO)
        logger.set_run_id('run_fig1_0_ab12cd34')
        logger.set_preset('fig1')
        logger.set_trial(0)
        logger.info('Trial finished')

        captured = capsys.readouterr()
        log_data = json.loads(captured.err.strip())

        assert captured.out == ''
        assert log_data['level'] == 'INFO'
        assert log_data['message'] == 'Trial finished'
        assert log_data['run_id'] == 'run_fig1_0_ab12cd34'
        assert log_data['preset'] == 'fig1'
        assert log_data['trial'] == 0

    def test_error_log_with_exception(self, capsys):
        """Test error logging with exception."""
        logger = StructuredLogger(f"{__name__}.test_error_log", logging.INFO)

        try:
            raise ValueError('Test error')
        except Exception:
            logger.error('Error occurred', exc_info=True)

        log_data = json.loads(capsys.readouterr().err.strip())

        assert log_data['level'] == 'ERROR'
        assert 'ValueError' in log_data['exception']
        assert 'run_id' not in log_data

    def test_log_with_context(self, capsys):
        """Test logging with context."""
        logger = StructuredLogger(f"{__name__}.test_log_context", logging.INFO)
        logger.info('Run finished', context={'T': 5000, 'final_median': 0.41})

        log_data = json.loads(capsys.readouterr().err.strip())

        assert log_data['context']['T'] == 5000
        assert log_data['context']['final_median'] == 0.41

    def test_level_filters_debug(self, capsys):
        """Test that debug records are dropped at INFO level."""
        logger = StructuredLogger(f"{__name__}.test_level", logging.INFO)
        logger.debug('Estimated kappa', context={'kappa_hat': 0.1})

        assert capsys.readouterr().err == ''

    def test_log_level_from_environment(self, monkeypatch):
        """Test LOG_LEVEL selects the level of new loggers."""
        monkeypatch.setenv('LOG_LEVEL', 'DEBUG')

        logger = get_logger(f"{__name__}.test_env_level")

        assert logger.logger.level == logging.DEBUG
