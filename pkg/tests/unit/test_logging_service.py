"""
Unit tests for structured logging
"""

import io
import json
import logging
import sys

import pytest

from app.services.logging_service import (
    StructuredFormatter,
    configure_logging,
    log_function_call,
)


def read_lines(stream):
    return [json.loads(line) for line in stream.getvalue().splitlines() if line]


class TestStructuredFormatter:
    """Test JSON log rendering"""

    def test_basic_fields_and_extra(self):
        """Test one JSON object per record with extra fields nested"""
        record = logging.LogRecord(
            "app.models.simulation", logging.INFO, __file__, 10, "Started", None, None
        )
        record.replications = 5
        entry = json.loads(StructuredFormatter().format(record))
        assert entry["level"] == "INFO"
        assert entry["logger"] == "app.models.simulation"
        assert entry["message"] == "Started"
        assert entry["extra"] == {"replications": 5}
        assert entry["timestamp"].endswith("Z")

    def test_exception_info(self):
        """Test exceptions are rendered with type and message"""
        try:
            raise ValueError("bad grid")
        except ValueError:
            record = logging.LogRecord(
                "app", logging.ERROR, __file__, 1, "failed", None, sys.exc_info()
            )
        entry = json.loads(StructuredFormatter().format(record))
        assert entry["exception"]["type"] == "ValueError"
        assert entry["exception"]["message"] == "bad grid"

    def test_request_context(self, app):
        """Test request details are attached inside a Flask request"""
        record = logging.LogRecord("app", logging.INFO, __file__, 1, "hit", None, None)
        with app.test_request_context("/api/v1/ate/estimate", method="POST"):
            entry = json.loads(StructuredFormatter().format(record))
        assert entry["request"]["path"] == "/api/v1/ate/estimate"
        assert entry["request"]["method"] == "POST"


class TestConfigureLogging:
    """Test handler installation"""

    def test_single_handler_on_reconfigure(self):
        """Test repeated configuration replaces the handler"""
        configure_logging("INFO", stream=io.StringIO())
        logger = configure_logging("DEBUG", stream=io.StringIO())
        assert len(logger.handlers) == 1
        assert logger.level == logging.DEBUG
        assert logger.propagate is False

    def test_child_loggers_write_json(self):
        """Test module loggers under app emit JSON lines"""
        stream = io.StringIO()
        configure_logging("INFO", stream=stream)
        logging.getLogger("app.models.lasso_solver").info(
            "Path fitted", extra={"grid_size": 10}
        )
        (entry,) = read_lines(stream)
        assert entry["extra"] == {"grid_size": 10}

    def test_plain_format(self):
        """Test the non-structured format"""
        stream = io.StringIO()
        configure_logging("INFO", structured=False, stream=stream)
        logging.getLogger("app.cli").warning("careful")
        assert "WARNING app.cli: careful" in stream.getvalue()

    def test_unknown_level_defaults_to_info(self):
        """Test invalid level names fall back to INFO"""
        logger = configure_logging("LOUD", stream=io.StringIO())
        assert logger.level == logging.INFO


class TestLogFunctionCall:
    """Test the call-logging decorator"""

    def test_success(self):
        """Test start and completion records"""
        stream = io.StringIO()
        configure_logging("INFO", stream=stream)

        @log_function_call("app.test")
        def fit(x):
            return x * 2

        assert fit(3) == 6
        entries = read_lines(stream)
        assert [e["message"] for e in entries] == ["Calling fit", "Completed fit"]
        assert entries[1]["extra"]["success"] is True

    def test_failure_reraises(self):
        """Test errors are logged with their type and re-raised"""
        stream = io.StringIO()
        configure_logging("INFO", stream=stream)

        @log_function_call("app.test")
        def fit():
            raise RuntimeError("diverged")

        with pytest.raises(RuntimeError):
            fit()
        entry = read_lines(stream)[-1]
        assert entry["level"] == "ERROR"
        assert entry["extra"]["error_type"] == "RuntimeError"
