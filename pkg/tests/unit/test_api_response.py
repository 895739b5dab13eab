"""
Unit tests for the response envelope and the error-to-status mapping
"""

import pytest
from flask import Flask

from app.models.errors import (
    ConvergenceError,
    GroupSizeError,
    OlsNotApplicableError,
)
from app.utils.api_response import APIResponse
from app.utils.validation import ValidationError


@pytest.fixture
def bare_app():
    app = Flask(__name__)
    app.config["TESTING"] = True
    with app.app_context():
        yield app


class TestEnvelope:
    """Success and error payload shapes"""

    def test_success(self, bare_app):
        """Test data is wrapped and the message is optional"""
        response, status = APIResponse.success({"estimate": 2.5})
        assert status == 200
        assert response.get_json() == {"success": True, "data": {"estimate": 2.5}}

        response, status = APIResponse.success([], "No presets", status_code=201)
        assert status == 201
        assert response.get_json()["message"] == "No presets"

    def test_bare_error_omits_code_and_details(self, bare_app):
        """Test optional error fields are left out"""
        response, status = APIResponse.error("Bad request")
        assert status == 400
        assert response.get_json() == {
            "success": False,
            "error": {"message": "Bad request"},
        }

    def test_validation_error_details(self, bare_app):
        """Test field errors are nested under details"""
        field_errors = {"seed": ["Missing data for required field."]}
        response, status = APIResponse.validation_error("Invalid options", field_errors)
        error = response.get_json()["error"]
        assert status == 400
        assert error["code"] == "VALIDATION_ERROR"
        assert error["details"]["field_errors"] == field_errors

        response, _ = APIResponse.validation_error("Invalid options")
        assert "details" not in response.get_json()["error"]

    @pytest.mark.parametrize(
        "factory, status, code, message",
        [
            (lambda: APIResponse.internal_error(), 500, "INTERNAL_ERROR",
             "Internal server error"),
            (lambda: APIResponse.not_found("Preset"), 404, "NOT_FOUND",
             "Preset not found"),
        ],
    )
    def test_fixed_errors(self, bare_app, factory, status, code, message):
        """Test the canned 404 and 500 responses"""
        response, actual = factory()
        assert actual == status
        assert response.get_json()["error"] == {"message": message, "code": code}


class TestErrorMapping:
    """Exceptions raised by the core become 400, 422 or 500"""

    def test_estimation_error(self, bare_app):
        """Test estimation failures carry their class name"""
        error = OlsNotApplicableError("p >= min(n_A, n_B)")
        response, status = APIResponse.estimation_error(error)
        assert status == 422
        assert response.get_json()["error"] == {
            "message": "p >= min(n_A, n_B)",
            "code": "ESTIMATION_ERROR",
            "details": {"type": "OlsNotApplicableError"},
        }

    @pytest.mark.parametrize(
        "error, status",
        [
            (ValidationError("bad", {"folds": ["too small"]}), 400),
            (GroupSizeError("n_g < K"), 422),
            (ConvergenceError("no convergence"), 422),
            (RuntimeError("boom"), 500),
        ],
    )
    def test_from_exception(self, bare_app, error, status):
        """Test each error family gets its own status code"""
        response, actual = APIResponse.from_exception(error)
        assert actual == status
        if status == 500:
            assert response.get_json()["error"]["message"] == "Internal server error"
