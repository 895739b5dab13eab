"""
Standardized API response utilities
Every endpoint answers {"success": ..., "data"|"error": ...}
"""

from typing import Any, Dict, Optional

from flask import Response, jsonify

from app.models.errors import EstimationError
from app.utils.validation import ValidationError

ResponseTuple = tuple[Response, int]


class APIResponse:
    """Utility class for creating standardized API responses"""

    @staticmethod
    def success(
        data: Any, message: Optional[str] = None, status_code: int = 200
    ) -> ResponseTuple:
        """
        Create a successful API response

        Args:
            data: JSON-serializable payload
            message: Optional success message
            status_code: HTTP status code (default: 200)
        """
        response = {"success": True, "data": data}
        if message:
            response["message"] = message

        return jsonify(response), status_code

    @staticmethod
    def error(
        message: str,
        error_code: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None,
        status_code: int = 400,
    ) -> ResponseTuple:
        response: Dict[str, Any] = {"success": False, "error": {"message": message}}

        if error_code:
            response["error"]["code"] = error_code

        if details:
            response["error"]["details"] = details

        return jsonify(response), status_code

    @staticmethod
    def validation_error(
        message: str, field_errors: Optional[Dict[str, Any]] = None
    ) -> ResponseTuple:
        """Bad input: 400 with per-field messages when available"""
        return APIResponse.error(
            message=message,
            error_code="VALIDATION_ERROR",
            details={"field_errors": field_errors} if field_errors else None,
            status_code=400,
        )

    @staticmethod
    def estimation_error(error: EstimationError) -> ResponseTuple:
        """Valid input the estimators cannot handle: 422 with the error class"""
        return APIResponse.error(
            message=str(error),
            error_code="ESTIMATION_ERROR",
            details={"type": type(error).__name__},
            status_code=422,
        )

    @staticmethod
    def internal_error(message: str = "Internal server error") -> ResponseTuple:
        return APIResponse.error(
            message=message, error_code="INTERNAL_ERROR", status_code=500
        )

    @staticmethod
    def not_found(resource: str = "Resource") -> ResponseTuple:
        return APIResponse.error(
            message=f"{resource} not found", error_code="NOT_FOUND", status_code=404
        )

    @staticmethod
    def from_exception(error: Exception) -> ResponseTuple:
        """Map the two error families to their status codes, anything else to 500"""
        if isinstance(error, ValidationError):
            return APIResponse.validation_error(str(error), error.field_errors)
        if isinstance(error, EstimationError):
            return APIResponse.estimation_error(error)
        return APIResponse.internal_error()
