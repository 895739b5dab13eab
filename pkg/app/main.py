"""
Main Flask application module
"""

import os

from flask import Flask, Response
from flask_cors import CORS

from app import __version__
from app.config import get_config
from app.services.logging_service import configure_logging
from app.utils.api_response import APIResponse


def configure_cors(app: Flask) -> None:
    """
    Configure CORS: CORS_ORIGINS in production, localhost otherwise

    Args:
        app: Flask application instance
    """
    if app.config.get("ENV_NAME") == "production":
        origins_env = os.environ.get("CORS_ORIGINS", "")
        allowed_origins = [
            origin.strip() for origin in origins_env.split(",") if origin.strip()
        ]
    else:
        port = app.config.get("PORT", 5001)
        allowed_origins = [f"http://localhost:{port}", f"http://127.0.0.1:{port}"]

    CORS(
        app,
        origins=allowed_origins,
        supports_credentials=False,
        max_age=3600,
    )


def add_security_headers(response: Response) -> Response:
    """Add security headers to all responses"""
    response.headers["X-Content-Type-Options"] = "nosniff"
    response.headers["X-Frame-Options"] = "DENY"
    response.headers["Referrer-Policy"] = "no-referrer"
    response.headers["Content-Security-Policy"] = "default-src 'none'"
    return response


def create_app(config_name: str = "default") -> Flask:
    """
    Application factory pattern for creating Flask app instances

    Args:
        config_name: Configuration name ('development', 'testing', 'production')

    Returns:
        Configured Flask application instance
    """
    app = Flask(__name__)

    # Explicit config_name takes precedence in tests
    if config_name == "testing":
        config_name_to_use = "testing"
    else:
        config_name_to_use = os.environ.get("LASSO_ATE_ENV") or config_name

    app.config.from_object(get_config(config_name_to_use))
    app.config["ENV_NAME"] = config_name_to_use

    configure_logging(app.config["LOG_LEVEL"], app.config["STRUCTURED_LOGS"])
    configure_cors(app)
    app.after_request(add_security_headers)

    from app.api.estimator_api import estimator_bp
    from app.cli import cli

    app.register_blueprint(estimator_bp, url_prefix="/api/v1/ate")
    app.cli.add_command(cli)

    @app.route("/api")
    def api_info() -> dict[str, str]:
        return {"status": "ok", "message": "Lasso ATE API is running"}

    @app.route("/health")
    def health() -> dict[str, str]:
        return {"status": "healthy", "version": __version__}

    @app.errorhandler(404)
    def not_found(error: Exception) -> tuple[Response, int]:
        return APIResponse.not_found("Endpoint")

    @app.errorhandler(500)
    def internal_error(error: Exception) -> tuple[Response, int]:
        return APIResponse.internal_error()

    return app


if __name__ == "__main__":
    app = create_app(os.environ.get("LASSO_ATE_ENV", "development"))
    app.run(
        host=app.config["HOST"], port=app.config["PORT"], debug=app.config["DEBUG"]
    )
