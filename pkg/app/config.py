"""
Configuration settings for the lasso-adjusted ATE toolkit
"""

import os
from typing import Type

from app.utils.validation import ValidationError, safe_int_conversion

MAX_THREADS = 256


def env_threads(default: int = 1) -> int:
    """Worker count from LASSO_ATE_THREADS, read at call time"""
    raw = os.environ.get("LASSO_ATE_THREADS")
    if raw is None:
        return default
    try:
        return safe_int_conversion(raw, 1, MAX_THREADS, "LASSO_ATE_THREADS")
    except ValidationError:
        return default


class Config:
    """Base configuration"""

    TESTING = False
    DEBUG = False

    # Flask server configuration
    PORT = int(os.environ.get("PORT", 5001))
    HOST = os.environ.get("HOST", "127.0.0.1")

    # Environment detection
    ENV_NAME = os.environ.get("LASSO_ATE_ENV", "development")

    # Logging
    LOG_LEVEL = os.environ.get("LASSO_ATE_LOG_LEVEL", "INFO")
    STRUCTURED_LOGS = True

    # Estimation defaults
    CV_FOLDS = 10
    LAMBDA_GRID_SIZE = 100
    SOLVER_TOL = 1e-7
    SOLVER_KKT_TOL = 1e-5
    SOLVER_MAX_SWEEPS = 100_000
    CI_LEVEL = 0.95

    # Diagnostics defaults
    SUPPORT_BOOTSTRAP_RESAMPLES = 1000
    SUPPORT_THRESHOLD = 0.5
    FOURTH_MOMENT_FLAG = 30.0
    SCALING_FLAG = 1.0

    # Simulation defaults
    MONTE_CARLO_BOOTSTRAP = 500
    DEFAULT_REPLICATIONS = 2000
    API_MAX_REPLICATIONS = 200


class DevelopmentConfig(Config):
    """Development configuration"""

    DEBUG = True
    HOST = "127.0.0.1"


class TestingConfig(Config):
    """Testing configuration"""

    TESTING = True
    DEBUG = True
    PROPAGATE_EXCEPTIONS = False  # Ensure exceptions are converted to HTTP responses
    STRUCTURED_LOGS = False
    API_MAX_REPLICATIONS = 20


class ProductionConfig(Config):
    """Production configuration"""

    DEBUG = False


config: dict[str, Type[Config]] = {
    "development": DevelopmentConfig,
    "testing": TestingConfig,
    "production": ProductionConfig,
    "default": DevelopmentConfig,
}


def get_config(name: str = "default") -> Type[Config]:
    return config.get(name, config["default"])
