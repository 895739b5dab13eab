"""
API package for REST endpoints
"""

from app.api.estimator_api import estimator_bp

__all__ = ["estimator_bp"]
