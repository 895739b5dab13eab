"""
Service container for dependency injection
Provides centralized service management and simulation preset loading
"""

import json
import os
from typing import Any, Dict, List, Type, TypeVar

T = TypeVar("T")

PRESET_DIR = os.path.join(os.path.dirname(__file__), "..", "simulation_presets")


class ServiceContainer:
    """Dependency injection container for managing services and their dependencies"""

    def __init__(self) -> None:
        self._services: Dict[str, Any] = {}
        self._singletons: Dict[str, Any] = {}
        self._presets: Dict[str, Dict[str, Any]] = {}

    def register_singleton(self, service_name: str, service_instance: Any) -> None:
        """Register a singleton service instance"""
        self._singletons[service_name] = service_instance

    def register_service(self, service_name: str, service_class: Type[T]) -> None:
        """Register a service class for lazy instantiation"""
        self._services[service_name] = service_class

    def get_service(self, service_name: str, *args: Any, **kwargs: Any) -> Any:
        """Get a service instance, creating it if necessary"""
        if service_name in self._singletons:
            return self._singletons[service_name]

        if service_name in self._services:
            service_class = self._services[service_name]
            return service_class(*args, **kwargs)

        raise ValueError(f"Service '{service_name}' not registered")

    def is_registered(self, service_name: str) -> bool:
        return service_name in self._singletons or service_name in self._services

    def list_presets(self) -> List[str]:
        """Names of the bundled simulation presets"""
        return sorted(
            name[: -len(".json")]
            for name in os.listdir(PRESET_DIR)
            if name.endswith(".json")
        )

    def get_preset(self, name: str) -> Dict[str, Any]:
        """Get a simulation preset by name"""
        if name in self._presets:
            return dict(self._presets[name])

        if name not in self.list_presets():
            raise ValueError(
                f"Unknown preset '{name}'; available: {', '.join(self.list_presets())}"
            )
        preset_path = os.path.join(PRESET_DIR, f"{name}.json")
        try:
            with open(preset_path, "r", encoding="utf-8") as f:
                preset: Dict[str, Any] = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ValueError(f"Failed to load preset {name}: {e}")
        self._presets[name] = preset
        return dict(preset)


# Global service container instance
_container = ServiceContainer()


def get_container() -> ServiceContainer:
    """Get the global service container instance"""
    return _container


def register_services() -> None:
    """Register all application services with the container"""
    from app.services.estimation_service import EstimationService

    if not _container.is_registered("estimation_service"):
        _container.register_singleton("estimation_service", EstimationService())
