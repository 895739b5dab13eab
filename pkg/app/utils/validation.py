"""
Input validation utilities
"""

from typing import Any, Dict, Iterable, List, Optional


class ValidationError(Exception):
    """Custom exception for validation errors"""

    def __init__(
        self, message: str, field_errors: Optional[Dict[str, Any]] = None
    ) -> None:
        super().__init__(message)
        self.field_errors = field_errors or {}


def safe_int_conversion(value: Any, min_val: int, max_val: int, field_name: str) -> int:
    """
    Safely convert value to int with bounds checking

    Args:
        value: Value to convert
        min_val: Minimum allowed value
        max_val: Maximum allowed value
        field_name: Field name for error messages

    Returns:
        Validated integer value

    Raises:
        ValidationError: If validation fails
    """
    if isinstance(value, bool):
        raise ValidationError(f"Invalid {field_name}: must be a valid integer")
    try:
        int_val = int(value)
    except (ValueError, TypeError):
        raise ValidationError(f"Invalid {field_name}: must be a valid integer")
    if isinstance(value, float) and value != int_val:
        raise ValidationError(f"Invalid {field_name}: must be a valid integer")
    if not (min_val <= int_val <= max_val):
        raise ValidationError(f"{field_name} must be between {min_val} and {max_val}")
    return int_val


def parse_choice_list(
    value: Any, allowed: Iterable[str], field_name: str
) -> List[str]:
    """
    Parse a comma-separated string or a list into validated choices

    Duplicates are dropped; order of first appearance is kept.

    Raises:
        ValidationError: For empty input or unknown entries
    """
    allowed = list(allowed)
    if isinstance(value, str):
        items = [item.strip() for item in value.split(",") if item.strip()]
    elif isinstance(value, (list, tuple)):
        items = [str(item).strip() for item in value]
    else:
        raise ValidationError(f"Invalid {field_name}: expected a list")
    if not items:
        raise ValidationError(f"{field_name} must not be empty")
    unknown = [item for item in items if item not in allowed]
    if unknown:
        raise ValidationError(
            f"{field_name} must be chosen from: {', '.join(allowed)}",
            {field_name: unknown},
        )
    return list(dict.fromkeys(items))
