"""
CSV sanitization utilities

Text cells starting with a formula character are escaped with a leading
quote to prevent CSV injection. Numeric cells are written at full precision
and never altered, so a negative estimate keeps its sign. Header cells are
only quoted, so column names match the metadata written beside them.
"""

import math
import numbers
from typing import Any, List, Sequence

DANGEROUS_PREFIXES = ("=", "+", "-", "@", "\t", "\r")
FORMULA_ESCAPE = "'"


def _is_numeric_text(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def format_number(value: Any) -> str:
    """Shortest round-trip representation of a number"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, numbers.Integral):
        return str(int(value))
    number = float(value)
    if math.isnan(number):
        return ""
    return repr(number)


def sanitize_csv_field(field: Any, escape_formulas: bool = True) -> str:
    """
    Sanitize field for safe CSV output

    Args:
        field: Field value to sanitize
        escape_formulas: Prefix formula-leading text with a quote

    Returns:
        Sanitized, RFC 4180 quoted string
    """
    if field is None:
        return ""
    if isinstance(field, numbers.Number):
        return format_number(field)

    field_str = str(field)
    if (
        escape_formulas
        and field_str[:1] in DANGEROUS_PREFIXES
        and not _is_numeric_text(field_str)
    ):
        field_str = FORMULA_ESCAPE + field_str

    if any(ch in field_str for ch in (",", "\n", "\r", '"')):
        field_str = '"' + field_str.replace('"', '""') + '"'
    return field_str


def sanitize_csv_row(row: Sequence[Any], escape_formulas: bool = True) -> List[str]:
    return [sanitize_csv_field(field, escape_formulas) for field in row]


def create_safe_csv_content(
    headers: Sequence[Any], rows: Sequence[Sequence[Any]]
) -> str:
    """
    Create CSV content with sanitized headers and data

    Args:
        headers: Header strings, written verbatim apart from quoting
        rows: Row data (each row is a sequence of values)

    Returns:
        Complete CSV content, CRLF line endings, trailing newline
    """
    lines = [",".join(sanitize_csv_row(headers, escape_formulas=False))]
    lines.extend(",".join(sanitize_csv_row(row)) for row in rows)
    return "\r\n".join(lines) + "\r\n"
