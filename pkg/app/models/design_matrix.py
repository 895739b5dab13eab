"""
Design matrix featurization

Builds the adjustment design from raw covariates: main effects, quadratic
terms of the non-indicator mains and all pairwise interactions, followed by
exact-duplicate removal, a correlation filter against the mains, a sparsity
filter on 0/1 columns and centering/standardization of the rest.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)

COLUMN_KINDS = ("main", "indicator", "quadratic", "interaction")


@dataclass(frozen=True)
class FeaturizeOptions:
    """Options for build_design_matrix"""

    include_quadratics: bool = True
    include_interactions: bool = True
    corr_threshold: float = 0.95
    min_ones: int = 20
    standardize: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.corr_threshold <= 1.0:
            raise ValidationError("corr_threshold must be between 0 and 1")
        if self.min_ones < 0:
            raise ValidationError("min_ones must be non-negative")


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Featurized covariates with enough metadata to undo standardization"""

    columns: np.ndarray
    column_names: Tuple[str, ...]
    column_kinds: Tuple[str, ...]
    binary: Tuple[bool, ...]
    standardization_record: Tuple[Tuple[float, float], ...]
    dropped: Tuple[Dict[str, str], ...] = field(default_factory=tuple)

    @property
    def shape(self) -> Tuple[int, int]:
        return (int(self.columns.shape[0]), int(self.columns.shape[1]))

    def inverse_transform(self) -> np.ndarray:
        """Recover the raw-derived columns from the standardized ones"""
        centers = np.array([c for c, _ in self.standardization_record])
        scales = np.array([s for _, s in self.standardization_record])
        return self.columns * scales + centers

    def raw_scale_coefficients(self, beta: np.ndarray) -> Tuple[np.ndarray, float]:
        """
        Map coefficients fitted on this design back to raw-derived columns

        Args:
            beta: Coefficients on the standardized columns

        Returns:
            (raw coefficients, intercept offset) such that
            columns @ beta == raw @ raw_beta + offset
        """
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.shape[1],):
            raise ValidationError("Coefficient length must match design columns")
        centers = np.array([c for c, _ in self.standardization_record])
        scales = np.array([s for _, s in self.standardization_record])
        raw_beta = beta / scales
        return raw_beta, float(-np.dot(centers, raw_beta))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.columns, columns=list(self.column_names))

    def metadata(self) -> Dict[str, Any]:
        return {
            "column_names": list(self.column_names),
            "column_kinds": list(self.column_kinds),
            "binary": list(self.binary),
            "standardization_record": [
                {"center": center, "scale": scale}
                for center, scale in self.standardization_record
            ],
            "dropped": list(self.dropped),
        }


def log_transform_column(values: Sequence[float]) -> np.ndarray:
    """
    Elementwise x -> log(|x| + 1) for heavy-tailed covariates

    Raises:
        ValidationError: If any entry is non-finite
    """
    array = np.asarray(values, dtype=float)
    bad = np.flatnonzero(~np.isfinite(array))
    if bad.size:
        raise ValidationError(f"Non-finite value at index {int(bad[0])}")
    return np.log1p(np.abs(array))


def _resolve_flags(
    raw: pd.DataFrame, indicator_flags: Any
) -> List[bool]:
    if indicator_flags is None:
        return [False] * raw.shape[1]
    if isinstance(indicator_flags, Mapping):
        return [bool(indicator_flags.get(name, False)) for name in raw.columns]
    flags = [bool(flag) for flag in indicator_flags]
    if len(flags) != raw.shape[1]:
        raise ValidationError("One indicator flag is required per raw column")
    return flags


def _abs_correlations(candidate: np.ndarray, centered_mains: np.ndarray) -> np.ndarray:
    centered = candidate - candidate.mean()
    norm = np.linalg.norm(centered)
    main_norms = np.linalg.norm(centered_mains, axis=0)
    valid = main_norms > 0
    if norm == 0 or not valid.any():
        return np.zeros(0)
    dots = centered_mains[:, valid].T @ centered
    return np.abs(dots / (main_norms[valid] * norm))


def build_design_matrix(
    raw: Any,
    indicator_flags: Any = None,
    options: Optional[FeaturizeOptions] = None,
) -> DesignMatrix:
    """
    Build the adjustment design matrix from raw covariates

    Filtering order: exact duplicates (first kept), quadratic/interaction
    columns with |corr| > corr_threshold against any main effect, 0/1
    columns with fewer than min_ones ones, then standardization of the
    non-binary columns (constant ones are dropped with a warning record).

    Args:
        raw: DataFrame (or 2-D array) of raw covariates
        indicator_flags: Mapping name -> bool or one flag per column
        options: Featurization options

    Returns:
        DesignMatrix
    """
    options = options or FeaturizeOptions()
    frame = raw if isinstance(raw, pd.DataFrame) else pd.DataFrame(np.asarray(raw))
    frame = frame.copy()
    frame.columns = [str(name) for name in frame.columns]
    if frame.shape[0] < 2:
        raise ValidationError("Raw covariates need at least 2 rows")
    values = frame.to_numpy(dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValidationError("Raw covariates contain non-finite entries")

    flags = _resolve_flags(frame, indicator_flags)
    names = list(frame.columns)
    for j, is_indicator in enumerate(flags):
        if is_indicator and not np.isin(values[:, j], (0.0, 1.0)).all():
            raise ValidationError(f"Indicator column '{names[j]}' is not 0/1")

    candidates: List[Tuple[str, str, bool, np.ndarray]] = []
    for j, name in enumerate(names):
        kind = "indicator" if flags[j] else "main"
        candidates.append((name, kind, flags[j], values[:, j]))
    if options.include_quadratics:
        for j, name in enumerate(names):
            if not flags[j]:
                candidates.append(
                    (f"{name}^2", "quadratic", False, values[:, j] * values[:, j])
                )
    if options.include_interactions:
        for i, j in combinations(range(len(names)), 2):
            candidates.append(
                (
                    f"{names[i]}:{names[j]}",
                    "interaction",
                    flags[i] and flags[j],
                    values[:, i] * values[:, j],
                )
            )

    dropped: List[Dict[str, str]] = []

    seen: Dict[bytes, str] = {}
    unique: List[Tuple[str, str, bool, np.ndarray]] = []
    for candidate in candidates:
        key = np.ascontiguousarray(candidate[3]).tobytes()
        if key in seen:
            dropped.append(
                {"name": candidate[0], "reason": f"duplicate of {seen[key]}"}
            )
            continue
        seen[key] = candidate[0]
        unique.append(candidate)

    main_columns = [c[3] for c in unique if c[1] in ("main", "indicator")]
    centered_mains = (
        np.column_stack(main_columns) - np.column_stack(main_columns).mean(axis=0)
        if main_columns
        else np.zeros((values.shape[0], 0))
    )
    correlated_filtered = []
    for candidate in unique:
        if candidate[1] in ("quadratic", "interaction"):
            corr = _abs_correlations(candidate[3], centered_mains)
            if corr.size and corr.max() > options.corr_threshold:
                dropped.append(
                    {
                        "name": candidate[0],
                        "reason": f"correlation {corr.max():.4f} with a main effect",
                    }
                )
                continue
        correlated_filtered.append(candidate)

    retained = []
    for candidate in correlated_filtered:
        if candidate[2]:
            ones = int(np.sum(candidate[3] == 1.0))
            if ones < options.min_ones:
                dropped.append(
                    {"name": candidate[0], "reason": f"sparse indicator ({ones} ones)"}
                )
                continue
        retained.append(candidate)

    out_columns: List[np.ndarray] = []
    out_names: List[str] = []
    out_kinds: List[str] = []
    out_binary: List[bool] = []
    record: List[Tuple[float, float]] = []
    for name, kind, is_binary, column in retained:
        center, scale = 0.0, 1.0
        if options.standardize and not is_binary:
            if np.ptp(column) == 0:
                dropped.append({"name": name, "reason": "constant column"})
                continue
            center = float(np.mean(column))
            scale = float(np.std(column, ddof=1))
            column = (column - center) / scale
        out_columns.append(column)
        out_names.append(name)
        out_kinds.append(kind)
        out_binary.append(is_binary)
        record.append((center, scale))

    for entry in dropped:
        logger.warning(
            "Dropped design column %s: %s",
            entry["name"],
            entry["reason"],
            extra={"column": entry["name"], "reason": entry["reason"]},
        )

    matrix = (
        np.column_stack(out_columns)
        if out_columns
        else np.zeros((values.shape[0], 0))
    )
    matrix.setflags(write=False)
    return DesignMatrix(
        columns=matrix,
        column_names=tuple(out_names),
        column_kinds=tuple(out_kinds),
        binary=tuple(out_binary),
        standardization_record=tuple(record),
        dropped=tuple(dropped),
    )
