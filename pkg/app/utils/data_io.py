"""
File ingestion and output for experiment data, designs and reports

Data files are UTF-8 CSV with a header row. A sidecar JSON names the
outcome and treatment columns and flags 0/1 indicator covariates:

    {"outcome": "y", "treatment": "t",
     "columns": {"x1": {"indicator": false}, "smoker": {"indicator": true}},
     "covariates": ["x1", "smoker"]}

"covariates" is optional; by default every other column is a covariate.
"""

import json
import logging
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from app.models.design_matrix import DesignMatrix
from app.models.population import ExperimentSample
from app.utils.csv_sanitizer import create_safe_csv_content
from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class DataLoadError(ValidationError):
    """Malformed input file or missing column"""


@dataclass(frozen=True)
class DatasetMeta:
    outcome: Optional[str] = None
    treatment: Optional[str] = None
    indicators: Dict[str, bool] = field(default_factory=dict)
    covariates: Optional[Tuple[str, ...]] = None

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "DatasetMeta":
        if not isinstance(payload, Mapping):
            raise DataLoadError("Metadata must be a JSON object")
        columns = payload.get("columns")
        if columns is None:
            columns = {}
        if not isinstance(columns, Mapping):
            raise DataLoadError("Metadata 'columns' must be an object")
        indicators = {}
        for name, spec in columns.items():
            if not isinstance(spec, Mapping):
                raise DataLoadError(f"Metadata for column '{name}' must be an object")
            indicators[str(name)] = bool(spec.get("indicator", False))
        covariates = payload.get("covariates")
        if covariates is not None and not isinstance(covariates, list):
            raise DataLoadError("Metadata 'covariates' must be a list")
        return cls(
            outcome=payload.get("outcome"),
            treatment=payload.get("treatment"),
            indicators=indicators,
            covariates=tuple(str(c) for c in covariates) if covariates else None,
        )

    def covariate_columns(self, frame: pd.DataFrame) -> List[str]:
        if self.covariates is not None:
            return list(self.covariates)
        skip = {self.outcome, self.treatment}
        return [str(c) for c in frame.columns if c not in skip]


def read_json(path: PathLike) -> Any:
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except FileNotFoundError:
        raise DataLoadError(f"File not found: {path}")
    except json.JSONDecodeError as e:
        raise DataLoadError(f"Invalid JSON in {path}: {e}")


def load_meta(path: PathLike) -> DatasetMeta:
    return DatasetMeta.from_dict(read_json(path))


def read_config_file(path: PathLike) -> Dict[str, Any]:
    """Simulation config from a .toml or .json file"""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        try:
            with open(path, "rb") as handle:
                return tomllib.load(handle)
        except FileNotFoundError:
            raise DataLoadError(f"File not found: {path}")
        except tomllib.TOMLDecodeError as e:
            raise DataLoadError(f"Invalid TOML in {path}: {e}")
    payload = read_json(path)
    if not isinstance(payload, dict):
        raise DataLoadError("Config file must contain an object")
    return payload


def read_csv(path: PathLike) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path, encoding="utf-8")
    except FileNotFoundError:
        raise DataLoadError(f"File not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataLoadError(f"Malformed CSV {path}: {e}")
    frame.columns = [str(c) for c in frame.columns]
    return frame


def _numeric_block(frame: pd.DataFrame, columns: List[str]) -> np.ndarray:
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise DataLoadError(f"Missing columns: {', '.join(missing)}")
    block = frame[columns].apply(pd.to_numeric, errors="coerce")
    bad = block.isna().to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise DataLoadError(
            f"Non-numeric or missing value in column '{columns[col]}' at row {row + 1}"
        )
    return block.to_numpy(dtype=float)


def frame_to_sample(frame: pd.DataFrame, meta: DatasetMeta) -> ExperimentSample:
    """
    Build an ExperimentSample from a data frame

    Raises:
        DataLoadError: For missing columns, non-numeric values or an
            assignment that is not a valid 0/1 vector
    """
    if not meta.outcome or not meta.treatment:
        raise DataLoadError("Metadata must name the outcome and treatment columns")
    covariates = meta.covariate_columns(frame)
    observed = _numeric_block(frame, [meta.outcome])[:, 0]
    assignment = _numeric_block(frame, [meta.treatment])[:, 0]
    X = (
        _numeric_block(frame, covariates)
        if covariates
        else np.zeros((frame.shape[0], 0))
    )
    if not np.isin(assignment, (0.0, 1.0)).all():
        raise DataLoadError(f"Treatment column '{meta.treatment}' must be 0/1")
    try:
        return ExperimentSample(
            X, assignment.astype(int), observed, tuple(covariates)
        )
    except ValidationError as e:
        raise DataLoadError(str(e)) from e


def load_experiment(
    data_path: PathLike, meta_path: PathLike
) -> Tuple[ExperimentSample, DatasetMeta]:
    meta = load_meta(meta_path)
    sample = frame_to_sample(read_csv(data_path), meta)
    logger.info(
        "Loaded experiment",
        extra={"n": sample.n, "p": sample.p, "n_treated": sample.n_treated},
    )
    return sample, meta


def raw_covariates(
    frame: pd.DataFrame, meta: DatasetMeta
) -> Tuple[pd.DataFrame, List[bool]]:
    """Covariate block and per-column indicator flags for featurization"""
    columns = meta.covariate_columns(frame)
    if not columns:
        raise DataLoadError("No covariate columns to featurize")
    values = _numeric_block(frame, columns)
    return (
        pd.DataFrame(values, columns=columns),
        [meta.indicators.get(c, False) for c in columns],
    )


def write_text(content: str, path: Optional[PathLike]) -> None:
    """Write to path, or to stdout when path is None or '-'"""
    if path is None or str(path) == "-":
        sys.stdout.write(content)
        return
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(content)


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(payload: Any, path: Optional[PathLike]) -> None:
    write_text(to_json(payload), path)


def frame_to_csv(frame: pd.DataFrame) -> str:
    rows = frame.astype(object).where(frame.notna(), None).to_numpy().tolist()
    return create_safe_csv_content(list(frame.columns), rows)


def write_design_matrix(
    design: DesignMatrix,
    csv_path: PathLike,
    meta_path: PathLike,
    manifest: Optional[Dict[str, Any]] = None,
) -> None:
    """Design CSV plus the metadata needed to undo standardization"""
    write_text(frame_to_csv(design.to_frame()), csv_path)
    metadata = design.metadata()
    if manifest is not None:
        metadata["manifest"] = manifest
    write_json(metadata, meta_path)
