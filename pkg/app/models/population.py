"""
Finite-population data model

Population holds both potential outcome vectors (simulation ground truth);
ExperimentSample holds what an experimenter actually observes after one
completely randomized assignment.
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from app.utils.validation import ValidationError


def _frozen(values: Any, dtype: Any = float) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _as_matrix(values: Any, n_rows: int) -> np.ndarray:
    matrix = np.asarray(values, dtype=float)
    if matrix.ndim == 1 and matrix.size == 0:
        matrix = matrix.reshape(n_rows, 0)
    if matrix.ndim != 2:
        raise ValidationError("Covariates must be a two-dimensional matrix")
    return matrix


@dataclass(frozen=True, eq=False)
class Population:
    """Covariates plus both potential outcomes, frozen after construction"""

    covariates: np.ndarray
    outcomes_treated: np.ndarray
    outcomes_control: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)
    true_ate: float = field(init=False)

    def __post_init__(self) -> None:
        treated = np.asarray(self.outcomes_treated, dtype=float)
        control = np.asarray(self.outcomes_control, dtype=float)
        if treated.ndim != 1 or control.ndim != 1:
            raise ValidationError("Potential outcomes must be vectors")
        n = treated.shape[0]
        covariates = _as_matrix(self.covariates, n)
        if n < 2:
            raise ValidationError("Population needs at least 2 units")
        if control.shape[0] != n or covariates.shape[0] != n:
            raise ValidationError(
                "Covariates and potential outcomes must share length n"
            )
        object.__setattr__(self, "covariates", _frozen(covariates))
        object.__setattr__(self, "outcomes_treated", _frozen(treated))
        object.__setattr__(self, "outcomes_control", _frozen(control))
        object.__setattr__(
            self, "true_ate", float(np.mean(treated) - np.mean(control))
        )

    @property
    def n(self) -> int:
        return int(self.outcomes_treated.shape[0])

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def unit_effects(self) -> np.ndarray:
        """Individual treatment effects a_i - b_i"""
        return self.outcomes_treated - self.outcomes_control

    def reveal(self, assignment: np.ndarray) -> "ExperimentSample":
        """Observe Y_i = T_i a_i + (1 - T_i) b_i under one assignment"""
        t = np.asarray(assignment, dtype=int)
        if t.shape != (self.n,):
            raise ValidationError("Assignment length must match the population")
        observed = np.where(t == 1, self.outcomes_treated, self.outcomes_control)
        return ExperimentSample(self.covariates, t, observed)


@dataclass(frozen=True, eq=False)
class ExperimentSample:
    """Observed data from one completely randomized experiment"""

    covariates: np.ndarray
    assignment: np.ndarray
    observed: np.ndarray
    covariate_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        observed = np.asarray(self.observed, dtype=float)
        assignment = np.asarray(self.assignment)
        if observed.ndim != 1:
            raise ValidationError("Observed outcomes must be a vector")
        n = observed.shape[0]
        covariates = _as_matrix(self.covariates, n)
        if assignment.shape != (n,) or covariates.shape[0] != n:
            raise ValidationError(
                "Covariates, assignment and outcomes must share length n"
            )
        if not np.isin(assignment, (0, 1)).all():
            raise ValidationError("Assignment must contain only 0/1 values")
        n_treated = int(np.sum(assignment))
        if not 1 <= n_treated <= n - 1:
            raise ValidationError(
                f"Treated count must be between 1 and {n - 1}, got {n_treated}"
            )
        if not np.all(np.isfinite(covariates)):
            raise ValidationError("Covariates contain non-finite entries")
        if not np.all(np.isfinite(observed)):
            raise ValidationError("Observed outcomes contain non-finite entries")
        if self.covariate_names is not None and len(self.covariate_names) != (
            covariates.shape[1]
        ):
            raise ValidationError("Covariate names must match covariate columns")

        object.__setattr__(self, "covariates", _frozen(covariates))
        object.__setattr__(self, "assignment", _frozen(assignment, dtype=int))
        object.__setattr__(self, "observed", _frozen(observed))
        if self.covariate_names is not None:
            object.__setattr__(self, "covariate_names", tuple(self.covariate_names))

    @property
    def n(self) -> int:
        return int(self.observed.shape[0])

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def treated_mask(self) -> np.ndarray:
        return self.assignment == 1

    @property
    def n_treated(self) -> int:
        return int(np.sum(self.assignment))

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    def group(self, treated: bool) -> Tuple[np.ndarray, np.ndarray]:
        """Return (X_g, y_g) for the treated or control group"""
        mask = self.treated_mask if treated else ~self.treated_mask
        return self.covariates[mask], self.observed[mask]

    def with_observed(self, observed: np.ndarray) -> "ExperimentSample":
        return ExperimentSample(
            self.covariates, self.assignment, observed, self.covariate_names
        )

    def column_names(self) -> Tuple[str, ...]:
        if self.covariate_names is not None:
            return self.covariate_names
        return tuple(f"x{j + 1}" for j in range(self.p))
