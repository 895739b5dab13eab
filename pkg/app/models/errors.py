"""
Exception hierarchy for estimation failures

Input problems raise app.utils.validation.ValidationError; everything that
goes wrong while computing (solver, refit, variance, enumeration) derives
from EstimationError so callers can map it to a single exit code.
"""

from typing import Optional, Sequence

import numpy as np


class EstimationError(Exception):
    """Base class for computation errors"""


class ConvergenceError(EstimationError):
    """Coordinate descent did not reach the requested tolerance"""

    def __init__(
        self,
        message: str,
        beta: Optional[np.ndarray] = None,
        kkt_residual: float = float("nan"),
        grid_index: Optional[int] = None,
    ) -> None:
        super().__init__(message)
        self.beta = beta
        self.kkt_residual = kkt_residual
        self.grid_index = grid_index

    def with_grid_index(self, grid_index: int) -> "ConvergenceError":
        """Return a copy annotated with the lambda grid position"""
        return ConvergenceError(
            f"{self.args[0]} (grid index {grid_index})",
            beta=self.beta,
            kkt_residual=self.kkt_residual,
            grid_index=grid_index,
        )


class DegenerateGridError(EstimationError):
    """lambda_max is zero, so no decreasing grid exists"""


class RankDeficiencyError(EstimationError):
    """Restricted least squares design is not of full column rank"""

    def __init__(self, message: str, dependent_columns: Sequence[int] = ()) -> None:
        super().__init__(message)
        self.dependent_columns = tuple(int(j) for j in dependent_columns)


class RefitError(EstimationError):
    """OLS refit is ill-posed (support as large as the group)"""


class GroupSizeError(EstimationError):
    """A treatment group is too small for the requested statistic"""


class VarianceError(EstimationError):
    """Degrees of freedom exhaust the group size"""


class OlsNotApplicableError(EstimationError):
    """Full OLS adjustment is impossible for this design"""


class EnumerationLimitError(EstimationError):
    """Too many assignments to enumerate exactly"""


class SimulationError(EstimationError):
    """Monte Carlo run violated its failure policy"""


class DiagnosticsError(EstimationError):
    """Too many bootstrap resamples failed"""
