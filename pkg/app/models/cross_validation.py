"""
K-fold cross-validation for the Lasso and for the Lasso+OLS pipeline

cv_lasso scores each lambda by the held-out error of the Lasso fit;
cv_lasso_ols scores it by the held-out error of the OLS refit on the Lasso
support, reusing the previous refit whenever the support is unchanged
between adjacent grid points.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from sklearn.model_selection import KFold

from app.models.errors import EstimationError
from app.models.lasso_solver import (
    DEFAULT_KKT_TOL,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    CenteredProblem,
    LambdaGrid,
    fit_ols,
)
from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)

CV_MODES = ("lasso", "lasso_ols")


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Balanced random partition of a group into K folds"""

    fold_of: np.ndarray
    K: int
    seed: int

    def fold_sizes(self) -> List[int]:
        return [int(np.sum(self.fold_of == k)) for k in range(self.K)]

    def split(self, k: int) -> Tuple[np.ndarray, np.ndarray]:
        """(training indices, held-out indices) for fold k"""
        return np.flatnonzero(self.fold_of != k), np.flatnonzero(self.fold_of == k)


@dataclass(frozen=True, eq=False)
class CvResult:
    """Cross-validation errors over a lambda grid"""

    grid: LambdaGrid
    cv_error: np.ndarray
    per_fold_error: np.ndarray
    optimal_index: int
    mode: str
    folds: FoldAssignment
    refit_fallbacks: int = 0

    @property
    def optimal_lambda(self) -> float:
        return float(self.grid.values[self.optimal_index])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "grid": [float(v) for v in self.grid.values],
            "cv_error": [float(v) for v in self.cv_error],
            "per_fold_error": self.per_fold_error.tolist(),
            "optimal_index": self.optimal_index,
            "optimal_lambda": self.optimal_lambda,
            "folds": self.folds.K,
            "seed": self.folds.seed,
            "refit_fallbacks": self.refit_fallbacks,
        }


@dataclass(frozen=True)
class SolverSettings:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    kkt_tol: float = DEFAULT_KKT_TOL


def kfold_partition(n_g: int, K: int, seed: int) -> FoldAssignment:
    """
    Uniformly random balanced partition, deterministic given seed

    Fold sizes differ by at most one; the first n_g mod K folds hold the
    extra unit.
    """
    if K < 2:
        raise ValidationError("At least 2 folds are required")
    if K > n_g:
        raise ValidationError(f"Cannot split {n_g} observations into {K} folds")
    splitter = KFold(n_splits=K, shuffle=True, random_state=int(seed) % (2**32))
    fold_of = np.empty(n_g, dtype=int)
    for k, (_, held_out) in enumerate(splitter.split(np.zeros((n_g, 1)))):
        fold_of[held_out] = k
    fold_of.setflags(write=False)
    return FoldAssignment(fold_of=fold_of, K=K, seed=int(seed))


def _select_optimum(cv_error: np.ndarray) -> int:
    # argmin keeps the first minimum, i.e. the larger lambda on ties
    return int(np.argmin(cv_error))


def _held_out_error(
    y_test: np.ndarray, X_test: np.ndarray, beta: np.ndarray, problem: CenteredProblem
) -> float:
    prediction = problem.y_mean + (X_test - problem.x_mean) @ beta
    residual = y_test - prediction
    return float(np.mean(residual * residual))


def _fold_errors(
    X: np.ndarray,
    y: np.ndarray,
    grid: LambdaGrid,
    train: np.ndarray,
    test: np.ndarray,
    modes: Sequence[str],
    settings: SolverSettings,
) -> Tuple[Dict[str, np.ndarray], int]:
    problem = CenteredProblem(X[train], y[train])
    X_test, y_test = X[test], y[test]
    errors = {mode: np.empty(len(grid)) for mode in modes}
    fallbacks = 0

    previous_support: Tuple[int, ...] = ()
    previous_refit = np.zeros(X.shape[1])
    refit_ok = True
    warm: Optional[np.ndarray] = None
    for j, lam in enumerate(grid.values):
        fit = problem.solve(
            float(lam),
            settings.tol,
            settings.max_iter,
            settings.kkt_tol,
            warm_start=warm,
        )
        warm = np.asarray(fit.beta)
        if "lasso" in errors:
            errors["lasso"][j] = _held_out_error(y_test, X_test, warm, problem)
        if "lasso_ols" in errors:
            if fit.support != previous_support:
                try:
                    previous_refit = np.asarray(
                        fit_ols(X[train], y[train], fit.support).beta
                    )
                    refit_ok = True
                except EstimationError as e:
                    fallbacks += 1
                    logger.warning(
                        "Lasso+OLS refit failed, using Lasso coefficients: %s",
                        e,
                        extra={"grid_index": j, "support_size": len(fit.support)},
                    )
                    refit_ok = False
                previous_support = fit.support
            errors["lasso_ols"][j] = _held_out_error(
                y_test, X_test, previous_refit if refit_ok else warm, problem
            )
    return errors, fallbacks


def cross_validate(
    X: Any,
    y: Any,
    grid: LambdaGrid,
    K: int = 10,
    seed: int = 0,
    modes: Sequence[str] = CV_MODES,
    settings: Optional[SolverSettings] = None,
    max_workers: int = 1,
) -> Dict[str, CvResult]:
    """
    Run the fold loop once and score every requested mode

    Both modes share the per-fold Lasso paths. Folds may run concurrently;
    results are reduced in fold order so serial and parallel runs agree
    bit for bit.

    Returns:
        Mapping mode -> CvResult
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    unknown = set(modes) - set(CV_MODES)
    if unknown:
        raise ValidationError(f"Unknown CV modes: {sorted(unknown)}")
    if not modes:
        raise ValidationError("At least one CV mode is required")
    settings = settings or SolverSettings()
    n = y.shape[0]
    folds = kfold_partition(n, K, seed)
    if min(n - size for size in folds.fold_sizes()) < 2:
        raise ValidationError("Every training split needs at least 2 rows")

    def run_fold(k: int) -> Tuple[Dict[str, np.ndarray], int]:
        train, test = folds.split(k)
        return _fold_errors(X, y, grid, train, test, modes, settings)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            outcomes = list(executor.map(run_fold, range(K)))
    else:
        outcomes = [run_fold(k) for k in range(K)]

    results: Dict[str, CvResult] = {}
    for mode in modes:
        per_fold = np.column_stack([errors[mode] for errors, _ in outcomes])
        cv_error = per_fold.mean(axis=1)
        results[mode] = CvResult(
            grid=grid,
            cv_error=cv_error,
            per_fold_error=per_fold,
            optimal_index=_select_optimum(cv_error),
            mode=mode,
            folds=folds,
            refit_fallbacks=(
                sum(count for _, count in outcomes) if mode == "lasso_ols" else 0
            ),
        )
    return results


def cv_lasso(
    X: Any,
    y: Any,
    grid: LambdaGrid,
    K: int = 10,
    seed: int = 0,
    settings: Optional[SolverSettings] = None,
    max_workers: int = 1,
) -> CvResult:
    """K-fold CV of the Lasso held-out error over the grid"""
    return cross_validate(X, y, grid, K, seed, ("lasso",), settings, max_workers)[
        "lasso"
    ]


def cv_lasso_ols(
    X: Any,
    y: Any,
    grid: LambdaGrid,
    K: int = 10,
    seed: int = 0,
    settings: Optional[SolverSettings] = None,
    max_workers: int = 1,
) -> CvResult:
    """K-fold CV of the select-then-refit pipeline over the grid"""
    return cross_validate(
        X, y, grid, K, seed, ("lasso_ols",), settings, max_workers
    )["lasso_ols"]
