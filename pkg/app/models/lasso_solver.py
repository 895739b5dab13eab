"""
Coordinate-descent Lasso on group-centered data, plus OLS refits

Both outcome and covariates are centered by their within-group means, so
the intercept is implicit and never penalized:

    (1 / 2n) * sum_i (y_i - ybar - (x_i - xbar)^T beta)^2 + lambda * |beta|_1

Columns are rescaled to unit within-group SD while iterating and the
penalty weight per scaled coordinate becomes lambda / sd_j, so the problem
being solved is exactly the one above.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.models.errors import (
    ConvergenceError,
    DegenerateGridError,
    RankDeficiencyError,
    RefitError,
)
from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-7
DEFAULT_KKT_TOL = 1e-5
DEFAULT_MAX_ITER = 100_000


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class AdjustmentFit:
    """One group's fitted adjustment vector"""

    beta: np.ndarray
    support: Tuple[int, ...]
    lambda_value: float
    group_outcome_mean: float
    group_covariate_mean: np.ndarray
    n_group: int
    df: int
    method: str = "lasso"
    kkt_residual: float = 0.0
    sweeps: int = 0
    refit_fallback: bool = False

    @property
    def selected_count(self) -> int:
        return len(self.support)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Predict outcomes, re-adding the stored group means"""
        X = np.asarray(X, dtype=float)
        return self.group_outcome_mean + (X - self.group_covariate_mean) @ self.beta

    def to_dict(self, names: Optional[Sequence[str]] = None) -> Dict[str, Any]:
        result: Dict[str, Any] = {
            "method": self.method,
            "lambda": self.lambda_value,
            "support": list(self.support),
            "coefficients": {
                (names[j] if names is not None else str(j)): float(self.beta[j])
                for j in self.support
            },
            "group_outcome_mean": self.group_outcome_mean,
            "n_group": self.n_group,
            "df": self.df,
            "kkt_residual": self.kkt_residual,
        }
        if self.refit_fallback:
            result["refit_fallback"] = True
        return result


@dataclass(frozen=True, eq=False)
class LambdaGrid:
    """Strictly decreasing positive penalty values, largest first"""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float, copy=True).ravel()
        if values.size < 1:
            raise ValidationError("Lambda grid must contain at least one value")
        if not np.all(np.isfinite(values)) or np.any(values <= 0):
            raise ValidationError("Lambda grid values must be positive and finite")
        if values.size > 1 and np.any(np.diff(values) >= 0):
            raise ValidationError("Lambda grid must be strictly decreasing")
        object.__setattr__(self, "values", _readonly(values))

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def lambda_max(self) -> float:
        return float(self.values[0])

    @classmethod
    def pinned(cls, values: Sequence[float]) -> "LambdaGrid":
        """Grid from user-supplied values, sorted largest first"""
        return cls(np.unique(np.asarray(values, dtype=float))[::-1])


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z) * max(|z| - gamma, 0)"""
    if gamma < 0:
        raise ValidationError("Threshold must be non-negative")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _check_inputs(X: Any, y: Any) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise ValidationError("Outcome must be a vector")
    if X.ndim == 1 and X.size == 0:
        X = X.reshape(y.shape[0], 0)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError("Covariate rows must match outcome length")
    if y.shape[0] < 2:
        raise ValidationError("At least 2 observations are required")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValidationError("Inputs contain non-finite values")
    return X, y


class CenteredProblem:
    """
    Group-centered Lasso problem prepared once for repeated solves

    Holds the centered data, per-column scales and the Gram matrix of the
    scaled non-constant columns. Constant columns keep a zero coefficient.
    """

    def __init__(self, X: Any, y: Any) -> None:
        X, y = _check_inputs(X, y)
        self.n, self.p = X.shape
        self.x_mean = X.mean(axis=0)
        self.y_mean = float(y.mean())
        self.Xc = X - self.x_mean
        self.yc = y - self.y_mean
        self.scale = self.Xc.std(axis=0)
        usable = np.ptp(X, axis=0) > 0 if self.p else np.zeros(0, dtype=bool)
        self.columns = np.flatnonzero(usable)
        scaled = self.Xc[:, self.columns] / self.scale[self.columns]
        self.scaled = scaled
        self.gram = scaled.T @ scaled / self.n
        self.gram_diag = np.diag(self.gram).copy()
        self.corr = scaled.T @ self.yc / self.n
        raw_corr = np.abs(self.corr * self.scale[self.columns])
        self.lambda_max = float(raw_corr.max()) if raw_corr.size else 0.0
        self.y_constant = bool(np.ptp(y) == 0)

    def gradient(self, beta: np.ndarray) -> np.ndarray:
        """Centered gradient (1/n) Xc^T (yc - Xc beta)"""
        return self.Xc.T @ (self.yc - self.Xc @ beta) / self.n

    def kkt_residual(self, beta: np.ndarray, lam: float) -> float:
        if self.p == 0:
            return 0.0
        g = self.gradient(beta)
        nonzero = beta != 0
        violation = np.where(
            nonzero,
            np.abs(g - lam * np.sign(beta)),
            np.maximum(np.abs(g) - lam, 0.0),
        )
        return float(violation.max())

    def objective(self, beta: np.ndarray, lam: float) -> float:
        residual = self.yc - self.Xc @ beta
        return float(
            residual @ residual / (2 * self.n) + lam * np.sum(np.abs(beta))
        )

    def _beta_from_scaled(self, gamma: np.ndarray) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[self.columns] = gamma / self.scale[self.columns]
        return beta

    def _make_fit(
        self, beta: np.ndarray, lam: float, kkt: float, sweeps: int
    ) -> AdjustmentFit:
        support = tuple(int(j) for j in np.flatnonzero(beta))
        return AdjustmentFit(
            beta=_readonly(beta),
            support=support,
            lambda_value=float(lam),
            group_outcome_mean=self.y_mean,
            group_covariate_mean=_readonly(self.x_mean.copy()),
            n_group=self.n,
            df=len(support) + 1,
            method="lasso",
            kkt_residual=kkt,
            sweeps=sweeps,
        )

    def _polish(
        self, gamma: np.ndarray, grad: np.ndarray, weights: np.ndarray
    ) -> bool:
        """
        Try the exact solution for the current sign pattern

        Solves gram_SS x = corr_S - weights_S * sign_S on the working set and
        accepts it only if the signs reproduce and every other coordinate
        satisfies its KKT bound. gamma and grad are updated in place.
        """
        working = np.flatnonzero((gamma != 0) | (np.abs(grad) > weights))
        if working.size == 0 or working.size >= self.n:
            return False
        signs = np.where(
            gamma[working] != 0, np.sign(gamma[working]), np.sign(grad[working])
        )
        try:
            factor = linalg.cho_factor(self.gram[np.ix_(working, working)])
        except linalg.LinAlgError:
            return False
        for _ in range(3):
            x = linalg.cho_solve(factor, self.corr[working] - weights[working] * signs)
            if not np.all(np.isfinite(x)) or np.any(x == 0):
                return False
            flipped = np.sign(x)
            if np.array_equal(flipped, signs):
                break
            signs = flipped
        else:
            return False

        trial_grad = self.corr - self.gram[:, working] @ x
        inactive = np.ones(gamma.size, dtype=bool)
        inactive[working] = False
        if np.any(np.abs(trial_grad[inactive]) > weights[inactive]):
            return False
        gamma[:] = 0.0
        gamma[working] = x
        grad[:] = trial_grad
        return True

    def solve(
        self,
        lam: float,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        kkt_tol: float = DEFAULT_KKT_TOL,
        warm_start: Optional[np.ndarray] = None,
        trace: Optional[List[float]] = None,
    ) -> AdjustmentFit:
        """
        Minimize the group-centered objective at one lambda

        Cyclic coordinate descent with covariance updates: a full sweep,
        then sweeps over the active set until it settles, repeated until the
        largest coefficient change falls below tol and the KKT residual is
        within kkt_tol. While the active set is being swept, the exact
        solution for its sign pattern is tried after 1, 2, 4, ... sweeps so
        ill-conditioned designs with p close to n finish quickly.

        Raises:
            ConvergenceError: After max_iter sweeps without convergence
        """
        if lam <= 0:
            raise ValidationError("Lambda must be positive")
        if lam >= self.lambda_max or self.columns.size == 0:
            beta = np.zeros(self.p)
            if trace is not None:
                trace.append(self.objective(beta, lam))
            return self._make_fit(beta, lam, self.kkt_residual(beta, lam), 0)

        size = self.columns.size
        if warm_start is not None:
            gamma = np.asarray(warm_start, dtype=float)[self.columns] * (
                self.scale[self.columns]
            )
        else:
            gamma = np.zeros(size)
        grad = np.empty(size)
        weights = lam / self.scale[self.columns]
        gram = self.gram
        diag = self.gram_diag

        def sweep(coords: Any) -> float:
            max_delta = 0.0
            for j in coords:
                old = gamma[j]
                new = soft_threshold(grad[j] + diag[j] * old, weights[j]) / diag[j]
                if new != old:
                    delta = new - old
                    np.subtract(grad, gram[:, j] * delta, out=grad)
                    gamma[j] = new
                    if abs(delta) > max_delta:
                        max_delta = abs(delta)
            return max_delta

        def record() -> None:
            if trace is not None:
                trace.append(self.objective(self._beta_from_scaled(gamma), lam))

        sweeps = 0
        kkt = float("inf")
        full = range(size)
        while sweeps < max_iter:
            # exact gradient at the start of every pass
            grad[:] = self.corr - gram @ gamma
            delta = sweep(full)
            sweeps += 1
            record()
            if delta < tol:
                kkt = self.kkt_residual(self._beta_from_scaled(gamma), lam)
                if kkt <= kkt_tol:
                    return self._make_fit(
                        self._beta_from_scaled(gamma), lam, kkt, sweeps
                    )
            active = np.flatnonzero(gamma)
            inner = 0
            while sweeps < max_iter:
                delta = sweep(active)
                sweeps += 1
                inner += 1
                record()
                if delta < tol:
                    break
                if inner & (inner - 1) == 0 and self._polish(gamma, grad, weights):
                    break

        beta = self._beta_from_scaled(gamma)
        kkt = self.kkt_residual(beta, lam)
        raise ConvergenceError(
            f"Coordinate descent did not converge in {max_iter} sweeps "
            f"at lambda={lam:.6g} (KKT residual {kkt:.3g})",
            beta=beta,
            kkt_residual=kkt,
        )

    def path(
        self,
        grid: LambdaGrid,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        kkt_tol: float = DEFAULT_KKT_TOL,
    ) -> List[AdjustmentFit]:
        """Fits along a decreasing grid with warm starts"""
        fits: List[AdjustmentFit] = []
        warm: Optional[np.ndarray] = None
        for index, lam in enumerate(grid.values):
            try:
                fit = self.solve(
                    float(lam), tol, max_iter, kkt_tol, warm_start=warm
                )
            except ConvergenceError as e:
                raise e.with_grid_index(index) from e
            fits.append(fit)
            warm = np.asarray(fit.beta)
        return fits


def fit_lasso(
    X: Any,
    y: Any,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    kkt_tol: float = DEFAULT_KKT_TOL,
    trace: Optional[List[float]] = None,
) -> AdjustmentFit:
    """
    Fit the group-centered Lasso at a single lambda

    Args:
        X: Group covariates (n_g x p)
        y: Group outcomes (n_g)
        lam: Penalty, must be positive
        tol: Max coordinate change per sweep at convergence
        max_iter: Sweep budget
        kkt_tol: Required KKT residual at convergence
        trace: Optional list receiving the objective after each sweep

    Returns:
        AdjustmentFit with group means stored for prediction
    """
    return CenteredProblem(X, y).solve(lam, tol, max_iter, kkt_tol, trace=trace)


def lasso_path(
    X: Any,
    y: Any,
    grid: LambdaGrid,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    kkt_tol: float = DEFAULT_KKT_TOL,
) -> List[AdjustmentFit]:
    """One fit per grid value, computed largest lambda first with warm starts"""
    return CenteredProblem(X, y).path(grid, tol, max_iter, kkt_tol)


def lambda_grid(
    X: Any, y: Any, n_lambda: int = 100, ratio: Optional[float] = None
) -> LambdaGrid:
    """
    Log-spaced grid from lambda_max down to ratio * lambda_max

    Args:
        X: Group covariates
        y: Group outcomes
        n_lambda: Number of grid values (J >= 2)
        ratio: Smallest / largest value; defaults to 1e-3 when p >= n_g,
            otherwise 1e-4

    Raises:
        DegenerateGridError: If lambda_max is zero
    """
    if n_lambda < 2:
        raise ValidationError("Lambda grid needs at least 2 values")
    problem = CenteredProblem(X, y)
    if ratio is None:
        ratio = 1e-3 if problem.p >= problem.n else 1e-4
    if not 0 < ratio < 1:
        raise ValidationError("Lambda ratio must be in (0, 1)")
    if problem.y_constant or problem.lambda_max <= 0:
        raise DegenerateGridError(
            "lambda_max is zero: the outcome is constant within the group "
            "or every covariate is constant"
        )
    return LambdaGrid(
        np.geomspace(problem.lambda_max, ratio * problem.lambda_max, n_lambda)
    )


def fit_ols(X: Any, y: Any, support: Optional[Sequence[int]] = None) -> AdjustmentFit:
    """
    Unpenalized group-centered least squares, optionally restricted

    Coefficients outside the support are exactly zero and lambda is 0.

    Raises:
        RefitError: If the support is at least as large as the group
        RankDeficiencyError: If the restricted design is rank deficient
    """
    X, y = _check_inputs(X, y)
    n, p = X.shape
    if support is None:
        columns = np.arange(p)
    else:
        columns = np.unique(np.asarray(list(support), dtype=int))
        if columns.size and (columns.min() < 0 or columns.max() >= p):
            raise ValidationError("Support indices out of range")
    if columns.size >= n:
        raise RefitError(
            f"Refit on {columns.size} covariates is ill-posed with {n} observations"
        )

    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    beta = np.zeros(p)
    if columns.size:
        design = X[:, columns] - x_mean[columns]
        _, r, pivots = linalg.qr(design, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        threshold = (diag[0] if diag.size else 0.0) * max(n, columns.size) * (
            np.finfo(float).eps
        )
        rank = int(np.sum(diag > threshold))
        if rank < columns.size:
            dependent = sorted(int(columns[k]) for k in pivots[rank:])
            raise RankDeficiencyError(
                f"Restricted design is rank deficient; dependent columns {dependent}",
                dependent_columns=dependent,
            )
        coef, *_ = np.linalg.lstsq(design, y - y_mean, rcond=None)
        beta[columns] = coef

    return AdjustmentFit(
        beta=_readonly(beta),
        support=tuple(int(j) for j in np.flatnonzero(beta)),
        lambda_value=0.0,
        group_outcome_mean=y_mean,
        group_covariate_mean=_readonly(x_mean),
        n_group=n,
        df=int(columns.size) + 1,
        method="ols",
    )


def kkt_check(fit: AdjustmentFit, X: Any, y: Any, lam: float) -> float:
    """
    Largest KKT violation of a fit for the group-centered objective

    For j in the support |g_j - lam * sign(beta_j)|, otherwise
    max(|g_j| - lam, 0), with g the centered gradient.
    """
    X, y = _check_inputs(X, y)
    if fit.beta.shape != (X.shape[1],):
        raise ValidationError("Fit dimension does not match covariates")
    return CenteredProblem(X, y).kkt_residual(np.asarray(fit.beta), lam)


def null_fit(X: Any, y: Any) -> AdjustmentFit:
    """Intercept-only adjustment (all coefficients zero)"""
    X, y = _check_inputs(X, y)
    return fit_ols(X, y, support=())
