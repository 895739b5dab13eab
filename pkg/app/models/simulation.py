"""
Finite-population Monte Carlo engine

Generates a nonlinear potential-outcome population once, then replays
completely randomized experiments on it, runs the requested estimators
and aggregates bias / SD / RMSE / coverage / interval length / selection
statistics with bootstrap standard errors. Also hosts the exact
enumeration oracle and the sampling-without-replacement tail check.
"""

import dataclasses
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import linalg

from app.models import rng
from app.models.ate_estimators import (
    METHODS,
    AteEstimator,
    AteReport,
    TuningConfig,
    ate_unadjusted,
    normal_quantile,
)
from app.models.errors import (
    EnumerationLimitError,
    EstimationError,
    OlsNotApplicableError,
    SimulationError,
)
from app.models.population import ExperimentSample, Population
from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)

ERROR_FAMILIES = ("gaussian", "t1", "t3")
COVARIATE_FAMILIES = ("gaussian", "t3")
ENUMERATION_LIMIT = 1_000_000

# stream keys under the master seed
_POPULATION_KEY = 0
_REPLICATION_KEY = 1
_BOOTSTRAP_KEY = 2


@dataclass(frozen=True)
class SimulationConfig:
    """Population design plus Monte Carlo settings"""

    n: int = 250
    p: int = 50
    s: int = 10
    rho: float = 0.0
    n_A: int = 125
    replications: int = 2000
    seed: int = 0
    linear_only: bool = False
    hidden_covariates: bool = True
    error_family: str = "gaussian"
    covariate_family: str = "gaussian"
    noise_scale: float = 1.0
    methods: Tuple[str, ...] = METHODS
    ci_level: float = 0.95
    folds: int = 10
    n_lambda: int = 100
    bootstrap_resamples: int = 500
    max_workers: int = 1
    strict: bool = False
    name: Optional[str] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.n < 2:
            raise ValidationError("Population size n must be at least 2")
        if self.p < 0 or not 0 <= self.s <= self.p:
            raise ValidationError("Sparsity must satisfy 0 <= s <= p")
        if not 0.0 <= self.rho < 1.0:
            raise ValidationError("rho must be in [0, 1)")
        if not 1 <= self.n_A <= self.n - 1:
            raise ValidationError(f"n_A must be between 1 and {self.n - 1}")
        if self.replications < 1:
            raise ValidationError("At least one replication is required")
        if self.seed < 0:
            raise ValidationError("Seed must be non-negative")
        if self.error_family not in ERROR_FAMILIES:
            raise ValidationError(
                f"error_family must be one of {', '.join(ERROR_FAMILIES)}"
            )
        if self.covariate_family not in COVARIATE_FAMILIES:
            raise ValidationError(
                f"covariate_family must be one of {', '.join(COVARIATE_FAMILIES)}"
            )
        if self.noise_scale < 0:
            raise ValidationError("noise_scale must be non-negative")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ValidationError(
                f"methods must be a non-empty subset of {', '.join(METHODS)}"
            )
        if not 0 < self.ci_level < 1:
            raise ValidationError("ci_level must be in (0, 1)")
        if self.folds < 2:
            raise ValidationError("At least 2 folds are required")
        if self.n_lambda < 2:
            raise ValidationError("n_lambda must be at least 2")
        if self.bootstrap_resamples < 1:
            raise ValidationError("bootstrap_resamples must be at least 1")
        if self.max_workers < 1:
            raise ValidationError("max_workers must be at least 1")

    @property
    def n_B(self) -> int:
        return self.n - self.n_A

    def tuning(self, seed: int) -> TuningConfig:
        return TuningConfig(folds=self.folds, seed=seed, n_lambda=self.n_lambda)

    def to_dict(self) -> Dict[str, Any]:
        result = dataclasses.asdict(self)
        result["methods"] = list(self.methods)
        return result


def toeplitz_covariance(p: int, rho: float) -> np.ndarray:
    """Sigma_ij = rho^|i-j|"""
    if p == 0:
        return np.zeros((0, 0))
    return linalg.toeplitz(rho ** np.arange(p, dtype=float))


def complete_randomization(n: int, n_A: int, seed: int) -> np.ndarray:
    """
    0/1 assignment with exactly n_A ones, uniform over all size-n_A subsets

    Raises:
        ValidationError: Unless 1 <= n_A <= n - 1
    """
    if n < 2 or not 1 <= n_A <= n - 1:
        raise ValidationError(f"n_A must be between 1 and n - 1 (n={n}, n_A={n_A})")
    assignment = np.zeros(n, dtype=int)
    assignment[rng.random_subset(rng.stream(seed), n, n_A)] = 1
    return assignment


def _correlated(
    generator: np.random.Generator, family: str, n: int, factor: np.ndarray
) -> np.ndarray:
    p = factor.shape[0]
    base = rng.draw_family(generator, family, (n, p))
    return base @ factor.T


def generate_population(config: SimulationConfig) -> Population:
    """
    Draw the nonlinear potential-outcome population

    a_i = x_i^T beta_a1 + exp(x_i^T beta_a2) + eps_a_i on the first s
    covariates (control analogue with beta_b1 = beta_a1 + t3 and
    beta_b2 = beta_a2 + 0.1 t3), with errors built from hidden covariates
    Z ~ N(0, Sigma) through beta_a1 / beta_b1 plus independent noise.
    Each component comes from its own stream so that switching one option
    leaves the other draws unchanged.
    """
    n, p, s = config.n, config.p, config.s
    seed = config.seed
    sigma = toeplitz_covariance(p, config.rho)
    factor = linalg.cholesky(sigma, lower=True) if p else np.zeros((0, 0))

    def component(key: int) -> np.random.Generator:
        return rng.stream(seed, _POPULATION_KEY, key)

    X = _correlated(component(0), config.covariate_family, n, factor)
    t3 = rng.student_t(component(1), 3.0, (4, s))
    beta_a1 = t3[0]
    beta_a2 = 0.1 * t3[1]
    beta_b1 = beta_a1 + t3[2]
    beta_b2 = beta_a2 + 0.1 * t3[3]

    noise_a = config.noise_scale * rng.draw_family(
        component(2), config.error_family, n
    )
    noise_b = config.noise_scale * rng.draw_family(
        component(3), config.error_family, n
    )
    if config.hidden_covariates:
        Z = _correlated(component(4), "gaussian", n, factor)
        eps_a = Z[:, :s] @ beta_a1 + noise_a
        eps_b = Z[:, :s] @ beta_b1 + noise_b
    else:
        eps_a, eps_b = noise_a, noise_b

    active = X[:, :s]
    outcomes_treated = active @ beta_a1 + eps_a
    outcomes_control = active @ beta_b1 + eps_b
    if not config.linear_only:
        outcomes_treated = outcomes_treated + np.exp(active @ beta_a2)
        outcomes_control = outcomes_control + np.exp(active @ beta_b2)

    coefficients = {
        "beta_a1": beta_a1.tolist(),
        "beta_b1": beta_b1.tolist(),
    }
    if not config.linear_only:
        coefficients["beta_a2"] = beta_a2.tolist()
        coefficients["beta_b2"] = beta_b2.tolist()
    population = Population(
        covariates=X,
        outcomes_treated=outcomes_treated,
        outcomes_control=outcomes_control,
        metadata={"config": config.to_dict(), "coefficients": coefficients},
    )
    logger.info(
        "Generated population",
        extra={"n": n, "p": p, "s": s, "true_ate": population.true_ate},
    )
    return population


@dataclass(frozen=True, eq=False)
class ReplicationOutcome:
    index: int
    seed: int
    reports: Tuple[AteReport, ...]
    failures: Dict[str, str]


def _method_groups(methods: Sequence[str]) -> List[Tuple[str, ...]]:
    groups: List[Tuple[str, ...]] = [(m,) for m in methods if m in ("unadjusted", "ols")]
    lasso = tuple(m for m in methods if m in ("cv_lasso", "cv_lasso_ols"))
    if lasso:
        groups.append(lasso)
    return groups


def run_replication(
    population: Population, config: SimulationConfig, index: int
) -> ReplicationOutcome:
    """
    One completely randomized experiment on the population

    Estimator failures are caught per method family and recorded; with
    config.strict they raise SimulationError instead.
    """
    seed = rng.derive_seed(config.seed, _REPLICATION_KEY, index)
    assignment = complete_randomization(config.n, config.n_A, seed)
    sample = population.reveal(assignment)
    estimator = AteEstimator(config.tuning(seed), config.ci_level)
    by_method: Dict[str, AteReport] = {}
    failures: Dict[str, str] = {}
    for group in _method_groups(config.methods):
        try:
            for report in estimator.estimate(sample, group):
                by_method[report.method] = report
        except EstimationError as e:
            if config.strict:
                raise SimulationError(
                    f"Replication {index} failed for {', '.join(group)}: {e}"
                ) from e
            logger.warning(
                "Replication %d failed for %s: %s",
                index,
                ", ".join(group),
                e,
                extra={"replication": index, "error_type": type(e).__name__},
            )
            for method in group:
                failures[method] = f"{type(e).__name__}: {e}"
    reports = tuple(by_method[m] for m in config.methods if m in by_method)
    return ReplicationOutcome(index, seed, reports, failures)


@dataclass(frozen=True)
class MethodSummary:
    """Aggregates for one estimator across replications"""

    method: str
    replications: int
    failures: int
    bias: Optional[float] = None
    sd: Optional[float] = None
    rmse: Optional[float] = None
    coverage: Optional[float] = None
    mean_ci_length: Optional[float] = None
    mean_selected_treated: Optional[float] = None
    mean_selected_control: Optional[float] = None
    mean_standard_error: Optional[float] = None
    se_to_sd_ratio: Optional[float] = None
    bootstrap_se: Dict[str, float] = field(default_factory=dict)
    selection_frequency_treated: Optional[List[float]] = None
    selection_frequency_control: Optional[List[float]] = None

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


_RECORD_COLUMNS = [
    "replication",
    "seed",
    "method",
    "estimate",
    "sigma2_hat",
    "ci_low",
    "ci_high",
    "covered",
    "selected_treated",
    "selected_control",
]


@dataclass(frozen=True, eq=False)
class MonteCarloSummary:
    """Per-method aggregates plus the per-replication records"""

    config: SimulationConfig
    true_ate: float
    methods: Dict[str, MethodSummary]
    records: pd.DataFrame
    failures: int
    failure_messages: Tuple[str, ...] = ()

    def method(self, name: str) -> MethodSummary:
        return self.methods[name]

    def coverage_at(self, method: str, level: float) -> float:
        """Recompute CI coverage for a method at another confidence level"""
        rows = self.records[self.records["method"] == method]
        if rows.empty:
            raise SimulationError(f"No successful replications for {method}")
        half = normal_quantile(level) * np.sqrt(
            rows["sigma2_hat"].to_numpy() / self.config.n
        )
        estimates = rows["estimate"].to_numpy()
        covered = (estimates - half <= self.true_ate) & (
            self.true_ate <= estimates + half
        )
        return float(np.mean(covered))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "true_ate": self.true_ate,
            "failures": self.failures,
            "methods": {name: s.to_dict() for name, s in self.methods.items()},
        }


def _records(
    outcomes: Sequence[ReplicationOutcome], true_ate: float
) -> pd.DataFrame:
    rows = []
    for outcome in outcomes:
        for report in outcome.reports:
            rows.append(
                {
                    "replication": outcome.index,
                    "seed": outcome.seed,
                    "method": report.method,
                    "estimate": report.estimate,
                    "sigma2_hat": report.sigma2_hat,
                    "ci_low": report.ci[0],
                    "ci_high": report.ci[1],
                    "covered": report.covers(true_ate),
                    "selected_treated": report.selected_treated,
                    "selected_control": report.selected_control,
                }
            )
    return pd.DataFrame(rows, columns=_RECORD_COLUMNS)


def _selection_frequency(
    reports: Sequence[AteReport], names: Sequence[str], treated: bool
) -> Optional[List[float]]:
    chosen = [
        r.selected_treated_names if treated else r.selected_control_names
        for r in reports
    ]
    if not reports or chosen[0] is None:
        return None
    position = {name: j for j, name in enumerate(names)}
    counts = np.zeros(len(names))
    for selected in chosen:
        for name in selected or ():
            counts[position[name]] += 1
    return (counts / len(reports)).tolist()


def _bootstrap_se(
    estimates: np.ndarray,
    covered: np.ndarray,
    lengths: np.ndarray,
    true_ate: float,
    resamples: int,
    seed: int,
    method_index: int,
) -> Dict[str, float]:
    generator = rng.stream(seed, _BOOTSTRAP_KEY, method_index)
    idx = rng.bootstrap_indices(generator, estimates.shape[0], resamples)
    draws = estimates[idx]
    errors = draws - true_ate
    statistics = {
        "bias": errors.mean(axis=1),
        "sd": draws.std(axis=1),
        "rmse": np.sqrt(np.mean(errors * errors, axis=1)),
        "coverage": covered[idx].mean(axis=1),
        "mean_ci_length": lengths[idx].mean(axis=1),
    }
    ddof = 1 if resamples > 1 else 0
    return {name: float(np.std(values, ddof=ddof)) for name, values in statistics.items()}


def summarize(
    outcomes: Sequence[ReplicationOutcome],
    config: SimulationConfig,
    true_ate: float,
    covariate_names: Sequence[str],
) -> MonteCarloSummary:
    """Aggregate replication outcomes in replication order"""
    records = _records(outcomes, true_ate)
    methods: Dict[str, MethodSummary] = {}
    total_failures = 0
    messages: List[str] = []
    for method_index, method in enumerate(config.methods):
        reports = [
            r for outcome in outcomes for r in outcome.reports if r.method == method
        ]
        failures = sum(1 for outcome in outcomes if method in outcome.failures)
        total_failures += failures
        messages.extend(
            f"replication {o.index} {method}: {o.failures[method]}"
            for o in outcomes
            if method in o.failures
        )
        if not reports:
            methods[method] = MethodSummary(method, 0, failures)
            continue

        estimates = np.array([r.estimate for r in reports])
        covered = np.array([r.covers(true_ate) for r in reports], dtype=float)
        lengths = np.array([r.ci_length for r in reports])
        standard_errors = np.array([r.standard_error for r in reports])
        errors = estimates - true_ate
        sd = float(np.std(estimates))
        mean_se = float(standard_errors.mean())

        def mean_of(values: List[Optional[int]]) -> Optional[float]:
            return None if values[0] is None else float(np.mean(values))

        methods[method] = MethodSummary(
            method=method,
            replications=len(reports),
            failures=failures,
            bias=float(errors.mean()),
            sd=sd,
            rmse=float(np.sqrt(np.mean(errors * errors))),
            coverage=float(covered.mean()),
            mean_ci_length=float(lengths.mean()),
            mean_selected_treated=mean_of([r.selected_treated for r in reports]),
            mean_selected_control=mean_of([r.selected_control for r in reports]),
            mean_standard_error=mean_se,
            se_to_sd_ratio=mean_se / sd if sd > 0 else None,
            bootstrap_se=_bootstrap_se(
                estimates,
                covered,
                lengths,
                true_ate,
                config.bootstrap_resamples,
                config.seed,
                method_index,
            ),
            selection_frequency_treated=_selection_frequency(
                reports, covariate_names, True
            ),
            selection_frequency_control=_selection_frequency(
                reports, covariate_names, False
            ),
        )
    return MonteCarloSummary(
        config=config,
        true_ate=true_ate,
        methods=methods,
        records=records,
        failures=total_failures,
        failure_messages=tuple(messages),
    )


def run_monte_carlo(
    population: Population,
    config: SimulationConfig,
    progress: Optional[Callable[[int], None]] = None,
) -> MonteCarloSummary:
    """
    Replay config.replications randomized experiments on a fixed population

    Replication r uses a seed derived from (config.seed, r), so it can be
    rerun in isolation. Replications may run on config.max_workers threads;
    aggregation is always in replication order.

    Raises:
        ValidationError: If the population does not match the config
        OlsNotApplicableError: If OLS is requested with p >= min(n_A, n_B)
        SimulationError: In strict mode, on the first estimator failure
    """
    if population.n != config.n or population.p != config.p:
        raise ValidationError(
            f"Population is {population.n}x{population.p}, "
            f"config expects {config.n}x{config.p}"
        )
    if "ols" in config.methods and config.p >= min(config.n_A, config.n_B):
        raise OlsNotApplicableError(
            f"OLS adjustment needs p < min(n_A, n_B); got p={config.p}, "
            f"n_A={config.n_A}, n_B={config.n_B}. Drop 'ols' from methods"
        )

    logger.info(
        "Starting Monte Carlo run",
        extra={
            "replications": config.replications,
            "methods": list(config.methods),
            "workers": config.max_workers,
        },
    )

    def task(index: int) -> ReplicationOutcome:
        outcome = run_replication(population, config, index)
        if progress is not None:
            progress(index)
        return outcome

    indices = range(config.replications)
    if config.max_workers > 1:
        with ThreadPoolExecutor(max_workers=config.max_workers) as executor:
            outcomes = list(executor.map(task, indices))
    else:
        outcomes = [task(index) for index in indices]

    names = tuple(f"x{j + 1}" for j in range(population.p))
    summary = summarize(outcomes, config, population.true_ate, names)
    logger.info(
        "Finished Monte Carlo run",
        extra={"replications": config.replications, "failures": summary.failures},
    )
    return summary


@dataclass(frozen=True, eq=False)
class EnumerationResult:
    """Exact randomization distribution of one estimator"""

    assignments: int
    estimates: np.ndarray
    sigma2_hats: np.ndarray
    mean: float
    variance: float
    coverage: float
    mean_variance_estimate: float
    true_ate: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "assignments": self.assignments,
            "mean": self.mean,
            "variance": self.variance,
            "coverage": self.coverage,
            "mean_variance_estimate": self.mean_variance_estimate,
            "true_ate": self.true_ate,
        }


def _check_enumerable(n: int, n_A: int, limit: int) -> int:
    if not 1 <= n_A <= n - 1:
        raise ValidationError(f"n_A must be between 1 and {n - 1}")
    count = math.comb(n, n_A)
    if count > limit:
        raise EnumerationLimitError(
            f"C({n}, {n_A}) = {count} assignments exceeds the limit of {limit}"
        )
    return count


def enumerate_assignments(
    population: Population,
    n_A: int,
    estimator: Callable[[ExperimentSample], AteReport] = ate_unadjusted,
    limit: int = ENUMERATION_LIMIT,
) -> EnumerationResult:
    """
    Evaluate an estimator on every size-n_A assignment

    Returns the exact mean and variance of the estimate, the exact coverage
    of its confidence interval and the mean of sigma2_hat / n.

    Raises:
        EnumerationLimitError: If C(n, n_A) exceeds limit
    """
    n = population.n
    count = _check_enumerable(n, n_A, limit)
    estimates = np.empty(count)
    sigma2_hats = np.empty(count)
    covered = np.empty(count, dtype=bool)
    for k, treated in enumerate(combinations(range(n), n_A)):
        assignment = np.zeros(n, dtype=int)
        assignment[list(treated)] = 1
        report = estimator(population.reveal(assignment))
        estimates[k] = report.estimate
        sigma2_hats[k] = report.sigma2_hat
        covered[k] = report.covers(population.true_ate)
    return EnumerationResult(
        assignments=count,
        estimates=estimates,
        sigma2_hats=sigma2_hats,
        mean=float(estimates.mean()),
        variance=float(np.var(estimates)),
        coverage=float(covered.mean()),
        mean_variance_estimate=float(np.mean(sigma2_hats / n)),
        true_ate=population.true_ate,
    )


def neyman_exact_variance(population: Population, n_A: int) -> float:
    """
    Exact randomization variance of the difference in means

    S_a^2 / n_A + S_b^2 / n_B - S_tau^2 / n with (n - 1)-denominator
    population variances of a, b and the unit effects.
    """
    n = population.n
    if not 1 <= n_A <= n - 1:
        raise ValidationError(f"n_A must be between 1 and {n - 1}")
    s_a = np.var(population.outcomes_treated, ddof=1)
    s_b = np.var(population.outcomes_control, ddof=1)
    s_tau = np.var(population.unit_effects, ddof=1)
    return float(s_a / n_A + s_b / (n - n_A) - s_tau / n)


def concentration_tau(p_A: float) -> float:
    return min(1 / 70, (3 * p_A) ** 2 / 70, (3 - 3 * p_A) ** 2 / 70)


def _tail_bound(t: float, p_A: float, n_A: int, sigma2: float, factor: float) -> float:
    if t == 0:
        return 1.0
    if sigma2 == 0:
        return 0.0
    return float(np.exp(-p_A * n_A * t * t / (factor * sigma2)))


@dataclass(frozen=True, eq=False)
class ConcentrationCheck:
    """Empirical tails of the sample mean against the Massart-type bounds"""

    table: pd.DataFrame
    n: int
    n_A: int
    p_A: float
    tau: float
    sigma2: float
    exact: bool
    draws: int

    @property
    def violations(self) -> int:
        return int(self.table["violation"].sum())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "n_A": self.n_A,
            "p_A": self.p_A,
            "tau": self.tau,
            "sigma2": self.sigma2,
            "exact": self.exact,
            "draws": self.draws,
            "violations": self.violations,
            "table": self.table.to_dict(orient="records"),
        }


def _subset_means(
    z: np.ndarray, n_A: int, trials: int, seed: int, exact_limit: int
) -> Tuple[np.ndarray, bool]:
    n = z.shape[0]
    if math.comb(n, n_A) <= exact_limit:
        means = np.fromiter(
            (z[list(subset)].mean() for subset in combinations(range(n), n_A)),
            dtype=float,
        )
        return means, True
    generator = rng.stream(seed)
    chunk = max(1, min(trials, 2_000_000 // max(n, 1)))
    means: List[np.ndarray] = []
    remaining = trials
    while remaining > 0:
        size = min(chunk, remaining)
        rows = rng.subset_rows(generator, n, n_A, size)
        means.append(z[rows].mean(axis=1))
        remaining -= size
    return np.concatenate(means), False


def concentration_bound_check(
    z: Any,
    n_A: int,
    t_grid: Sequence[float],
    trials: int = 100_000,
    seed: int = 0,
    exact_limit: int = 200_000,
) -> ConcentrationCheck:
    """
    Compare P(zbar_A - zbar >= t) with exp(-p_A n_A t^2 / ((1 + tau)^2 sigma^2))

    The tail is computed exactly by enumeration when C(n, n_A) <= exact_limit
    and by Monte Carlo otherwise. Massart's original bound (without the
    (1 + tau)^2 factor) is reported beside it; only the extended bound is
    checked for violations.
    """
    z = np.asarray(z, dtype=float).ravel()
    n = z.shape[0]
    if n < 2:
        raise ValidationError("Population needs at least 2 values")
    if not 1 <= n_A <= n - 1:
        raise ValidationError(f"n_A must be between 1 and {n - 1}")
    if not np.all(np.isfinite(z)):
        raise ValidationError("Population values must be finite")
    t_values = np.asarray(list(t_grid), dtype=float)
    if t_values.size == 0 or np.any(t_values < 0):
        raise ValidationError("t_grid must contain non-negative values")
    if trials < 1:
        raise ValidationError("trials must be positive")

    p_A = n_A / n
    tau = concentration_tau(p_A)
    sigma2 = float(np.mean((z - z.mean()) ** 2))
    means, exact = _subset_means(z, n_A, trials, seed, exact_limit)
    deviations = means - z.mean()
    slack = 1e-12 * max(1.0, float(np.max(np.abs(z))))

    rows = []
    for t in t_values:
        if sigma2 == 0 and t > 0:
            empirical = 0.0
        else:
            empirical = float(np.mean(deviations >= t - slack))
        bound = _tail_bound(float(t), p_A, n_A, sigma2, (1 + tau) ** 2)
        rows.append(
            {
                "t": float(t),
                "empirical_tail": empirical,
                "bound": bound,
                "massart_bound": _tail_bound(float(t), p_A, n_A, sigma2, 1.0),
                "violation": empirical > bound,
            }
        )
    table = pd.DataFrame(rows)
    check = ConcentrationCheck(
        table=table,
        n=n,
        n_A=n_A,
        p_A=p_A,
        tau=tau,
        sigma2=sigma2,
        exact=exact,
        draws=int(means.shape[0]),
    )
    if check.violations:
        logger.error(
            "Concentration bound violated",
            extra={"n": n, "n_A": n_A, "violations": check.violations},
        )
    return check
