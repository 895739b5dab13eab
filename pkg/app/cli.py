"""
Command-line interface: lasso-ate estimate | simulate | diagnose | featurize

Results are JSON on stdout (or --out-json); logs go to stderr.
Exit codes: 0 success, 2 invalid input, 3 estimation failure.
"""

import functools
import logging
import sys
from typing import Any, Callable, Dict, Optional, Tuple

import click

from app import __version__
from app.config import Config, env_threads
from app.models.ate_estimators import METHODS
from app.models.errors import EstimationError
from app.services.estimation_service import get_estimation_service
from app.services.logging_service import configure_logging
from app.utils.data_io import (
    frame_to_csv,
    load_experiment,
    load_meta,
    read_config_file,
    read_csv,
    write_design_matrix,
    write_json,
    write_text,
)
from app.utils.report_tables import diagnostics_table, estimate_table, simulation_table
from app.utils.run_manifest import RunManifest
from app.utils.validation import ValidationError

logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 2
EXIT_ESTIMATION_ERROR = 3

_FILE = click.Path(exists=True, dir_okay=False)


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """Translate the two error families into the documented exit codes"""

    @functools.wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            click.echo(f"Error: {e}", err=True)
            for field_name, messages in sorted(e.field_errors.items()):
                click.echo(f"  {field_name}: {messages}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        except EstimationError as e:
            click.echo(f"Estimation failed ({type(e).__name__}): {e}", err=True)
            sys.exit(EXIT_ESTIMATION_ERROR)

    return wrapper


def _emit(
    payload: Dict[str, Any], out_json: Optional[str], table: Optional[str]
) -> None:
    """JSON to --out-json, and to stdout unless a table takes its place"""
    if table is not None:
        write_text(table, None)
        if out_json:
            write_json(payload, out_json)
        return
    write_json(payload, out_json)


def _threads(threads: Optional[int]) -> int:
    return threads if threads is not None else env_threads()


@click.group(name="lasso-ate")
@click.version_option(__version__, prog_name="lasso-ate")
@click.option(
    "--log-level",
    default=None,
    help="Log level (default: LASSO_ATE_LOG_LEVEL or INFO)",
)
@click.option("--plain-logs", is_flag=True, help="Human-readable instead of JSON logs")
def cli(log_level: Optional[str], plain_logs: bool) -> None:
    """Lasso-adjusted average treatment effect estimation and simulation"""
    configure_logging(log_level or Config.LOG_LEVEL, structured=not plain_logs)


@cli.command()
@click.argument("data_csv", type=_FILE)
@click.argument("meta_json", type=_FILE)
@click.option(
    "--method",
    "methods",
    multiple=True,
    type=click.Choice(METHODS),
    help="Estimator to run; repeat for several (default: all applicable)",
)
@click.option("-k", "--folds", type=int, default=Config.CV_FOLDS, show_default=True)
@click.option("--ci-level", type=float, default=Config.CI_LEVEL, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--df-adjust/--no-df-adjust", default=True, show_default=True)
@click.option(
    "--n-lambda", type=int, default=Config.LAMBDA_GRID_SIZE, show_default=True
)
@click.option(
    "--lambda",
    "lambdas",
    multiple=True,
    type=float,
    help="Pin the penalty grid to these values (repeatable)",
)
@click.option("--emit-cv", is_flag=True, help="Include cross-validation curves")
@click.option("--table", is_flag=True, help="Print a text table instead of JSON")
@click.option("--out-json", type=click.Path(dir_okay=False), default=None)
@handle_errors
def estimate(
    data_csv: str,
    meta_json: str,
    methods: Tuple[str, ...],
    folds: int,
    ci_level: float,
    seed: int,
    df_adjust: bool,
    n_lambda: int,
    lambdas: Tuple[float, ...],
    emit_cv: bool,
    table: bool,
    out_json: Optional[str],
) -> None:
    """Estimate the ATE of an observed experiment"""
    options: Dict[str, Any] = {
        "folds": folds,
        "ci_level": ci_level,
        "seed": seed,
        "df_adjust": df_adjust,
        "n_lambda": n_lambda,
        "emit_cv": emit_cv,
    }
    if methods:
        options["methods"] = list(methods)
    if lambdas:
        options["lambdas"] = list(lambdas)

    manifest = RunManifest.start(
        "estimate", options, {"data": data_csv, "meta": meta_json}, seed
    )
    sample, _ = load_experiment(data_csv, meta_json)
    result = get_estimation_service().estimate(sample, options)
    payload = {"manifest": manifest.finish().to_dict(), **result.to_dict()}
    _emit(payload, out_json, estimate_table(result.reports) if table else None)


@cli.command()
@click.argument("config_file", type=_FILE, required=False)
@click.option("--preset", default=None, help="Bundled simulation preset name")
@click.option("--seed", type=int, required=True)
@click.option("--replications", type=int, default=None, help="Override the config")
@click.option(
    "--threads",
    type=click.IntRange(min=1),
    default=None,
    help="Worker threads (default: LASSO_ATE_THREADS or 1)",
)
@click.option("--strict", is_flag=True, help="Fail on the first replication error")
@click.option("--table", is_flag=True, help="Print a text table instead of JSON")
@click.option("--out-json", type=click.Path(dir_okay=False), default=None)
@click.option(
    "--out-csv",
    type=click.Path(dir_okay=False),
    default=None,
    help="Per-replication records",
)
@handle_errors
def simulate(
    config_file: Optional[str],
    preset: Optional[str],
    seed: int,
    replications: Optional[int],
    threads: Optional[int],
    strict: bool,
    table: bool,
    out_json: Optional[str],
    out_csv: Optional[str],
) -> None:
    """Monte Carlo study over complete randomizations of a generated population"""
    if config_file is None and preset is None:
        raise ValidationError("Provide a CONFIG_FILE or --preset")
    payload = read_config_file(config_file) if config_file else None
    service = get_estimation_service()
    config = service.simulation_config(
        payload,
        preset,
        seed=seed,
        replications=replications,
        max_workers=_threads(threads),
        strict=strict or None,
    )
    manifest = RunManifest.start(
        "simulate",
        {**config.to_dict(), "preset": preset},
        {"config": config_file},
        seed,
    )
    _, summary = service.simulate(config)
    if out_csv:
        write_text(frame_to_csv(summary.records), out_csv)
    output = {"manifest": manifest.finish().to_dict(), "summary": summary.to_dict()}
    _emit(output, out_json, simulation_table(summary) if table else None)


@cli.command()
@click.argument("data_csv", type=_FILE)
@click.argument("meta_json", type=_FILE)
@click.option(
    "-B",
    "--resamples",
    type=int,
    default=Config.SUPPORT_BOOTSTRAP_RESAMPLES,
    show_default=True,
)
@click.option(
    "--threshold", type=float, default=Config.SUPPORT_THRESHOLD, show_default=True
)
@click.option("--seed", type=int, required=True)
@click.option("-k", "--folds", type=int, default=Config.CV_FOLDS, show_default=True)
@click.option(
    "--fourth-moment-threshold",
    type=float,
    default=Config.FOURTH_MOMENT_FLAG,
    show_default=True,
)
@click.option(
    "--scaling-threshold", type=float, default=Config.SCALING_FLAG, show_default=True
)
@click.option("--threads", type=click.IntRange(min=1), default=None)
@click.option("--table", is_flag=True, help="Print a text table instead of JSON")
@click.option("--out-json", type=click.Path(dir_okay=False), default=None)
@handle_errors
def diagnose(
    data_csv: str,
    meta_json: str,
    resamples: int,
    threshold: float,
    seed: int,
    folds: int,
    fourth_moment_threshold: float,
    scaling_threshold: float,
    threads: Optional[int],
    table: bool,
    out_json: Optional[str],
) -> None:
    """Inspect the conditions behind the adjusted estimator's guarantees"""
    options = {
        "resamples": resamples,
        "threshold": threshold,
        "seed": seed,
        "folds": folds,
        "fourth_moment_threshold": fourth_moment_threshold,
        "scaling_threshold": scaling_threshold,
    }
    manifest = RunManifest.start(
        "diagnose", options, {"data": data_csv, "meta": meta_json}, seed
    )
    sample, _ = load_experiment(data_csv, meta_json)
    report = get_estimation_service().diagnose(sample, options, _threads(threads))
    payload = {"manifest": manifest.finish().to_dict(), "report": report.to_dict()}
    _emit(payload, out_json, diagnostics_table(report) if table else None)


@cli.command()
@click.argument("raw_csv", type=_FILE)
@click.argument("meta_json", type=_FILE)
@click.option("--quadratics/--no-quadratics", default=True, show_default=True)
@click.option("--interactions/--no-interactions", default=True, show_default=True)
@click.option("--corr-threshold", type=float, default=0.95, show_default=True)
@click.option("--min-ones", type=int, default=20, show_default=True)
@click.option("--standardize/--no-standardize", default=True, show_default=True)
@click.option("--out-csv", type=click.Path(dir_okay=False), required=True)
@click.option("--out-meta", type=click.Path(dir_okay=False), required=True)
@handle_errors
def featurize(
    raw_csv: str,
    meta_json: str,
    quadratics: bool,
    interactions: bool,
    corr_threshold: float,
    min_ones: int,
    standardize: bool,
    out_csv: str,
    out_meta: str,
) -> None:
    """Expand raw covariates into a standardized design matrix"""
    options = {
        "include_quadratics": quadratics,
        "include_interactions": interactions,
        "corr_threshold": corr_threshold,
        "min_ones": min_ones,
        "standardize": standardize,
    }
    manifest = RunManifest.start(
        "featurize", options, {"data": raw_csv, "meta": meta_json}
    )
    design = get_estimation_service().featurize(
        read_csv(raw_csv), load_meta(meta_json), options
    )
    write_design_matrix(design, out_csv, out_meta, manifest.finish().to_dict())
    logger.info(
        "Design matrix written",
        extra={"columns": design.shape[1], "dropped": len(design.dropped)},
    )


def main() -> None:
    cli(prog_name="lasso-ate")


if __name__ == "__main__":
    main()
