"""
Pytest configuration and fixtures
"""

import json
import logging

import numpy as np
import pandas as pd
import pytest

from app.main import create_app
from app.models.population import ExperimentSample, Population


@pytest.fixture
def app():
    """Create application for testing"""
    app = create_app("testing")
    return app


@pytest.fixture
def client(app):
    """Create test client"""
    return app.test_client()


@pytest.fixture
def runner(app):
    """Create test CLI runner"""
    return app.test_cli_runner()


@pytest.fixture(autouse=True)
def reset_app_logger():
    """Drop handlers bound to streams a test (e.g. CliRunner) has closed"""
    yield
    logger = logging.getLogger("app")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.propagate = True
    logger.setLevel(logging.NOTSET)


# Sample data fixtures for testing
@pytest.fixture
def toy_frame():
    """n=8, one covariate balanced across arms, hand-checkable outcomes"""
    return pd.DataFrame(
        {
            "y": [3.0, 5.0, 4.0, 6.0, 1.0, 2.0, 2.0, 3.0],
            "t": [1, 1, 1, 1, 0, 0, 0, 0],
            "x1": [1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0],
        }
    )


@pytest.fixture
def toy_meta():
    return {"outcome": "y", "treatment": "t", "columns": {"x1": {"indicator": False}}}


@pytest.fixture
def toy_sample(toy_frame):
    return ExperimentSample(
        toy_frame[["x1"]].to_numpy(),
        toy_frame["t"].to_numpy(),
        toy_frame["y"].to_numpy(),
        ("x1",),
    )


def make_sparse_sample(n=120, p=10, seed=0, noise=0.5):
    """Linear outcomes driven by x1 and x2 only, balanced assignment"""
    generator = np.random.default_rng(seed)
    X = generator.standard_normal((n, p))
    assignment = np.zeros(n, dtype=int)
    assignment[generator.permutation(n)[: n // 2]] = 1
    signal = 2.0 * X[:, 0] - 1.5 * X[:, 1]
    y = 1.0 + signal + 0.5 * assignment + noise * generator.standard_normal(n)
    return ExperimentSample(X, assignment, y)


@pytest.fixture
def sparse_sample():
    return make_sparse_sample()


@pytest.fixture
def small_population():
    generator = np.random.default_rng(11)
    n = 8
    X = generator.standard_normal((n, 2))
    control = X[:, 0] + generator.standard_normal(n)
    treated = control + 1.0 + 0.5 * generator.standard_normal(n)
    return Population(X, treated, control)


def write_dataset(tmp_path, frame, meta, stem="data"):
    data_path = tmp_path / f"{stem}.csv"
    meta_path = tmp_path / f"{stem}_meta.json"
    frame.to_csv(data_path, index=False)
    meta_path.write_text(json.dumps(meta), encoding="utf-8")
    return str(data_path), str(meta_path)


@pytest.fixture
def toy_files(tmp_path, toy_frame, toy_meta):
    """(data csv, meta json) paths for the toy experiment"""
    return write_dataset(tmp_path, toy_frame, toy_meta, "toy")


@pytest.fixture
def sparse_files(tmp_path):
    sample = make_sparse_sample(n=60, p=6, seed=4)
    frame = pd.DataFrame(sample.covariates, columns=[f"x{j + 1}" for j in range(6)])
    frame.insert(0, "t", sample.assignment)
    frame.insert(0, "y", sample.observed)
    meta = {"outcome": "y", "treatment": "t"}
    return write_dataset(tmp_path, frame, meta, "sparse")
