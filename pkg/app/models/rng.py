"""Counter-based random streams for reproducible simulations.

Every stream is a numpy Philox generator keyed by (seed, *keys), so any
replication, bootstrap resample or population component can be regenerated
in isolation. Continuous variates go through the inverse CDF of a 53-bit
uniform stream.
"""

from typing import Tuple, Union

import numpy as np
from scipy import stats

Shape = Union[int, Tuple[int, ...]]

_MANTISSA = 2**53


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, *keys)"""
    if seed < 0 or any(key < 0 for key in keys):
        raise ValueError("Seeds and stream keys must be non-negative")
    sequence = np.random.SeedSequence([int(seed), *[int(key) for key in keys]])
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """64-bit seed for a child stream, e.g. replication r of a master seed"""
    sequence = np.random.SeedSequence([int(seed), *[int(key) for key in keys]])
    return int(sequence.generate_state(1, np.uint64)[0])


def uniforms(generator: np.random.Generator, size: Shape) -> np.ndarray:
    """Uniforms strictly inside (0, 1) on a 2^-53 lattice"""
    draws = generator.integers(0, _MANTISSA, size=size, dtype=np.int64)
    return (draws.astype(float) + 0.5) / _MANTISSA


def standard_normal(generator: np.random.Generator, size: Shape) -> np.ndarray:
    return stats.norm.ppf(uniforms(generator, size))


def student_t(generator: np.random.Generator, df: float, size: Shape) -> np.ndarray:
    return stats.t.ppf(uniforms(generator, size), df)


def draw_family(
    generator: np.random.Generator, family: str, size: Shape
) -> np.ndarray:
    """Draws from one of the noise families: gaussian, t1, t3"""
    if family == "gaussian":
        return standard_normal(generator, size)
    if family in ("t1", "t3"):
        return student_t(generator, float(family[1:]), size)
    raise ValueError(f"Unknown distribution family: {family}")


def random_subset(generator: np.random.Generator, n: int, k: int) -> np.ndarray:
    """Uniformly random size-k subset of range(n), sorted"""
    order = np.argsort(uniforms(generator, n), kind="stable")
    return np.sort(order[:k])


def subset_rows(
    generator: np.random.Generator, n: int, k: int, draws: int
) -> np.ndarray:
    """draws x k matrix, each row a uniformly random size-k subset of range(n)"""
    keys = uniforms(generator, (draws, n))
    if k == n:
        return np.tile(np.arange(n), (draws, 1))
    return np.argpartition(keys, k - 1, axis=1)[:, :k]


def bootstrap_indices(
    generator: np.random.Generator, m: int, resamples: int
) -> np.ndarray:
    """resamples x m matrix of with-replacement row indices"""
    return generator.integers(0, m, size=(resamples, m))
