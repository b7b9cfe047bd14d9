"""Shared generators for randomized tests."""

import numpy as np

from larinfer.path import StandardizedData, standardize


def random_instance(
    rng: np.random.Generator,
    n: int | None = None,
    p: int | None = None,
    center: bool = False,
    signal: float = 0.5,
) -> StandardizedData:
    """Random standardized dataset with a mild linear signal."""
    n = n if n is not None else int(rng.integers(20, 80))
    p = p if p is not None else int(rng.integers(2, 8))
    X = rng.standard_normal((n, p))
    beta = rng.standard_normal(p)
    y = signal * (X @ beta) + rng.standard_normal(n)
    return standardize(X, y, center=center)


def orthonormal_design(rng: np.random.Generator, n: int, p: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    return q


def population_instance(
    rng: np.random.Generator,
    n: int = 60,
    p: int = 6,
    m: int = 3,
) -> tuple[StandardizedData, np.ndarray]:
    """Standardized design plus a mean vector supported on m columns."""
    X = rng.standard_normal((n, p))
    beta = np.zeros(p)
    beta[rng.choice(p, m, replace=False)] = rng.uniform(0.5, 2.0, m) * rng.choice(
        [-1.0, 1.0], m
    )
    data = standardize(X, X @ beta, center=True)
    return data, data.y
