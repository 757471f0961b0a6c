"""Shared fixtures and independent oracles for the test suite."""

import math
from pathlib import Path

import numpy as np
import pytest

from hubrank.evidence import FeatureMatrix, LabelVector

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def dense_log_evidence(f: np.ndarray, y: np.ndarray, alpha: float, beta: float):
    """Log evidence through explicit dense linear algebra.

    Forms A = alpha I + beta F^T F, solves for the posterior mean and takes
    a dense log determinant; deliberately shares nothing with the package's
    spectrum-based evaluation path.
    """
    n, dim = f.shape
    a = alpha * np.eye(dim) + beta * (f.T @ f)
    m = beta * np.linalg.solve(a, f.T @ y)
    residual = float(np.sum((f @ m - y) ** 2))
    _, logdet = np.linalg.slogdet(a)
    value = (
        0.5 * n * math.log(beta)
        + 0.5 * dim * math.log(alpha)
        - 0.5 * n * math.log(2.0 * math.pi)
        - 0.5 * beta * residual
        - 0.5 * alpha * float(m @ m)
        - 0.5 * logdet
    )
    return value, m


def linear_model_instance(seed: int, n: int, dim: int, noise: float = 0.1):
    """Features with a planted linear relation y = F w + noise."""
    gen = np.random.default_rng(seed)
    f = gen.normal(size=(n, dim))
    w = gen.normal(size=dim)
    y = f @ w + noise * math.sqrt(dim) * gen.normal(size=n)
    return FeatureMatrix(f), LabelVector(y)
