"""Shared helpers for the test suite."""

import numpy as np
import pytest

from gstiefel_cg import MetricContext


def random_spd(n: int, cond: float, rng: np.random.Generator) -> np.ndarray:
    """SPD matrix with eigenvalues log-spaced over [1, cond]."""
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = np.logspace(0.0, np.log10(cond), n)
    A = (Q * eigs) @ Q.T
    return (A + A.T) / 2.0


def make_context(n: int, cond: float, seed: int) -> tuple[MetricContext, np.random.Generator]:
    rng = np.random.default_rng(seed)
    return MetricContext(random_spd(n, cond, rng)), rng


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance scaled by the reference magnitude."""
    return float(np.linalg.norm(a - b) / (1.0 + np.linalg.norm(b)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
