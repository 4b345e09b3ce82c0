"""Benchmark problems: generalized eigenvalue and canonical correlation analysis.

Both are trace optimizations with generalized orthogonality constraints
and both have closed-form optima computable by dense linear algebra,
which the test suites use as independent oracles: the eigenvalue
problem through the symmetric-definite pencil, CCA through whitened
singular values.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as la

from .geometry import Pair, ProductGeometry, StiefelGeometry
from .manifold import DegeneracyError, DimensionError, MetricContext
from .solver import Problem

__all__ = [
    "GevpKind",
    "GevpInstance",
    "CcaInstance",
    "generate_gevp_instance",
    "gevp_problem",
    "gevp_oracle",
    "generate_cca_instance",
    "cca_problem",
    "cca_oracle",
    "default_cca_weights",
]


class GevpKind(Enum):
    DIAG = "diag"  # A = diag(1, 2, ..., n)
    RANDOM = "random"  # A = D^T D for a square standard-normal D


@dataclass(frozen=True)
class GevpInstance:
    """Symmetric pencil (A, M) and the number of extremal directions sought."""

    A: np.ndarray
    M: np.ndarray
    p: int

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        scale = np.linalg.norm(A, "fro")
        if scale > 0 and np.linalg.norm(A - A.T, "fro") > 1e-12 * scale:
            raise DegeneracyError("A must be symmetric")
        if A.shape != np.asarray(self.M).shape:
            raise DimensionError("A and M must have matching shapes")
        if not (1 <= self.p <= A.shape[0]):
            raise DimensionError(f"p={self.p} out of range for n={A.shape[0]}")


def generate_gevp_instance(
    kind: GevpKind, n: int, p: int, seed: int, s_samples: int = 1000
) -> GevpInstance:
    """Deterministic test pencil.

    A is either diag(1..n) or D^T D with D standard normal; M is the
    sample Gram matrix of an (s_samples x n) standard-normal draw plus
    the identity, which keeps it safely positive definite.
    """
    if not (1 <= p <= n):
        raise DimensionError(f"p={p} out of range for n={n}")
    kind = GevpKind(kind)
    rng = np.random.default_rng(seed)
    if kind is GevpKind.DIAG:
        A = np.diag(np.arange(1.0, n + 1.0))
    else:
        D = rng.standard_normal((n, n))
        A = D.T @ D
    Y = rng.standard_normal((s_samples, n))
    M = Y.T @ Y / s_samples + np.eye(n)
    return GevpInstance(A=A, M=M, p=p)


def gevp_problem(inst: GevpInstance) -> Problem:
    """Minimize -tr(X^T A X) over X^T M X = I (top-p pencil eigenvectors)."""
    A = np.asarray(inst.A, dtype=float)
    metric = MetricContext(inst.M)
    cache: dict = {"X": None, "AX": None}

    def _ax(X: np.ndarray) -> np.ndarray:
        # objective and gradient are evaluated at the same point back to
        # back; holding a reference keeps the identity check sound
        if cache["X"] is not X:
            cache["X"] = X
            cache["AX"] = A @ X
        return cache["AX"]

    def objective(X: np.ndarray) -> float:
        return -float(np.sum(X * _ax(X)))

    def euclidean_gradient(X: np.ndarray) -> np.ndarray:
        return -2.0 * _ax(X)

    return Problem(
        objective=objective,
        euclidean_gradient=euclidean_gradient,
        geometry=StiefelGeometry(metric, inst.p),
        name=f"gevp(n={A.shape[0]}, p={inst.p})",
        report_negated=True,
    )


def gevp_oracle(inst: GevpInstance) -> float:
    """Optimal objective: minus the sum of the p largest pencil eigenvalues.

    Solved densely by reducing A x = lambda M x to a standard symmetric
    problem through the Cholesky factor of M.
    """
    try:
        w = la.eigh(inst.A, inst.M, eigvals_only=True)
    except la.LinAlgError as exc:
        raise DegeneracyError("pencil reduction failed; M must be positive definite") from exc
    return -float(np.sum(w[-inst.p :]))


# -- canonical correlation analysis ---------------------------------------------


@dataclass(frozen=True)
class CcaInstance:
    """Covariance blocks (Cx, Cy, Cxy) and strictly decreasing positive weights."""

    Cx: np.ndarray
    Cy: np.ndarray
    Cxy: np.ndarray
    weights: np.ndarray  # diagonal of the p x p weight matrix

    def __post_init__(self):
        m, n = np.asarray(self.Cxy).shape
        if np.asarray(self.Cx).shape != (m, m) or np.asarray(self.Cy).shape != (n, n):
            raise DimensionError("covariance blocks have inconsistent shapes")
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise DimensionError("weights must be a nonempty vector")
        if not (np.all(w > 0) and np.all(np.diff(w) < 0)):
            raise DegeneracyError("weights must be strictly decreasing and positive")

    @property
    def m(self) -> int:
        return self.Cx.shape[0]

    @property
    def n(self) -> int:
        return self.Cy.shape[0]

    @property
    def p(self) -> int:
        return self.weights.size


def default_cca_weights(p: int) -> np.ndarray:
    """Arithmetic weight ladder 1.0 + 0.1*p, ..., 1.2, 1.1 (step 0.1)."""
    return 1.0 + 0.1 * np.arange(p, 0, -1)


def generate_cca_instance(
    m: int, n: int, p: int, t_samples: int = 1000, seed: int = 0, weights=None
) -> CcaInstance:
    """Sample covariance blocks of two standard-normal data matrices.

    Cx = X0^T X0 / T, Cy = Y0^T Y0 / T, Cxy = X0^T Y0 / T for T x m and
    T x n draws.  Fails when a covariance block is numerically singular
    (too few samples for the dimension).
    """
    if not (1 <= p <= n <= m):
        raise DimensionError(f"sizes must satisfy 1 <= p <= n <= m, got p={p}, n={n}, m={m}")
    rng = np.random.default_rng(seed)
    X0 = rng.standard_normal((t_samples, m))
    Y0 = rng.standard_normal((t_samples, n))
    Cx = X0.T @ X0 / t_samples
    Cy = Y0.T @ Y0 / t_samples
    Cxy = X0.T @ Y0 / t_samples
    for name, C in (("Cx", Cx), ("Cy", Cy)):
        try:
            la.cholesky(C, lower=True)
        except la.LinAlgError as exc:
            raise DegeneracyError(
                f"{name} is numerically singular; increase t_samples above the dimension"
            ) from exc
    w = default_cca_weights(p) if weights is None else np.asarray(weights, dtype=float)
    return CcaInstance(Cx=Cx, Cy=Cy, Cxy=Cxy, weights=w)


def cca_problem(inst: CcaInstance) -> Problem:
    """Minimize -tr(U^T Cxy V N) over the product of two weighted Stiefel manifolds."""
    Cxy = np.asarray(inst.Cxy, dtype=float)
    w = np.asarray(inst.weights, dtype=float)
    metric_u = MetricContext(inst.Cx)
    metric_v = MetricContext(inst.Cy)
    cache: dict = {"X": None, "CV": None}

    def _cv(X: Pair) -> np.ndarray:
        if cache["X"] is not X:
            cache["X"] = X
            cache["CV"] = Cxy @ X.v
        return cache["CV"]

    def objective(X: Pair) -> float:
        # tr(U^T Cxy V N) with diagonal N: weighted sum of the diagonal.
        return -float(np.einsum("ij,ij,j->", X.u, _cv(X), w))

    def euclidean_gradient(X: Pair) -> Pair:
        return Pair(-_cv(X) * w, -(Cxy.T @ X.u) * w)

    return Problem(
        objective=objective,
        euclidean_gradient=euclidean_gradient,
        geometry=ProductGeometry(metric_u, metric_v, inst.p),
        name=f"cca(m={inst.m}, n={inst.n}, p={inst.p})",
    )


def cca_oracle(inst: CcaInstance) -> float:
    """Optimal objective: minus the weighted sum of the top canonical correlations.

    The correlations are the leading singular values of the whitened
    cross block Lx^{-1} Cxy Ly^{-T}, where Lx, Ly are the Cholesky
    factors of Cx, Cy (triangular whitening leaves singular values
    unchanged relative to symmetric square roots).
    """
    try:
        Lx = la.cholesky(inst.Cx, lower=True)
        Ly = la.cholesky(inst.Cy, lower=True)
    except la.LinAlgError as exc:
        raise DegeneracyError("covariance blocks must be positive definite") from exc
    K = la.solve_triangular(Lx, np.asarray(inst.Cxy, dtype=float), lower=True)
    K = la.solve_triangular(Ly, K.T, lower=True).T
    sigma = la.svdvals(K)
    p = inst.p
    return -float(np.sum(np.asarray(inst.weights) * sigma[:p]))
