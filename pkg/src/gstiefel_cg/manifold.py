"""Geometry of the generalized Stiefel manifold St_M(n, p).

St_M(n, p) = {X in R^{n x p} : X^T M X = I_p} for a symmetric positive
definite weight matrix M.  Tangent spaces carry the weighted metric
<U, V> = tr(U^T M V), which reduces to the standard trace metric when
M = I.  All operations here are pure functions of immutable inputs;
a :class:`MetricContext` is safe to share across threads once built.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as la

__all__ = [
    "ManifoldError",
    "DimensionError",
    "DegeneracyError",
    "MetricContext",
    "sym",
    "skew",
    "DEFAULT_FEASIBILITY_TOL",
    "DEFAULT_TANGENCY_TOL",
]

#: Constraint-violation tolerance for membership checks.
DEFAULT_FEASIBILITY_TOL = 1e-13

#: Tolerance for the tangency residual ||sym(X^T M Z)||_F <= tol * (1 + ||Z||_F).
DEFAULT_TANGENCY_TOL = 1e-10


class ManifoldError(Exception):
    """Base class for geometry errors."""


class DimensionError(ManifoldError, ValueError):
    """Operands have incompatible shapes."""


class DegeneracyError(ManifoldError, ValueError):
    """Numerically degenerate input (rank deficiency, zero vector, non-SPD matrix)."""


def sym(A: np.ndarray) -> np.ndarray:
    """Symmetric part (A + A^T) / 2."""
    return (A + A.T) / 2.0


def skew(A: np.ndarray) -> np.ndarray:
    """Skew-symmetric part (A - A^T) / 2."""
    return (A - A.T) / 2.0


class MetricContext:
    """An SPD weight matrix with a cached Cholesky factorization.

    The context owns everything that depends on M: the weighted inner
    product, solves with M, tangent projection, gradient conversion,
    feasibility checks and Gram-Schmidt orthonormalization in the
    M-inner product.  M is factored once at construction and the factor
    is reused for every solve.

    Parameters
    ----------
    M : (n, n) array_like
        Symmetric positive definite matrix.  Symmetry is validated to
        ``symmetry_tol`` (relative, Frobenius) and the stored copy is
        symmetrized; positive definiteness is established by the
        Cholesky factorization itself.
    """

    def __init__(self, M: np.ndarray, symmetry_tol: float = 1e-12):
        M = np.asarray(M, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise DimensionError(f"weight matrix must be square, got shape {M.shape}")
        scale = np.linalg.norm(M, "fro")
        if scale == 0.0:
            raise DegeneracyError("weight matrix is zero")
        if np.linalg.norm(M - M.T, "fro") > symmetry_tol * scale:
            raise DegeneracyError("weight matrix is not symmetric to tolerance")
        self.M = sym(M)
        self.n = M.shape[0]
        try:
            self._cho = la.cho_factor(self.M, lower=True, check_finite=False)
        except la.LinAlgError as exc:
            raise DegeneracyError("weight matrix is not positive definite") from exc

    # -- metric ---------------------------------------------------------

    def inner(self, U: np.ndarray, V: np.ndarray) -> float:
        """Weighted inner product tr(U^T M V).

        The metric does not depend on a base point, so it is also used
        for vectors rooted at different points (difference quotients,
        step-size formulas).
        """
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        if U.shape != V.shape or U.shape[0] != self.n:
            raise DimensionError(
                f"operands must both be ({self.n}, p); got {U.shape} and {V.shape}"
            )
        return float(np.sum(U * (self.M @ V)))

    def norm(self, U: np.ndarray) -> float:
        """Norm induced by :meth:`inner`."""
        return float(np.sqrt(max(self.inner(U, U), 0.0)))

    def solve(self, B: np.ndarray) -> np.ndarray:
        """Solve M X = B with the cached factorization."""
        B = np.asarray(B, dtype=float)
        if B.shape[0] != self.n:
            raise DimensionError(f"right-hand side has {B.shape[0]} rows, expected {self.n}")
        return la.cho_solve(self._cho, B, check_finite=False)

    # -- tangent space --------------------------------------------------

    def project_tangent(self, X: np.ndarray, N: np.ndarray) -> np.ndarray:
        """Orthogonal projection of N onto the tangent space at X.

        Returns ``N - X sym(X^T M N)``.  Idempotent; leaves tangent
        vectors unchanged and annihilates normal directions.
        """
        X = np.asarray(X, dtype=float)
        N = np.asarray(N, dtype=float)
        if X.shape != N.shape or X.shape[0] != self.n:
            raise DimensionError(
                f"operands must both be ({self.n}, p); got {X.shape} and {N.shape}"
            )
        return N - X @ sym(X.T @ (self.M @ N))

    def egrad_to_rgrad(self, X: np.ndarray, eg: np.ndarray) -> np.ndarray:
        """Convert a Euclidean gradient into the Riemannian gradient at X.

        Under the weighted metric the ambient gradient is M^{-1} eg;
        projecting it onto the tangent space yields the unique tangent
        vector G with <G, xi> = tr(eg^T xi) for every tangent xi.
        """
        return self.project_tangent(X, self.solve(eg))

    def tangency_residual(self, X: np.ndarray, Z: np.ndarray) -> float:
        """||sym(X^T M Z)||_F, zero exactly when Z is tangent at X."""
        return float(np.linalg.norm(sym(X.T @ (self.M @ Z)), "fro"))

    # -- membership and orthonormalization ------------------------------

    def check_feasibility(self, X: np.ndarray) -> float:
        """Constraint violation ||X^T M X - I||_F."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != self.n:
            raise DimensionError(f"point must be ({self.n}, p), got {X.shape}")
        p = X.shape[1]
        return float(np.linalg.norm(X.T @ (self.M @ X) - np.eye(p), "fro"))

    def m_orthonormalize(self, A: np.ndarray) -> np.ndarray:
        """Column-by-column Gram-Schmidt in the M-inner product.

        Runs modified Gram-Schmidt with one reorthogonalization pass
        (a single pass loses orthogonality once cond(M) grows past
        roughly 1e8).  The output spans the same column space as A.

        Raises
        ------
        DegeneracyError
            If a pivot norm falls below ``1e-12 * ||A||_M``
            (rank-deficient input).
        """
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != self.n:
            raise DimensionError(f"input must be ({self.n}, p), got {A.shape}")
        n, p = A.shape
        if p > n:
            raise DimensionError(f"cannot orthonormalize {p} columns in dimension {n}")
        total = self.norm(A)
        if total == 0.0:
            raise DegeneracyError("cannot orthonormalize the zero matrix")
        pivot_tol = 1e-12 * total
        Q = np.empty((n, p))
        MQ = np.empty((n, p))  # cached M q_i columns, avoids repeated M multiplies
        for j in range(p):
            v = A[:, j].copy()
            for _ in range(2):  # MGS pass + one reorthogonalization pass
                for i in range(j):
                    v -= (MQ[:, i] @ v) * Q[:, i]
            Mv = self.M @ v
            nrm = np.sqrt(max(Mv @ v, 0.0))
            if nrm <= pivot_tol:
                raise DegeneracyError(f"column {j} is numerically dependent on earlier columns")
            Q[:, j] = v / nrm
            MQ[:, j] = Mv / nrm
        return Q

    # -- random elements -------------------------------------------------

    def random_point(self, p: int, rng: np.random.Generator) -> np.ndarray:
        """Feasible point from a standard-normal draw, M-orthonormalized.

        Deterministic for a fixed generator state.  Retries once on a
        degenerate draw, then fails.
        """
        for attempt in range(2):
            try:
                return self.m_orthonormalize(rng.standard_normal((self.n, p)))
            except DegeneracyError:
                if attempt == 1:
                    raise
        raise AssertionError("unreachable")

    def random_tangent(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Unit-norm tangent vector at X from a projected normal draw."""
        for attempt in range(2):
            Z = self.project_tangent(X, rng.standard_normal(X.shape))
            nrm = self.norm(Z)
            if nrm > 1e-12:
                return Z / nrm
            if attempt == 1:
                raise DegeneracyError("random tangent draw degenerated twice")
        raise AssertionError("unreachable")

    def __repr__(self) -> str:  # pragma: no cover
        return f"MetricContext(n={self.n})"
