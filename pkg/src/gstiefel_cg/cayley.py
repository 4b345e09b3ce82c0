"""Cayley-transform retraction and vector transports on St_M(n, p).

For a tangent vector Z at X the skew matrix

    W = P Z X^T - X Z^T P^T,    P = I - (1/2) X X^T M,

satisfies Z = W M X and factors as W = U V^T with the n x 2p blocks
U = [P Z, X], V = [X, -P Z].  The retraction is the Cayley map

    R_X(t Z) = (I - (t/2) W M)^{-1} (I + (t/2) W M) X,

and two transports are attached to it: the differentiated retraction
and the Cayley approximation of the differentiated matrix exponential
(the latter is an isometry of the weighted metric).  Every operation
has a dense path and a Sherman-Morrison-Woodbury path that only ever
inverts 2p x 2p matrices; the two agree to roundoff and the cheap one
is selected automatically when 4p <= n.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as la

from .manifold import DegeneracyError, DimensionError, ManifoldError, MetricContext

__all__ = [
    "StepTooLargeError",
    "SkewFactors",
    "RetractionStrategy",
    "CayleyKernel",
    "skew_factors",
    "retract",
    "transport_diff",
    "transport_iso",
    "angle_bound",
]

#: Largest dimension for which the eigenvalue diagnostics run.
ANGLE_BOUND_MAX_N = 500


class StepTooLargeError(ManifoldError, ArithmeticError):
    """A trial step made an inner linear system unsolvable.

    Recoverable: a line search treats it as a failed trial and shrinks
    the step.
    """


class RetractionStrategy(Enum):
    """Evaluation path for the Cayley operators."""

    FULL = "full"
    LOW_RANK = "low-rank"
    AUTO = "auto"

    def resolve(self, n: int, p: int) -> "RetractionStrategy":
        """Concrete path for a given size; AUTO picks LOW_RANK when 4p <= n."""
        if self is not RetractionStrategy.AUTO:
            return self
        return RetractionStrategy.LOW_RANK if 4 * p <= n else RetractionStrategy.FULL


@dataclass(frozen=True)
class SkewFactors:
    """Rank-2p factorization W = U V^T of the skew matrix of a tangent vector.

    U = [P Z, X] and V = [X, -P Z]; the n x n matrix W is never formed
    outside of small-size diagnostics.
    """

    U: np.ndarray
    V: np.ndarray

    def dense(self) -> np.ndarray:
        """Materialize W = U V^T (diagnostics and tests only)."""
        return self.U @ self.V.T


def skew_factors(ctx: MetricContext, X: np.ndarray, Z: np.ndarray) -> SkewFactors:
    """Low-rank factors of the skew matrix generating the direction Z at X."""
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if X.shape != Z.shape or X.shape[0] != ctx.n:
        raise DimensionError(f"point/tangent must both be ({ctx.n}, p); got {X.shape}, {Z.shape}")
    PZ = Z - 0.5 * X @ (X.T @ (ctx.M @ Z))
    return SkewFactors(U=np.column_stack([PZ, X]), V=np.column_stack([X, -PZ]))


def _solve(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Dense solve that downgrades numerical blowups to StepTooLargeError."""
    try:
        out = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise StepTooLargeError("inner linear system is singular") from exc
    if not np.all(np.isfinite(out)):
        raise StepTooLargeError("inner linear system produced non-finite values")
    return out


class CayleyKernel:
    """Retraction and transports along a fixed (X, Z) with cached products.

    One kernel per iteration amortizes the O(n^2 p) products M X and
    M V across all line-search trials and both transport calls; each
    trial step then costs O(n p^2) on the low-rank path.
    """

    def __init__(
        self,
        ctx: MetricContext,
        X: np.ndarray,
        Z: np.ndarray,
        strategy: RetractionStrategy = RetractionStrategy.AUTO,
        factors: SkewFactors | None = None,
    ):
        self.ctx = ctx
        self.X = np.asarray(X, dtype=float)
        self.Z = np.asarray(Z, dtype=float)
        n, p = self.X.shape
        self.strategy = strategy.resolve(n, p)
        self.factors = factors if factors is not None else skew_factors(ctx, X, Z)
        U, V = self.factors.U, self.factors.V
        self._U = U
        self._MV = ctx.M @ V  # n x 2p
        self._VtMX = self._MV.T @ self.X  # 2p x p
        self._VtMU = self._MV.T @ U  # 2p x 2p
        self._WM: np.ndarray | None = None  # dense n x n, built lazily
        self._lu_cache: dict[float, tuple] = {}

    # -- shared pieces ----------------------------------------------------

    def _core(self, t: float) -> np.ndarray:
        """2p x 2p system matrix I - (t/2) V^T M U."""
        k = self._VtMU.shape[0]
        C = -(t / 2.0) * self._VtMU
        C[np.diag_indices(k)] += 1.0
        if not np.all(np.isfinite(C)):
            raise StepTooLargeError("trial step overflowed the core system")
        return C

    def _dense_wm(self) -> np.ndarray:
        if self._WM is None:
            self._WM = self._U @ self._MV.T  # W M = U (M V)^T since M is symmetric
        return self._WM

    def _dense_lu(self, t: float):
        lu = self._lu_cache.get(t)
        if lu is None:
            n = self.X.shape[0]
            lhs = -(t / 2.0) * self._dense_wm()
            lhs[np.diag_indices(n)] += 1.0
            try:
                lu = la.lu_factor(lhs)
            except (la.LinAlgError, ValueError) as exc:
                raise StepTooLargeError("dense Cayley system is singular or overflowed") from exc
            self._lu_cache[t] = lu
        return lu

    def _dense_solve(self, t: float, B: np.ndarray) -> np.ndarray:
        out = la.lu_solve(self._dense_lu(t), B)
        if not np.all(np.isfinite(out)):
            raise StepTooLargeError("dense Cayley solve produced non-finite values")
        return out

    def _smw_apply_inverse(self, t: float, B: np.ndarray) -> np.ndarray:
        """(I - (t/2) W M)^{-1} B via the Woodbury identity."""
        C = self._core(t)
        return B + (t / 2.0) * self._U @ _solve(C, self._MV.T @ B)

    # -- retraction --------------------------------------------------------

    def retract(self, t: float) -> np.ndarray:
        """Point R_X(t Z); raises StepTooLargeError when the step degenerates."""
        if t == 0.0:
            return self.X.copy()
        if self.strategy is RetractionStrategy.LOW_RANK:
            C = self._core(t)
            out = self.X + t * self._U @ _solve(C, self._VtMX)
        else:
            WM = self._dense_wm()
            rhs = self.X + (t / 2.0) * WM @ self.X
            out = self._dense_solve(t, rhs)
        if not np.all(np.isfinite(out)):
            raise StepTooLargeError("retraction produced non-finite values")
        return out

    # -- differentiated-retraction transport --------------------------------

    def transport_diff(self, t: float, Y: np.ndarray | None = None) -> np.ndarray:
        """Transport by the differentiated retraction along t Z.

        ``Y=None`` transports the direction itself, which collapses to
        (I - (t/2) W M)^{-2} Z and, on the low-rank path, to a closed
        form in the 2p x 2p blocks M1 = V^T M X and M2 = V^T M U.
        """
        if Y is None or Y is self.Z:
            if t == 0.0:
                return self.Z.copy()
            if self.strategy is RetractionStrategy.LOW_RANK:
                C = self._core(t)
                M1, M2 = self._VtMX, self._VtMU
                M3 = _solve(C, M1)
                M2M3 = M2 @ M3
                out = self._U @ (M1 + (t / 2.0) * M2M3 + (t / 2.0) * _solve(C, M2M3))
            else:
                out = self._dense_solve(t, self._dense_solve(t, self.Z))
        else:
            Y = np.asarray(Y, dtype=float)
            if t == 0.0:
                return Y.copy()
            if self.strategy is RetractionStrategy.LOW_RANK:
                # (I - (t/2) W M)^{-1} W_Y M (I - (t/2) W M)^{-1} X, all through
                # the factored forms of W and W_Y.
                yf = skew_factors(self.ctx, self.X, Y)
                X_half = self._smw_apply_inverse(t, self.X)
                inner = yf.U @ (yf.V.T @ (self.ctx.M @ X_half))
                out = self._smw_apply_inverse(t, inner)
            else:
                yf = skew_factors(self.ctx, self.X, Y)
                X_half = self._dense_solve(t, self.X)
                inner = yf.U @ (yf.V.T @ (self.ctx.M @ X_half))
                out = self._dense_solve(t, inner)
        if not np.all(np.isfinite(out)):
            raise StepTooLargeError("transport produced non-finite values")
        return out

    # -- isometric transport -------------------------------------------------

    def transport_iso(self, t: float, Y: np.ndarray | None = None) -> np.ndarray:
        """Isometric transport (I - (t/2) W M)^{-1} (I + (t/2) W M) Y.

        Preserves the weighted norm of arbitrary tangent vectors.  The
        low-rank path is Y + t U (I - (t/2) V^T M U)^{-1} V^T M Y; for
        the direction itself this is U (M1 + t M2 M3).
        """
        direction = Y is None or Y is self.Z
        Y = self.Z if direction else np.asarray(Y, dtype=float)
        if t == 0.0:
            return Y.copy()
        if self.strategy is RetractionStrategy.LOW_RANK:
            C = self._core(t)
            if direction:
                M1, M2 = self._VtMX, self._VtMU
                out = self._U @ (M1 + t * M2 @ _solve(C, M1))
            else:
                out = Y + t * self._U @ _solve(C, self._MV.T @ Y)
        else:
            WM = self._dense_wm()
            out = self._dense_solve(t, Y + (t / 2.0) * WM @ Y)
        if not np.all(np.isfinite(out)):
            raise StepTooLargeError("transport produced non-finite values")
        return out


# -- functional wrappers ------------------------------------------------------


def retract(
    ctx: MetricContext,
    X: np.ndarray,
    Z: np.ndarray,
    t: float,
    strategy: RetractionStrategy = RetractionStrategy.AUTO,
    factors: SkewFactors | None = None,
) -> np.ndarray:
    """Cayley retraction R_X(t Z).  See :meth:`CayleyKernel.retract`."""
    return CayleyKernel(ctx, X, Z, strategy, factors).retract(t)


def transport_diff(
    ctx: MetricContext,
    X: np.ndarray,
    Z: np.ndarray,
    t: float,
    Y: np.ndarray | None = None,
    strategy: RetractionStrategy = RetractionStrategy.AUTO,
    factors: SkewFactors | None = None,
) -> np.ndarray:
    """Differentiated-retraction transport of Y along t Z (Y=None: the direction)."""
    return CayleyKernel(ctx, X, Z, strategy, factors).transport_diff(t, Y)


def transport_iso(
    ctx: MetricContext,
    X: np.ndarray,
    Z: np.ndarray,
    t: float,
    Y: np.ndarray | None = None,
    strategy: RetractionStrategy = RetractionStrategy.AUTO,
    factors: SkewFactors | None = None,
) -> np.ndarray:
    """Isometric transport of Y along t Z (Y=None: the direction)."""
    return CayleyKernel(ctx, X, Z, strategy, factors).transport_iso(t, Y)


def angle_bound(ctx: MetricContext, X: np.ndarray, Z: np.ndarray, t: float) -> tuple[float, float]:
    """Cosine of the angle between the two transports of Z, and its analytic floor.

    The transports of the direction differ by the factor
    I - (t^2/4) W^2 M^2, whose spectrum lies in
    [1 + (t^2/4) b1^2 g1^2, 1 + (t^2/4) bn^2 gn^2] where b are the
    absolute imaginary parts of the eigenvalues of W and g the
    eigenvalues of M.  That yields

        cos(theta) >= sqrt((4 + t^2 b1^2 g1^2) / (4 + t^2 bn^2 gn^2)).

    Dense eigendecompositions make this a diagnostic; it is gated to
    n <= 500.
    """
    if ctx.n > ANGLE_BOUND_MAX_N:
        raise DimensionError(f"angle diagnostics are limited to n <= {ANGLE_BOUND_MAX_N}")
    if ctx.norm(Z) == 0.0:
        raise DegeneracyError("angle between transports is undefined for Z = 0")
    kernel = CayleyKernel(ctx, X, Z)
    a = kernel.transport_iso(t)
    b = kernel.transport_diff(t)
    cos_theta = ctx.inner(a, b) / (ctx.norm(a) * ctx.norm(b))
    cos_theta = min(cos_theta, 1.0)
    betas = np.abs(np.imag(np.linalg.eigvals(kernel.factors.dense())))
    gammas = la.eigvalsh(ctx.M)
    b1, bn = float(np.min(betas)), float(np.max(betas))
    g1, gn = float(gammas[0]), float(gammas[-1])
    lower = float(np.sqrt((4.0 + t**2 * b1**2 * g1**2) / (4.0 + t**2 * bn**2 * gn**2)))
    return cos_theta, lower
