"""Solver-facing geometry adapters and baseline retractions.

A geometry bundles one manifold (or a product of two) behind the small
surface the conjugate-gradient loop needs: metric, gradient conversion,
feasibility, restoration, and a per-iteration step factory that serves
retractions and transports for a fixed (X, Z).  Points and tangents are
plain ndarrays on a single manifold and :class:`Pair` objects on a
product, so the solver's vector arithmetic works unchanged on both.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as la

from .cayley import CayleyKernel, RetractionStrategy, StepTooLargeError
from .manifold import MetricContext

__all__ = [
    "RetractionKind",
    "TransportKind",
    "baseline_retraction",
    "retract_cholqr",
    "retract_polar",
    "StiefelGeometry",
    "Pair",
    "ProductGeometry",
]


class RetractionKind(Enum):
    CAYLEY = "cayley"
    CHOLQR = "cholqr"
    POLAR = "polar"


class TransportKind(Enum):
    DIFF_RETRACTION = "diff-retraction"
    ISOMETRIC = "isometric"
    PROJECTION = "projection"


# -- baseline retractions ------------------------------------------------------


def retract_cholqr(ctx: MetricContext, X: np.ndarray, Z: np.ndarray, t: float) -> np.ndarray:
    """Cholesky-QR retraction: (X + tZ) L^{-T} with L L^T = (X+tZ)^T M (X+tZ)."""
    Y = X + t * Z
    G = Y.T @ (ctx.M @ Y)
    try:
        L = la.cholesky(G, lower=True)
    except (la.LinAlgError, ValueError) as exc:
        raise StepTooLargeError("Gram matrix of the trial step is not positive definite") from exc
    out = la.solve_triangular(L, Y.T, lower=True).T
    if not np.all(np.isfinite(out)):
        raise StepTooLargeError("retraction produced non-finite values")
    return out


def retract_polar(ctx: MetricContext, X: np.ndarray, Z: np.ndarray, t: float) -> np.ndarray:
    """Polar retraction: (X + tZ) G^{-1/2} with G = (X+tZ)^T M (X+tZ)."""
    Y = X + t * Z
    G = Y.T @ (ctx.M @ Y)
    if not np.all(np.isfinite(G)):
        raise StepTooLargeError("Gram matrix of the trial step overflowed")
    w, Q = la.eigh(G)
    if w[0] <= 0.0:
        raise StepTooLargeError("Gram matrix of the trial step is not positive definite")
    out = Y @ (Q * (1.0 / np.sqrt(w))) @ Q.T
    if not np.all(np.isfinite(out)):
        raise StepTooLargeError("retraction produced non-finite values")
    return out


def baseline_retraction(
    kind: RetractionKind, ctx: MetricContext, X: np.ndarray, Z: np.ndarray, t: float
) -> np.ndarray:
    """Dispatch to one of the non-Cayley feasible update rules."""
    if kind is RetractionKind.CHOLQR:
        return retract_cholqr(ctx, X, Z, t)
    if kind is RetractionKind.POLAR:
        return retract_polar(ctx, X, Z, t)
    raise ValueError(f"{kind} is not a baseline retraction")


# -- single-manifold geometry ---------------------------------------------------


class _SingleStep:
    """Retraction and transports for one iteration on one manifold."""

    def __init__(
        self,
        metric: MetricContext,
        X: np.ndarray,
        Z: np.ndarray,
        retraction: RetractionKind,
        transport: TransportKind,
        strategy: RetractionStrategy,
    ):
        self.metric = metric
        self.X = X
        self.Z = Z
        self.retraction = retraction
        self.transport_kind = transport
        self._kernel: CayleyKernel | None = None
        if retraction is RetractionKind.CAYLEY or transport in (
            TransportKind.DIFF_RETRACTION,
            TransportKind.ISOMETRIC,
        ):
            self._kernel = CayleyKernel(metric, X, Z, strategy)
        self._points: dict[float, np.ndarray] = {}

    def retract(self, t: float) -> np.ndarray:
        if self.retraction is RetractionKind.CAYLEY:
            Xt = self._kernel.retract(t)
        else:
            Xt = baseline_retraction(self.retraction, self.metric, self.X, self.Z, t)
        self._points[t] = Xt
        return Xt

    def _point_at(self, t: float) -> np.ndarray:
        Xt = self._points.get(t)
        return Xt if Xt is not None else self.retract(t)

    def transport_direction(self, t: float) -> np.ndarray:
        if self.transport_kind is TransportKind.DIFF_RETRACTION:
            return self._kernel.transport_diff(t)
        if self.transport_kind is TransportKind.ISOMETRIC:
            return self._kernel.transport_iso(t)
        return self.metric.project_tangent(self._point_at(t), self.Z)

    def transport(self, t: float, Y: np.ndarray) -> np.ndarray:
        if self.transport_kind is TransportKind.DIFF_RETRACTION:
            return self._kernel.transport_diff(t, Y)
        if self.transport_kind is TransportKind.ISOMETRIC:
            return self._kernel.transport_iso(t, Y)
        return self.metric.project_tangent(self._point_at(t), Y)


class StiefelGeometry:
    """One generalized Stiefel manifold seen through the solver interface."""

    def __init__(self, metric: MetricContext, p: int):
        self.metric = metric
        self.p = p

    def inner(self, A, B) -> float:
        return self.metric.inner(A, B)

    def norm(self, A) -> float:
        return self.metric.norm(A)

    def weighted(self, A):
        """Metric image M A; lets hot loops reuse one multiply across inner products."""
        return self.metric.M @ A

    @staticmethod
    def dot(A, WB) -> float:
        """Euclidean pairing sum(A * WB); equals inner(A, B) when WB = weighted(B)."""
        return float(np.sum(A * WB))

    def rgrad(self, X, eg):
        return self.metric.egrad_to_rgrad(X, eg)

    def project_tangent(self, X, N):
        return self.metric.project_tangent(X, N)

    def feasibility(self, X) -> float:
        return self.metric.check_feasibility(X)

    def restore(self, X):
        return self.metric.m_orthonormalize(X)

    def random_point(self, rng: np.random.Generator):
        return self.metric.random_point(self.p, rng)

    def random_tangent(self, X, rng: np.random.Generator):
        return self.metric.random_tangent(X, rng)

    def step(
        self,
        X,
        Z,
        retraction: RetractionKind = RetractionKind.CAYLEY,
        transport: TransportKind = TransportKind.DIFF_RETRACTION,
        strategy: RetractionStrategy = RetractionStrategy.AUTO,
    ) -> _SingleStep:
        return _SingleStep(self.metric, X, Z, retraction, transport, strategy)


# -- product of two manifolds ----------------------------------------------------


@dataclass(frozen=True)
class Pair:
    """Point or tangent on a product of two manifolds, with vector arithmetic."""

    u: np.ndarray
    v: np.ndarray

    def __add__(self, other: "Pair") -> "Pair":
        return Pair(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "Pair") -> "Pair":
        return Pair(self.u - other.u, self.v - other.v)

    def __neg__(self) -> "Pair":
        return Pair(-self.u, -self.v)

    def __mul__(self, a: float) -> "Pair":
        return Pair(a * self.u, a * self.v)

    __rmul__ = __mul__


class _ProductStep:
    def __init__(self, s1: _SingleStep, s2: _SingleStep):
        self._s1 = s1
        self._s2 = s2

    def retract(self, t: float) -> Pair:
        return Pair(self._s1.retract(t), self._s2.retract(t))

    def transport_direction(self, t: float) -> Pair:
        return Pair(self._s1.transport_direction(t), self._s2.transport_direction(t))

    def transport(self, t: float, Y: Pair) -> Pair:
        return Pair(self._s1.transport(t, Y.u), self._s2.transport(t, Y.v))


class ProductGeometry:
    """Product of two generalized Stiefel manifolds; everything lifts componentwise.

    The metric is the sum of the component metrics, feasibility is the
    worst component residual, and retraction/transport paths are chosen
    per component.
    """

    def __init__(self, metric_u: MetricContext, metric_v: MetricContext, p: int):
        self.metric_u = metric_u
        self.metric_v = metric_v
        self.p = p

    def inner(self, A: Pair, B: Pair) -> float:
        return self.metric_u.inner(A.u, B.u) + self.metric_v.inner(A.v, B.v)

    def norm(self, A: Pair) -> float:
        return float(np.sqrt(max(self.inner(A, A), 0.0)))

    def weighted(self, A: Pair) -> Pair:
        """Componentwise metric image (Cx A_u, Cy A_v)."""
        return Pair(self.metric_u.M @ A.u, self.metric_v.M @ A.v)

    @staticmethod
    def dot(A: Pair, WB: Pair) -> float:
        return float(np.sum(A.u * WB.u) + np.sum(A.v * WB.v))

    def rgrad(self, X: Pair, eg: Pair) -> Pair:
        return Pair(
            self.metric_u.egrad_to_rgrad(X.u, eg.u),
            self.metric_v.egrad_to_rgrad(X.v, eg.v),
        )

    def project_tangent(self, X: Pair, N: Pair) -> Pair:
        return Pair(
            self.metric_u.project_tangent(X.u, N.u),
            self.metric_v.project_tangent(X.v, N.v),
        )

    def feasibility(self, X: Pair) -> float:
        return max(
            self.metric_u.check_feasibility(X.u),
            self.metric_v.check_feasibility(X.v),
        )

    def restore(self, X: Pair) -> Pair:
        return Pair(
            self.metric_u.m_orthonormalize(X.u),
            self.metric_v.m_orthonormalize(X.v),
        )

    def random_point(self, rng: np.random.Generator) -> Pair:
        return Pair(
            self.metric_u.random_point(self.p, rng),
            self.metric_v.random_point(self.p, rng),
        )

    def random_tangent(self, X: Pair, rng: np.random.Generator) -> Pair:
        return Pair(
            self.metric_u.random_tangent(X.u, rng),
            self.metric_v.random_tangent(X.v, rng),
        )

    def step(
        self,
        X: Pair,
        Z: Pair,
        retraction: RetractionKind = RetractionKind.CAYLEY,
        transport: TransportKind = TransportKind.DIFF_RETRACTION,
        strategy: RetractionStrategy = RetractionStrategy.AUTO,
    ) -> _ProductStep:
        return _ProductStep(
            _SingleStep(self.metric_u, X.u, Z.u, retraction, transport, strategy),
            _SingleStep(self.metric_v, X.v, Z.v, retraction, transport, strategy),
        )
