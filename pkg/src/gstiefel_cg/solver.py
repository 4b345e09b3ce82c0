"""Riemannian non-monotone conjugate gradient on the generalized Stiefel manifold.

The direction update is a modified Polak-Ribiere-Polyak rule whose
coefficient subtracts a scaled absolute cross term, the step size is
accepted against the maximum of the last q objective values (Armijo
style, non-monotone), and trial steps are seeded by a clamped
Barzilai-Borwein quotient.  Both Cayley transports keep transported
directions from growing in the weighted norm, which is what makes the
CG recursion safe here.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Sequence

import numpy as np

from .cayley import RetractionStrategy, StepTooLargeError
from .geometry import RetractionKind, TransportKind
from .manifold import DegeneracyError

__all__ = [
    "SolverParams",
    "SolveResult",
    "IterationRecord",
    "Problem",
    "LineSearchError",
    "beta_mprp",
    "line_search_nonmonotone",
    "bb_initial_step",
    "solve",
    "window_maxima",
    "verify_window_decrease",
]


@dataclass(frozen=True)
class SolverParams:
    """Tunable inputs of the CG loop.

    Defaults follow the standard configuration for this method family:
    gradient tolerance 1e-6, feasibility tolerance 1e-13, Armijo
    constant 1e-4, window of 2 recent objective values, shrink factor
    0.2, initial step 1e-3, step clamp [1e-20, 1], at most 1000
    iterations.
    """

    epsilon: float = 1e-6
    epsilon_c: float = 1e-13
    delta: float = 1e-4
    q: int = 2
    sigma: float = 0.2
    t0: float = 1e-3
    t_min: float = 1e-20
    t_max: float = 1.0
    max_iter: int = 1000
    max_backtracks: int = 50
    transport: TransportKind = TransportKind.DIFF_RETRACTION
    retraction: RetractionKind = RetractionKind.CAYLEY
    strategy: RetractionStrategy = RetractionStrategy.AUTO

    def __post_init__(self):
        if not (0.0 < self.t_min < self.t_max):
            raise ValueError("step bounds must satisfy 0 < t_min < t_max")
        if not (0.0 < self.sigma < 1.0 and 0.0 < self.delta < 1.0):
            raise ValueError("sigma and delta must lie in (0, 1)")
        if self.q < 1:
            raise ValueError("window length q must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def with_overrides(self, **kwargs) -> "SolverParams":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class Problem:
    """Objective, its Euclidean gradient, and the geometry they live on.

    ``geometry`` must provide inner/norm, rgrad, feasibility, restore
    and a ``step(X, Z, retraction, transport, strategy)`` factory; see
    :class:`gstiefel_cg.geometry.StiefelGeometry` and
    :class:`gstiefel_cg.geometry.ProductGeometry`.
    """

    objective: Callable[[Any], float]
    euclidean_gradient: Callable[[Any], Any]
    geometry: Any
    name: str = ""
    report_negated: bool = False  # report -f (benchmarks that maximize a trace)


@dataclass(frozen=True)
class IterationRecord:
    """One accepted CG step, enough to re-check every acceptance condition."""

    k: int
    obj: float
    grad_norm: float
    step: float
    beta: float
    dir_deriv: float
    window_max: float
    obj_next: float
    nfe_line_search: int
    restarted: bool


@dataclass
class SolveResult:
    X: Any
    obj: float
    grad_norm: float
    rel_grad_norm: float
    iterations: int
    nfe: int
    wall_time: float
    feasibility: float
    obj_history: list[float] = field(default_factory=list)
    grad_history: list[float] = field(default_factory=list)
    feas_history: list[float] = field(default_factory=list)
    trace: list[IterationRecord] = field(default_factory=list)
    restored: bool = False
    converged: bool = False


class LineSearchError(RuntimeError):
    """Backtracking exhausted without satisfying the acceptance condition.

    Carries the best (lowest-objective) trial seen, if any, and the
    number of objective evaluations spent.
    """

    def __init__(self, message: str, best: tuple | None, nfe_used: int):
        super().__init__(message)
        self.best = best  # (t, X_t, f_t) or None
        self.nfe_used = nfe_used


def _beta_from_products(gn_sq: float, cross: float, g_old_norm: float) -> float:
    if g_old_norm <= 0.0:
        raise DegeneracyError("previous gradient norm must be positive")
    if gn_sq == 0.0:
        return 0.0
    return (gn_sq - np.sqrt(gn_sq) / g_old_norm * cross) / g_old_norm**2


def beta_mprp(geom, g_new, g_old_norm: float, transported_g_old) -> float:
    """Modified PRP coefficient under the weighted metric.

    beta = (||g+||^2 - (||g+|| / ||g||) |<g+, T(g)>|) / ||g||^2.

    Never exceeds ||g+||^2 / ||g||^2, and is nonnegative whenever the
    transport does not increase the norm of g (Cauchy-Schwarz).
    """
    gn_sq = geom.inner(g_new, g_new)
    cross = abs(geom.inner(g_new, transported_g_old))
    return _beta_from_products(gn_sq, cross, g_old_norm)


def _bb_from_products(sts: float, sty: float, params: SolverParams) -> float:
    if sty <= 1e-30 * sts or sts == 0.0:
        return params.t_max
    return max(min(sts / sty, params.t_max), params.t_min)


def bb_initial_step(geom, S, Y_diff, params: SolverParams) -> float:
    """Clamped Barzilai-Borwein trial step <S,S> / |<Y,S>|.

    S is the accepted displacement t Z and Y the gradient difference
    after transport.  A vanishing denominator falls back to t_max.
    """
    return _bb_from_products(geom.inner(S, S), abs(geom.inner(Y_diff, S)), params)


def line_search_nonmonotone(
    objective: Callable[[Any], float],
    retract: Callable[[float], Any],
    dir_deriv: float,
    f_window: Sequence[float],
    t_init: float,
    params: SolverParams,
) -> tuple[float, Any, float, int]:
    """Backtracking search against the worst of the recent objective values.

    Accepts the first t = t_init * sigma^h with

        f(R(t)) <= max(f_window) + delta * t * dir_deriv.

    Retraction failures count as failed trials and shrink t without an
    objective evaluation.  Returns ``(t, X_new, f_new, nfe_used)`` where
    nfe_used is the number of objective evaluations spent.
    """
    if dir_deriv >= 0.0:
        raise DegeneracyError("line search needs a descent direction")
    if len(f_window) == 0:
        raise ValueError("objective window must not be empty")
    f_max = max(f_window)
    t = t_init
    nfe = 0
    best: tuple | None = None
    for _ in range(params.max_backtracks + 1):
        try:
            X_t = retract(t)
        except StepTooLargeError:
            t *= params.sigma
            continue
        f_t = objective(X_t)
        nfe += 1
        if np.isfinite(f_t) and (best is None or f_t < best[2]):
            best = (t, X_t, f_t)
        if np.isfinite(f_t) and f_t <= f_max + params.delta * t * dir_deriv:
            return t, X_t, f_t, nfe
        t *= params.sigma
    raise LineSearchError(
        f"no acceptable step within {params.max_backtracks} backtracks", best, nfe
    )


def window_maxima(obj_history: Sequence[float], q: int) -> list[float]:
    """Maxima over consecutive full blocks of q objective values."""
    return [max(obj_history[i : i + q]) for i in range(0, len(obj_history) - q + 1, q)]


def verify_window_decrease(result: "SolveResult", params: SolverParams) -> bool:
    """Runtime check of the windowed-decrease property of the line search.

    The maxima over consecutive blocks of q objective values must
    strictly decrease, by at least the accepted Armijo decrements.  A
    tie between neighboring maxima is tolerated only when the
    guaranteed decrement for that block is smaller than the floating
    point resolution of the objective values, where strictness is not
    representable.
    """
    q = params.q
    maxima = window_maxima(result.obj_history, q)
    for j in range(len(maxima) - 1):
        if maxima[j + 1] < maxima[j]:
            continue
        if maxima[j + 1] > maxima[j]:
            return False
        block = (j + 1) * q
        decrements = [
            params.delta * rec.step * -rec.dir_deriv
            for rec in result.trace[max(block - 1, 0) : block + q - 1]
        ]
        if not decrements or min(decrements) > 8.0 * np.spacing(abs(maxima[j])):
            return False
    return True


def solve(problem: Problem, X0, params: SolverParams | None = None) -> SolveResult:
    """Run the non-monotone CG iteration from a feasible X0.

    Stops when the gradient norm falls to ``params.epsilon`` or after
    ``params.max_iter`` iterations.  The direction is re-seeded with the
    steepest descent direction whenever the CG update fails to produce
    descent, and a failed line search is retried once from the steepest
    direction before giving up.  If the final iterate has drifted off
    the constraint beyond ``params.epsilon_c`` it is restored by
    Gram-Schmidt in the weighted inner product.
    """
    params = params or SolverParams()
    geom = problem.geometry
    t_start = time.perf_counter()

    nfe = 0
    X = X0
    f = float(problem.objective(X))
    nfe += 1
    g = geom.rgrad(X, problem.euclidean_gradient(X))
    wg = geom.weighted(g)  # metric image M g, shared by every inner product below
    gnorm = float(np.sqrt(max(geom.dot(g, wg), 0.0)))
    gnorm0 = gnorm

    obj_history = [f]
    grad_history = [gnorm]
    feas_history = [geom.feasibility(X)]
    window: deque[float] = deque([f], maxlen=params.q)
    trace: list[IterationRecord] = []

    Z = -g
    wZ = -wg
    steepest = True
    t_trial = params.t0
    k = 0
    converged = gnorm <= params.epsilon
    search_failed = False

    while not converged and k < params.max_iter:
        dir_deriv = geom.dot(Z, wg)
        step = geom.step(X, Z, params.retraction, params.transport, params.strategy)
        try:
            t, X_new, f_new, nfe_ls = line_search_nonmonotone(
                problem.objective, step.retract, dir_deriv, window, t_trial, params
            )
            nfe += nfe_ls
        except LineSearchError as err:
            nfe += err.nfe_used
            if steepest:
                search_failed = True
                break
            Z = -g  # restart from steepest descent and retry this iteration
            wZ = -wg
            steepest = True
            continue

        g_new = geom.rgrad(X_new, problem.euclidean_gradient(X_new))
        wg_new = geom.weighted(g_new)
        gn_sq = max(geom.dot(g_new, wg_new), 0.0)
        gnorm_new = float(np.sqrt(gn_sq))

        transported_dir = step.transport_direction(t)
        transported_grad = step.transport(t, g)
        beta = _beta_from_products(gn_sq, abs(geom.dot(transported_grad, wg_new)), gnorm)
        Z_new = -g_new + beta * transported_dir
        wZ_new = -wg_new + beta * geom.weighted(transported_dir)
        restarted = False
        znorm_new = np.sqrt(max(geom.dot(Z_new, wZ_new), 0.0))
        if geom.dot(Z_new, wg_new) >= -1e-12 * gnorm_new * znorm_new:
            Z_new = -g_new  # CG direction lost descent; fall back
            wZ_new = -wg_new
            restarted = True

        # Barzilai-Borwein products for S = t Z and Y = g_new - T(g_old)
        sts = t * t * geom.dot(Z, wZ)
        sty = t * abs(geom.dot(g_new - transported_grad, wZ))
        trace.append(
            IterationRecord(
                k=k,
                obj=f,
                grad_norm=gnorm,
                step=t,
                beta=beta,
                dir_deriv=dir_deriv,
                window_max=max(window),
                obj_next=f_new,
                nfe_line_search=nfe_ls,
                restarted=restarted,
            )
        )
        t_trial = _bb_from_products(sts, sty, params)

        X, f, g, gnorm = X_new, f_new, g_new, gnorm_new
        wg = wg_new
        Z, wZ, steepest = Z_new, wZ_new, restarted
        window.append(f)
        obj_history.append(f)
        grad_history.append(gnorm)
        feas_history.append(geom.feasibility(X))
        k += 1
        converged = gnorm <= params.epsilon

    restored = False
    feasibility = geom.feasibility(X)
    if feasibility > params.epsilon_c:
        X = geom.restore(X)
        restored = True
        f = float(problem.objective(X))
        nfe += 1
        g = geom.rgrad(X, problem.euclidean_gradient(X))
        gnorm = geom.norm(g)
        feasibility = geom.feasibility(X)

    return SolveResult(
        X=X,
        obj=f,
        grad_norm=gnorm,
        rel_grad_norm=gnorm / gnorm0 if gnorm0 > 0.0 else 0.0,
        iterations=k,
        nfe=nfe,
        wall_time=time.perf_counter() - t_start,
        feasibility=feasibility,
        obj_history=obj_history,
        grad_history=grad_history,
        feas_history=feas_history,
        trace=trace,
        restored=restored,
        converged=converged and not search_failed,
    )
