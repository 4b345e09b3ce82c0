"""Self-contained property checks behind the ``check`` CLI subcommand.

Each check exercises one contract of the geometry or the solver on
seeded random inputs and reports a worst-case residual.  They are
deliberately redundant with the test suite: this is the fast field
diagnostic a user can run against their own build.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cayley import CayleyKernel, RetractionStrategy, angle_bound, skew_factors
from .geometry import retract_cholqr, retract_polar
from .manifold import MetricContext
from .problems import GevpKind, generate_gevp_instance, gevp_oracle, gevp_problem
from .solver import SolverParams, solve

__all__ = ["CheckResult", "run_checks"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_spd(n: int, cond: float, rng: np.random.Generator) -> np.ndarray:
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = np.logspace(0.0, np.log10(cond), n)
    return (Q * eigs) @ Q.T


def run_checks(n: int = 60, p: int = 4, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    ctx = MetricContext(_random_spd(n, 1e4, rng))
    results: list[CheckResult] = []

    def record(name: str, worst: float, tol: float, fmt: str = "residual"):
        results.append(CheckResult(name, worst <= tol, f"{fmt} {worst:.3e} (tol {tol:.1e})"))

    # metric bilinearity / symmetry
    worst = 0.0
    for _ in range(5):
        U, V = rng.standard_normal((2, n, p))
        a, b = rng.standard_normal(2)
        worst = max(worst, abs(ctx.inner(U, V) - ctx.inner(V, U)))
        W = rng.standard_normal((n, p))
        lin = abs(ctx.inner(a * U + b * W, V) - (a * ctx.inner(U, V) + b * ctx.inner(W, V)))
        worst = max(worst, lin / (1.0 + abs(ctx.inner(U, V))))
    record("metric symmetry and bilinearity", worst, 1e-10)

    # tangent projection: idempotence and tangency
    X = ctx.random_point(p, rng)
    worst = 0.0
    for _ in range(5):
        N = rng.standard_normal((n, p))
        Z = ctx.project_tangent(X, N)
        worst = max(worst, np.linalg.norm(ctx.project_tangent(X, Z) - Z, "fro"))
        worst = max(worst, ctx.tangency_residual(X, Z))
    record("tangent projection", worst, 1e-10)

    # gradient conversion matches the ambient pairing
    worst = 0.0
    eg = rng.standard_normal((n, p))
    G = ctx.egrad_to_rgrad(X, eg)
    for _ in range(10):
        xi = ctx.random_tangent(X, rng)
        worst = max(worst, abs(ctx.inner(G, xi) - float(np.sum(eg * xi))))
    record("gradient conversion pairing", worst, 1e-8)

    # orthonormalization at high condition number
    hard = MetricContext(_random_spd(n, 1e6, rng))
    feas = hard.check_feasibility(hard.m_orthonormalize(rng.standard_normal((n, p))))
    record("weighted Gram-Schmidt feasibility (cond 1e6)", feas, 1e-12)

    # retraction: identity, feasibility, path agreement
    Z = ctx.random_tangent(X, rng)
    kern_full = CayleyKernel(ctx, X, Z, RetractionStrategy.FULL)
    kern_low = CayleyKernel(ctx, X, Z, RetractionStrategy.LOW_RANK)
    worst = np.linalg.norm(kern_full.retract(0.0) - X, "fro")
    agree = 0.0
    for t in (0.1, 0.7, 1.5):
        Xt_f, Xt_l = kern_full.retract(t), kern_low.retract(t)
        worst = max(worst, ctx.check_feasibility(Xt_f), ctx.check_feasibility(Xt_l))
        agree = max(agree, np.linalg.norm(Xt_f - Xt_l, "fro") / (1.0 + np.linalg.norm(Xt_f)))
    record("Cayley retraction feasibility", worst, 1e-10)
    record("dense vs low-rank retraction agreement", agree, 1e-10)

    # second-order agreement with X + tZ
    ts = np.array([1e-1, 1e-2, 1e-3])
    errs = [np.linalg.norm(kern_low.retract(t) - (X + t * Z), "fro") for t in ts]
    slope = np.polyfit(np.log(ts), np.log(errs), 1)[0]
    results.append(CheckResult("retraction second-order slope", slope >= 1.9, f"slope {slope:.3f}"))

    # differentiated retraction vs central differences
    h, t = 1e-5, 0.8
    fd = (kern_low.retract(t + h) - kern_low.retract(t - h)) / (2.0 * h)
    td = kern_low.transport_diff(t)
    record(
        "differentiated-retraction transport vs finite differences",
        np.linalg.norm(fd - td, "fro") / (1.0 + np.linalg.norm(td, "fro")),
        1e-6,
    )

    # transported direction never grows; isometric transport preserves norms
    worst_rw, worst_iso = 0.0, 0.0
    for t in (0.1, 1.0, 2.0):
        worst_rw = max(worst_rw, ctx.norm(kern_low.transport_diff(t)) / ctx.norm(Z) - 1.0)
        Y = ctx.random_tangent(X, rng)
        worst_iso = max(worst_iso, abs(ctx.norm(kern_low.transport_iso(t, Y)) - ctx.norm(Y)))
    record("transported direction norm growth", worst_rw, 1e-12, fmt="growth")
    record("isometric transport norm drift", worst_iso, 1e-10)

    # identity linking the two transports of the direction
    worst = 0.0
    Wd = skew_factors(ctx, X, Z).dense()
    WM2 = Wd @ ctx.M @ Wd @ ctx.M
    for t in (0.5, 1.0, 2.0):
        lhs = kern_low.transport_iso(t)
        rhs = (np.eye(n) - (t**2 / 4.0) * WM2) @ kern_low.transport_diff(t)
        worst = max(worst, np.linalg.norm(lhs - rhs, "fro") / np.linalg.norm(rhs, "fro"))
    record("transport relation identity", worst, 1e-9)

    # angle between the transports stays above its analytic floor
    worst = 0.0
    for t in (0.1, 1.0, 5.0):
        cos_theta, floor = angle_bound(ctx, X, Z, t)
        worst = max(worst, floor - cos_theta)
    record("transport angle above analytic floor", worst, 1e-10, fmt="violation")

    # baseline retractions stay feasible and first-order consistent
    worst = 0.0
    for t in (0.0, 0.3, 1.0):
        worst = max(worst, ctx.check_feasibility(retract_cholqr(ctx, X, Z, t)))
        worst = max(worst, ctx.check_feasibility(retract_polar(ctx, X, Z, t)))
    record("baseline retraction feasibility", worst, 1e-11)

    # solver end-to-end against the dense eigenvalue oracle
    inst = generate_gevp_instance(GevpKind.DIAG, 80, 3, seed)
    problem = gevp_problem(inst)
    X0 = problem.geometry.random_point(np.random.default_rng(seed + 1))
    result = solve(problem, X0, SolverParams())
    target = gevp_oracle(inst)
    rel = abs(result.obj - target) / abs(target)
    blocks_ok = True
    hist = result.obj_history
    q = 2
    maxima = [max(hist[i : i + q]) for i in range(0, len(hist) - q + 1, q)]
    blocks_ok = all(b < a for a, b in zip(maxima, maxima[1:]))
    results.append(
        CheckResult(
            "solver reaches the eigenvalue oracle",
            result.converged and rel <= 1e-6,
            f"relative gap {rel:.3e}, converged={result.converged}",
        )
    )
    results.append(
        CheckResult(
            "objective window maxima strictly decrease",
            blocks_ok,
            f"{len(maxima)} windows",
        )
    )
    return results
