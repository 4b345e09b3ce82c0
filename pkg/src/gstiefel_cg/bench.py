"""Benchmark harness: seeded trials, averaged report rows, CSV/JSON output."""

from __future__ import annotations

import concurrent.futures
import io as _io
import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .cayley import RetractionStrategy
from .geometry import RetractionKind, TransportKind
from .problems import (
    CcaInstance,
    GevpInstance,
    GevpKind,
    cca_problem,
    generate_cca_instance,
    generate_gevp_instance,
    gevp_problem,
)
from .solver import SolverParams, solve

__all__ = [
    "VARIANTS",
    "RunConfig",
    "TrialRecord",
    "ReportRow",
    "run_benchmark",
    "rows_to_csv",
    "build_metadata",
    "CSV_HEADER",
]

CSV_HEADER = "algorithm,obj,nrmGrad,rnrmGrad,itr,nfe,cpu,feasi,converged"

#: Algorithm variants: (retraction, transport, evaluation strategy).
VARIANTS: dict[str, tuple[RetractionKind, TransportKind, RetractionStrategy]] = {
    # low-rank Cayley retraction + differentiated-retraction transport
    "algor1a": (RetractionKind.CAYLEY, TransportKind.DIFF_RETRACTION, RetractionStrategy.AUTO),
    # low-rank Cayley retraction + isometric transport
    "algor1b": (RetractionKind.CAYLEY, TransportKind.ISOMETRIC, RetractionStrategy.AUTO),
    # Cholesky-QR retraction + projection transport
    "cg-cholqr": (RetractionKind.CHOLQR, TransportKind.PROJECTION, RetractionStrategy.AUTO),
    # polar retraction + projection transport
    "cg-pol": (RetractionKind.POLAR, TransportKind.PROJECTION, RetractionStrategy.AUTO),
    # dense Cayley retraction (no low-rank shortcut) + projection transport
    "cg-cayley-full": (RetractionKind.CAYLEY, TransportKind.PROJECTION, RetractionStrategy.FULL),
}


def variant_params(name: str, base: SolverParams | None = None) -> SolverParams:
    """Solver parameters configured for a named algorithm variant."""
    if name not in VARIANTS:
        raise ValueError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}")
    retraction, transport, strategy = VARIANTS[name]
    base = base or SolverParams()
    return replace(base, retraction=retraction, transport=transport, strategy=strategy)


@dataclass(frozen=True)
class RunConfig:
    """One benchmark invocation (a problem family, variants, and trial seeds)."""

    subcommand: str  # "gevp" | "cca"
    variants: tuple[str, ...] = ("algor1a",)
    n: int = 200
    m: int = 0  # CCA row dimension (first view)
    p: int = 5
    kind: GevpKind = GevpKind.DIAG
    t_samples: int = 1000
    trials: int = 10
    seed: int = 0
    params: SolverParams = field(default_factory=SolverParams)
    weights: tuple[float, ...] | None = None  # explicit CCA weight ladder
    threads: int = 1
    fixed_gevp: GevpInstance | None = None  # user-supplied matrices win over generation
    fixed_cca: CcaInstance | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.subcommand not in ("gevp", "cca"):
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}")


@dataclass(frozen=True)
class TrialRecord:
    variant: str
    seed: int
    obj: float
    nrm_grad: float
    rnrm_grad: float
    itr: int
    nfe: int
    cpu: float
    feasi: float
    converged: bool
    error: str | None = None


@dataclass(frozen=True)
class ReportRow:
    """Per-variant averages over the configured trials."""

    algorithm: str
    obj: float
    nrm_grad: float
    rnrm_grad: float
    itr: float
    nfe: float
    cpu: float
    feasi: float
    converged: int
    trials: int
    errors: int

    def csv_line(self) -> str:
        return (
            f"{self.algorithm},{self.obj:.6e},{self.nrm_grad:.3e},{self.rnrm_grad:.3e},"
            f"{self.itr:.1f},{self.nfe:.1f},{self.cpu:.3f},{self.feasi:.3e},"
            f"{self.converged}/{self.trials}"
        )


def _build_problem(config: RunConfig, seed_t: int):
    if config.subcommand == "gevp":
        if config.fixed_gevp is not None:
            inst = config.fixed_gevp
        else:
            inst = generate_gevp_instance(config.kind, config.n, config.p, seed_t)
        return gevp_problem(inst)
    if config.fixed_cca is not None:
        inst = config.fixed_cca
    else:
        inst = generate_cca_instance(
            config.m, config.n, config.p, config.t_samples, seed_t, config.weights
        )
    return cca_problem(inst)


def _run_trial(config: RunConfig, variant: str, trial: int) -> TrialRecord:
    seed_t = config.seed + trial
    try:
        problem = _build_problem(config, seed_t)
        rng = np.random.default_rng([seed_t, 1])  # separate stream from instance generation
        X0 = problem.geometry.random_point(rng)
        result = solve(problem, X0, variant_params(variant, config.params))
        obj = -result.obj if problem.report_negated else result.obj
        return TrialRecord(
            variant=variant,
            seed=seed_t,
            obj=obj,
            nrm_grad=result.grad_norm,
            rnrm_grad=result.rel_grad_norm,
            itr=result.iterations,
            nfe=result.nfe,
            cpu=result.wall_time,
            feasi=result.feasibility,
            converged=result.converged,
        )
    except Exception as exc:  # a hard trial failure flags the row, it must not abort the run
        return TrialRecord(
            variant=variant,
            seed=seed_t,
            obj=float("nan"),
            nrm_grad=float("nan"),
            rnrm_grad=float("nan"),
            itr=0,
            nfe=0,
            cpu=0.0,
            feasi=float("nan"),
            converged=False,
            error=f"{type(exc).__name__}: {exc}",
        )


def run_benchmark(config: RunConfig) -> tuple[list[ReportRow], list[TrialRecord]]:
    """Run every (variant, trial) cell and average into one row per variant.

    Trial t uses seed ``config.seed + t`` for both the instance and the
    starting point, so each trial is reproducible on its own and every
    variant sees identical inputs.  With ``threads > 1`` trials run in a
    thread pool; report assembly stays deterministic either way.
    """
    cells = [(variant, t) for variant in config.variants for t in range(config.trials)]
    if config.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(lambda c: _run_trial(config, *c), cells))
    else:
        records = [_run_trial(config, variant, t) for variant, t in cells]

    rows = []
    for variant in config.variants:
        recs = [r for r in records if r.variant == variant]
        ok = [r for r in recs if r.error is None]
        errors = len(recs) - len(ok)

        def avg(key):
            vals = [getattr(r, key) for r in ok]
            return float(np.mean(vals)) if vals else float("nan")

        rows.append(
            ReportRow(
                algorithm=variant,
                obj=avg("obj"),
                nrm_grad=avg("nrm_grad"),
                rnrm_grad=avg("rnrm_grad"),
                itr=avg("itr"),
                nfe=avg("nfe"),
                cpu=avg("cpu"),
                feasi=avg("feasi"),
                converged=sum(1 for r in ok if r.converged),
                trials=len(recs),
                errors=errors,
            )
        )
    return rows, records


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = _io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row in rows:
        buf.write(row.csv_line() + "\n")
    return buf.getvalue()


def build_metadata(config: RunConfig, version: str) -> dict:
    """Self-describing block attached to JSON output."""
    params = {
        k: (v.value if hasattr(v, "value") else v) for k, v in asdict(config.params).items()
    }
    return {
        "tool": "gstiefel-cg",
        "version": version,
        "generated_unix_time": int(time.time()),
        "config": {
            "subcommand": config.subcommand,
            "variants": list(config.variants),
            "n": config.n,
            "m": config.m,
            "p": config.p,
            "kind": config.kind.value if isinstance(config.kind, GevpKind) else config.kind,
            "t_samples": config.t_samples,
            "trials": config.trials,
            "seed": config.seed,
            "threads": config.threads,
        },
        "params": params,
        "columns": {
            "obj": "objective value (trace objectives reported with their natural sign)",
            "nrmGrad": "Riemannian gradient norm at the final iterate",
            "rnrmGrad": "nrmGrad divided by the gradient norm at the starting point",
            "itr": "iterations",
            "nfe": "objective evaluations",
            "cpu": "wall-clock seconds of the solve call only",
            "feasi": "constraint violation ||X^T M X - I||_F (max over factors)",
            "converged": "converged trials / total trials",
        },
    }


def rows_to_json(rows: list[ReportRow], records: list[TrialRecord], metadata: dict) -> str:
    payload = {
        "metadata": metadata,
        "rows": [asdict(r) for r in rows],
        "trials": [asdict(r) for r in records],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
