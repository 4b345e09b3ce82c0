"""Command-line benchmark harness.

Subcommands
-----------
gevp   generalized eigenvalue benchmark (generated or user matrices)
cca    canonical correlation benchmark
check  run the geometry/solver property suite and exit nonzero on failure

Seeds make runs reproducible: trial t uses seed + t, and rerunning an
invocation with ``--threads 1`` rewrites the same CSV byte for byte
except the cpu column.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import RunConfig, build_metadata, rows_to_csv, rows_to_json, run_benchmark, VARIANTS
from .checks import run_checks
from .io import load_matrix
from .problems import CcaInstance, GevpInstance, GevpKind
from .solver import SolverParams

_PARAM_KEYS = (
    "epsilon",
    "epsilon_c",
    "delta",
    "q",
    "sigma",
    "t0",
    "t_min",
    "t_max",
    "max_iter",
    "max_backtracks",
)


def _load_params(path: str | None) -> SolverParams:
    if path is None:
        return SolverParams()
    data = json.loads(Path(path).read_text())
    unknown = set(data) - set(_PARAM_KEYS)
    if unknown:
        raise SystemExit(f"unknown solver parameter(s) in {path}: {sorted(unknown)}")
    return SolverParams(**data)


def _parse_variants(spec: str) -> tuple[str, ...]:
    if spec == "all":
        return tuple(VARIANTS)
    variants = tuple(v.strip() for v in spec.split(",") if v.strip())
    for v in variants:
        if v not in VARIANTS:
            raise SystemExit(f"unknown variant {v!r}; choose from {', '.join(VARIANTS)} or 'all'")
    return variants


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("GSTIEFEL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise SystemExit(f"GSTIEFEL_THREADS must be an integer, got {env!r}")
    return 1


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--variant", default="algor1a", help="comma list or 'all'")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--params", default=None, help="JSON file overriding solver defaults")
    parser.add_argument("--threads", type=int, default=None, help="parallel trials (default 1)")
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--save-instance", default=None, metavar="DIR",
                        help="write the trial-0 instance as a Matrix Market bundle")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gstiefel-cg",
        description="Conjugate-gradient benchmarks on generalized Stiefel manifolds",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    gevp = sub.add_parser("gevp", help="generalized eigenvalue benchmark")
    gevp.add_argument("--kind", choices=("diag", "random"), default="diag")
    gevp.add_argument("--n", type=int, default=200)
    gevp.add_argument("--p", type=int, default=5)
    gevp.add_argument("--matrix-a", default=None, help="Matrix Market file for A")
    gevp.add_argument("--matrix-m", default=None, help="Matrix Market file for M")
    gevp.add_argument("--instance", default=None, metavar="DIR", help="load a saved bundle")
    _add_common(gevp)

    cca = sub.add_parser("cca", help="canonical correlation benchmark")
    cca.add_argument("--m", type=int, default=1000)
    cca.add_argument("--n", type=int, default=100)
    cca.add_argument("--p", type=int, default=10)
    cca.add_argument("--t-samples", type=int, default=1000)
    cca.add_argument("--n-diag", default=None,
                     help="comma list of strictly decreasing positive weights")
    cca.add_argument("--matrix-cx", default=None)
    cca.add_argument("--matrix-cy", default=None)
    cca.add_argument("--matrix-cxy", default=None)
    cca.add_argument("--instance", default=None, metavar="DIR", help="load a saved bundle")
    _add_common(cca)

    chk = sub.add_parser("check", help="run the property suite")
    chk.add_argument("--n", type=int, default=60)
    chk.add_argument("--p", type=int, default=4)
    chk.add_argument("--seed", type=int, default=0)
    return parser


def _gevp_config(args) -> RunConfig:
    fixed = None
    if args.instance:
        from .io import load_gevp_bundle

        fixed, _ = load_gevp_bundle(args.instance)
    elif args.matrix_a or args.matrix_m:
        if not (args.matrix_a and args.matrix_m):
            raise SystemExit("--matrix-a and --matrix-m must be given together")
        fixed = GevpInstance(A=load_matrix(args.matrix_a), M=load_matrix(args.matrix_m), p=args.p)
    n = fixed.A.shape[0] if fixed is not None else args.n
    return RunConfig(
        subcommand="gevp",
        variants=_parse_variants(args.variant),
        n=n,
        p=fixed.p if fixed is not None else args.p,
        kind=GevpKind(args.kind),
        trials=args.trials,
        seed=args.seed,
        params=_load_params(args.params),
        threads=_resolve_threads(args),
        fixed_gevp=fixed,
    )


def _cca_config(args) -> RunConfig:
    fixed = None
    weights = None
    if args.n_diag:
        weights = tuple(float(x) for x in args.n_diag.split(","))
    if args.instance:
        from .io import load_cca_bundle

        fixed, _ = load_cca_bundle(args.instance)
    elif args.matrix_cx or args.matrix_cy or args.matrix_cxy:
        if not (args.matrix_cx and args.matrix_cy and args.matrix_cxy):
            raise SystemExit("--matrix-cx, --matrix-cy and --matrix-cxy must be given together")
        w = np.asarray(weights, dtype=float) if weights else None
        from .problems import default_cca_weights

        if w is None:
            w = default_cca_weights(args.p)
        fixed = CcaInstance(
            Cx=load_matrix(args.matrix_cx),
            Cy=load_matrix(args.matrix_cy),
            Cxy=load_matrix(args.matrix_cxy),
            weights=w,
        )
    return RunConfig(
        subcommand="cca",
        variants=_parse_variants(args.variant),
        n=fixed.n if fixed is not None else args.n,
        m=fixed.m if fixed is not None else args.m,
        p=fixed.p if fixed is not None else args.p,
        t_samples=args.t_samples,
        trials=args.trials,
        seed=args.seed,
        params=_load_params(args.params),
        weights=weights,
        threads=_resolve_threads(args),
        fixed_cca=fixed,
    )


def _save_instance(args, config: RunConfig) -> None:
    if not getattr(args, "save_instance", None):
        return
    from .bench import _build_problem  # instance construction mirrors trial 0
    from .io import save_cca_bundle, save_gevp_bundle
    from .problems import generate_cca_instance, generate_gevp_instance

    if config.subcommand == "gevp":
        inst = config.fixed_gevp or generate_gevp_instance(
            config.kind, config.n, config.p, config.seed
        )
        save_gevp_bundle(args.save_instance, inst, kind=config.kind.value, seed=config.seed)
    else:
        inst = config.fixed_cca or generate_cca_instance(
            config.m, config.n, config.p, config.t_samples, config.seed, config.weights
        )
        save_cca_bundle(args.save_instance, inst, seed=config.seed)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if args.subcommand == "check":
        results = run_checks(n=args.n, p=args.p, seed=args.seed)
        failures = 0
        for res in results:
            tag = "PASS" if res.passed else "FAIL"
            print(f"[{tag}] {res.name}: {res.detail}")
            failures += 0 if res.passed else 1
        print(f"{len(results) - failures}/{len(results)} checks passed")
        return 1 if failures else 0

    config = _gevp_config(args) if args.subcommand == "gevp" else _cca_config(args)
    _save_instance(args, config)
    rows, records = run_benchmark(config)
    if args.format == "csv":
        _emit(rows_to_csv(rows), args.out)
    else:
        _emit(rows_to_json(rows, records, build_metadata(config, __version__)), args.out)
    if any(row.errors for row in rows):
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
