"""Conjugate-gradient optimization on generalized Stiefel manifolds.

Feasible sets {X : X^T M X = I} under the weighted metric tr(U^T M V),
with a Cayley-transform retraction, two low-rank vector transports, a
non-monotone modified-PRP conjugate gradient solver, and a benchmark
harness for generalized eigenvalue and canonical correlation problems.
"""

__version__ = "0.1.0"

from .cayley import (
    CayleyKernel,
    RetractionStrategy,
    SkewFactors,
    StepTooLargeError,
    angle_bound,
    retract,
    skew_factors,
    transport_diff,
    transport_iso,
)
from .geometry import (
    Pair,
    ProductGeometry,
    RetractionKind,
    StiefelGeometry,
    TransportKind,
    baseline_retraction,
    retract_cholqr,
    retract_polar,
)
from .manifold import (
    DegeneracyError,
    DimensionError,
    ManifoldError,
    MetricContext,
)
from .problems import (
    CcaInstance,
    GevpInstance,
    GevpKind,
    cca_oracle,
    cca_problem,
    default_cca_weights,
    generate_cca_instance,
    generate_gevp_instance,
    gevp_oracle,
    gevp_problem,
)
from .solver import (
    IterationRecord,
    LineSearchError,
    Problem,
    SolveResult,
    SolverParams,
    bb_initial_step,
    beta_mprp,
    line_search_nonmonotone,
    solve,
)

__all__ = [
    "__version__",
    "CayleyKernel",
    "RetractionStrategy",
    "SkewFactors",
    "StepTooLargeError",
    "angle_bound",
    "retract",
    "skew_factors",
    "transport_diff",
    "transport_iso",
    "Pair",
    "ProductGeometry",
    "RetractionKind",
    "StiefelGeometry",
    "TransportKind",
    "baseline_retraction",
    "retract_cholqr",
    "retract_polar",
    "DegeneracyError",
    "DimensionError",
    "ManifoldError",
    "MetricContext",
    "CcaInstance",
    "GevpInstance",
    "GevpKind",
    "cca_oracle",
    "cca_problem",
    "default_cca_weights",
    "generate_cca_instance",
    "generate_gevp_instance",
    "gevp_oracle",
    "gevp_problem",
    "IterationRecord",
    "LineSearchError",
    "Problem",
    "SolveResult",
    "SolverParams",
    "bb_initial_step",
    "beta_mprp",
    "line_search_nonmonotone",
    "solve",
]
