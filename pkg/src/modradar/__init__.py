"""Scaling laboratory for clustered small-world overlays and lymph-node architecture."""

from .errors import DomainError, FitError, ModradarError, ResourceError, UsageError
from .harness import (
    ScalingFit,
    SweepSpec,
    compare_models,
    fit_scaling,
    robustness_experiment,
    run_sweep,
)
from .immune import (
    LnArchitecture,
    OrganismParams,
    compare_policies,
    optimize_architecture,
    total_response_time,
)
from .overlay import OverlayConfig, OverlayNetwork, build_overlay, resolve_shape
from .routing import FailureMask, Query, QueryOutcome, batch_queries, flood_local, route_global, run_query
from .sizing import (
    SizingPolicy,
    TotalTimeModel,
    balance_cluster_size,
    minimize_cluster_size,
    minimize_tradeoff,
    model_total_time,
    parse_policy,
)
from .torus import TorusCoord, distance_census, lattice_distance, torus_diameter

__version__ = "0.1.0"
