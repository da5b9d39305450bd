"""Learn transportation-network state from observed individual routes.

The package infers two kinds of shared network state from revealed route
choices, in batch fixed-point and online streaming modes:

* heterogeneous per-agent link costs consistent with every agent's observed
  route being a shortest path, and
* nonnegative dual prices on capacity-limited links that rationalize routes
  under fixed base costs.

See :mod:`netinverse.cli` for the command-line surface.
"""

from .errors import (
    DataError,
    InconsistentObservation,
    NetinverseError,
    NoUsableObservations,
    SolverError,
    UnreachableError,
)
from .flows import (
    FlowSolution,
    assignment_shares,
    shortest_path,
    solve_multicommodity,
    write_flow_solution,
)
from .inverse import InverseResult, infer_dual_prices, infer_link_costs
from .learner import (
    FixedPointTrace,
    OnlineLogEntry,
    OnlineState,
    estimate_costs,
    load_state,
    online_update,
    recover_prices,
    run_monitor,
    save_state,
    summarize_heterogeneity,
    write_heterogeneity,
    write_online_log,
    write_trace,
)
from .network import (
    CapacitySpec,
    DemandEntry,
    DemandTable,
    Link,
    LinkId,
    Network,
    NodeId,
    Observation,
    Path,
    PriceVector,
    enumerate_paths,
    load_capacities,
    load_demand,
    load_network,
    load_observations,
    path_cost,
    validate_path,
    write_network,
    write_observations,
)
from .scenarios import (
    ScenarioSpec,
    build_regime_stream,
    decompose_path_flows,
    generate_observations,
    load_scenario,
    sample_flow_observations,
    simulate_gateway_stream,
    simulate_population,
)
from .simplex import LinearProgram, LpSolution, Status, solve

__version__ = "0.1.0"

__all__ = [
    "CapacitySpec",
    "DataError",
    "DemandEntry",
    "DemandTable",
    "FixedPointTrace",
    "FlowSolution",
    "InconsistentObservation",
    "InverseResult",
    "LinearProgram",
    "Link",
    "LinkId",
    "LpSolution",
    "NetinverseError",
    "Network",
    "NoUsableObservations",
    "NodeId",
    "Observation",
    "OnlineLogEntry",
    "OnlineState",
    "Path",
    "PriceVector",
    "ScenarioSpec",
    "SolverError",
    "Status",
    "UnreachableError",
    "assignment_shares",
    "build_regime_stream",
    "decompose_path_flows",
    "enumerate_paths",
    "estimate_costs",
    "generate_observations",
    "infer_dual_prices",
    "infer_link_costs",
    "load_capacities",
    "load_demand",
    "load_network",
    "load_observations",
    "load_scenario",
    "load_state",
    "online_update",
    "path_cost",
    "recover_prices",
    "run_monitor",
    "sample_flow_observations",
    "save_state",
    "shortest_path",
    "simulate_gateway_stream",
    "simulate_population",
    "solve",
    "solve_multicommodity",
    "summarize_heterogeneity",
    "validate_path",
    "write_flow_solution",
    "write_heterogeneity",
    "write_network",
    "write_observations",
    "write_online_log",
    "write_trace",
]
