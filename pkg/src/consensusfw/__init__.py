"""Penalty-based conditional gradient methods for consensus optimization.

A numpy library for minimizing a sum of per-node smooth convex objectives
over a connected graph, subject to per-node compact convex constraints and
the consensus requirement that all node blocks agree.  The solvers use one
linear-minimization call and one neighbor exchange per node per iteration,
with an increasing penalty on disagreement, and come with runtime
diagnostics that evaluate every convergence bound along the run.

Quick start::

    from consensusfw import quadratic_toy, run, SolverConfig

    problem, info = quadratic_toy()
    trace = run(problem, SolverConfig(max_iter=10_000, log_every=100),
                rho=1.0, f_star=info["f_star"])
    print(trace.records[-1])
"""

from .diagnostics import (
    BoundParams,
    Trace,
    TraceRecord,
    consensus_bound,
    gap_bound,
    gap_bound_literal,
    lemma1_residual,
    rate_fit,
    sigma_k,
    two_node_dual_norm,
)
from .graph import (
    Graph,
    GraphError,
    graph_from_text,
    graph_to_text,
    incidence_apply,
    incidence_apply_t,
    laplacian_apply,
    laplacian_norm,
    random_geometric_graph,
    read_graph,
    write_graph,
)
from .matcomp import (
    MatCompInstance,
    assemble_problem,
    build_instance,
    instance_from_text,
    instance_to_text,
    matcomp_gradient,
    matcomp_objective,
    read_instance,
    write_instance,
)
from .problems import (
    custom_quadratic,
    quadratic_node,
    quadratic_toy,
    set_from_spec,
    two_node_quadratic,
)
from .sets import (
    Box,
    CapabilityError,
    FeasibleSet,
    L1Ball,
    L2Ball,
    NuclearBallSym,
    OracleError,
    Simplex,
    WholeSpace,
    nuclear_lmo_batch,
)
from .solvers import (
    ConsensusProblem,
    IterateState,
    ReferenceSolution,
    SolverConfig,
    SolverError,
    centralized_reference,
    eps_budget,
    initial_state,
    local_direction,
    make_problem,
    penalty,
    rc_co_direction,
    rc_co_step,
    rc_direction,
    rc_step,
    run,
    step_size,
)

__version__ = "0.1.0"
