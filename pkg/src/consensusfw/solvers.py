"""Penalty-based conditional gradient iterations over a graph.

The plain iteration minimizes ``sum_i f_i(x_i)`` over per-node compact
convex sets ``X_i`` under the consensus constraint that neighboring blocks
agree.  At iterate ``k`` (1-indexed) each node evaluates its gradient,
reads its neighbors' blocks once, and calls its linear minimization oracle
once on

    g_i = grad f_i(x_i) + r_k * sum_{j in N(i)} (x_i - x_j),

then every node moves ``x_i <- x_i + alpha_k (y_i - x_i)`` with
``alpha_k = 2/(k+1)`` and the growing penalty ``r_k = r0 sqrt(k+1)``.  The
update is a convex combination, so iterates stay feasible for every k.

The composite variant handles an additional per-node set ``Y_i`` with a
cheap projection but no cheap LMO: the direction gains the penalty term
``r_k (x_i - P_{Y_i}(x_i))`` and iterates converge to ``Y`` instead of
staying inside it.

Both variants accept inexact linear minimization: with budget parameter
``kappa`` the per-iteration optimality gap allowance is

    eps_k = kappa * (beta / sqrt(k+1) + c * r0) * delta / sqrt(k+1),

``c`` the Laplacian norm (plus one in composite mode), split equally
across nodes so the per-node eps-optimality sums to the product-set
guarantee.

One iteration is one synchronous round: all node directions are computed
against the frozen iterate, then the combination commits atomically.  Runs
are deterministic for a fixed problem and configuration.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .graph import incidence_apply_t, laplacian_norm
from .sets import (
    CapabilityError,
    NuclearBallSym,
    OracleError,
    WholeSpace,
    nuclear_lmo_batch,
)


class SolverError(RuntimeError):
    """A run failed in a way the driver reports rather than hides."""


@dataclass(frozen=True)
class ConsensusProblem:
    """A consensus optimization instance over a graph.

    Build through :func:`make_problem`, which derives the product-set
    squared diameter and caches the graph Laplacian norm.  ``y_sets`` is
    all-or-none across nodes; a :class:`~consensusfw.sets.WholeSpace`
    entry is allowed as a trivial composite constraint and does not count
    toward composite mode.  ``reference_hook``, when set by a problem
    builder, computes a certified centralized optimum for diagnostics.
    """

    graph: object
    objectives: tuple
    gradients: tuple
    x_sets: tuple
    y_sets: tuple | None
    beta: float
    delta: float
    laplacian_norm: float
    reference_hook: object = field(default=None, compare=False)

    @property
    def node_count(self):
        return self.graph.node_count

    @property
    def block_dim(self):
        return self.x_sets[0].dim

    @property
    def composite(self):
        """True when a nontrivial composite constraint is present."""
        return self.y_sets is not None and any(
            not isinstance(s, WholeSpace) for s in self.y_sets)

    def objective_value(self, x):
        return float(sum(f(x[i]) for i, f in enumerate(self.objectives)))

    def feasibility_error(self, x):
        """``||x - P_Y(x)||`` over all blocks (0 without composite sets)."""
        if self.y_sets is None:
            return 0.0
        total = 0.0
        for i, s in enumerate(self.y_sets):
            diff = x[i] - s.project(x[i])
            total += float(diff @ diff)
        return math.sqrt(total)


def make_problem(graph, objectives, gradients, x_sets, beta, y_sets=None,
                 reference_hook=None):
    """Assemble and validate a :class:`ConsensusProblem`.

    ``delta`` is the squared diameter of the product set, i.e. the sum of
    the per-node squared diameters.
    """
    n = graph.node_count
    if not (len(objectives) == len(gradients) == len(x_sets) == n):
        raise ValueError("need one objective, gradient and set per node")
    dims = {s.dim for s in x_sets}
    if len(dims) != 1:
        raise ValueError("all node sets must share one block dimension")
    if y_sets is not None:
        if len(y_sets) != n:
            raise ValueError("y_sets must cover every node or be None")
        if {s.dim for s in y_sets} != dims:
            raise ValueError("composite sets must match the block dimension")
        for s in y_sets:
            if not s.supports_projection:
                raise ValueError(
                    f"composite set {type(s).__name__} has no projection")
    if beta <= 0:
        raise ValueError("beta must be positive")
    delta = float(sum(s.squared_diameter() for s in x_sets))
    if delta <= 0:
        raise ValueError("product set has zero diameter")
    return ConsensusProblem(
        graph=graph,
        objectives=tuple(objectives),
        gradients=tuple(gradients),
        x_sets=tuple(x_sets),
        y_sets=None if y_sets is None else tuple(y_sets),
        beta=float(beta),
        delta=delta,
        laplacian_norm=laplacian_norm(graph),
        reference_hook=reference_hook,
    )


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.

    ``kappa=None`` selects exact linear minimization; a positive value
    selects inexact mode with the corresponding budget schedule.  ``init``
    is ``"canonical"`` (deterministic feasible point of each set),
    ``"lmo_of_ones"``, or an explicit block vector.
    """

    r0: float = 1.0
    max_iter: int = 1000
    kappa: float | None = None
    init: object = "canonical"
    log_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.r0 <= 0:
            raise ValueError("r0 must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")
        if self.kappa is not None and self.kappa <= 0:
            raise ValueError("kappa must be positive in inexact mode")
        if self.log_every < 1:
            raise ValueError("log_every must be a positive integer")
        if isinstance(self.init, str):
            if self.init not in ("canonical", "lmo_of_ones"):
                raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class IterateState:
    """Current block iterate and its 1-based iteration index."""

    x: np.ndarray
    k: int


def step_size(k):
    """Combination weight 2/(k+1), in (0, 1] for k >= 1."""
    if k < 1:
        raise ValueError("iterations are 1-indexed")
    return 2.0 / (k + 1)


def penalty(k, r0):
    """Disagreement penalty r0 * sqrt(k+1) used at iterate k."""
    if k < 1:
        raise ValueError("iterations are 1-indexed")
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    return r0 * math.sqrt(k + 1)


def eps_budget(k, kappa, beta, r0, lap_norm, delta, composite=False):
    """Optimality-gap allowance for the linear minimization at iterate k.

    Equals ``kappa * (beta/sqrt(k+1) + c*r0) * delta/sqrt(k+1)`` with
    ``c = lap_norm`` (plus one when ``composite``); decreasing in k.
    """
    if k < 1:
        raise ValueError("iterations are 1-indexed")
    c = lap_norm + (1.0 if composite else 0.0)
    root = math.sqrt(k + 1)
    return kappa * (beta / root + c * r0) * delta / root


def local_direction(grad_fn, x_i, neighbor_blocks, r, composite_pull=None):
    """Direction block for one node from exactly its local inputs.

    A node sees its own block, its gradient oracle, its neighbors' blocks
    (one exchange per iteration), and optionally its own composite
    projection offset ``x_i - P_{Y_i}(x_i)``.
    """
    g = np.asarray(grad_fn(x_i), dtype=float)
    if g.shape != x_i.shape:
        raise SolverError(f"gradient shape {g.shape} != block {x_i.shape}")
    if not np.all(np.isfinite(g)):
        raise SolverError("non-finite gradient")
    pull = len(neighbor_blocks) * x_i
    for block in neighbor_blocks:
        pull = pull - block
    if composite_pull is not None:
        pull = composite_pull + pull
    return g + r * pull


def rc_direction(problem, state, r):
    """Blockwise direction ``grad f(x) + r L x`` of the plain iteration."""
    x = state.x
    out = np.empty_like(x)
    for i in range(problem.node_count):
        neighbors = [x[j] for j in problem.graph.neighbors[i]]
        out[i] = local_direction(problem.gradients[i], x[i], neighbors, r)
    return out


def rc_co_direction(problem, state, r):
    """Composite direction ``grad f(x) + r (x - P_Y(x) + L x)``.

    The product structure of Y lets each node project its own block, so
    the iteration stays fully distributed.
    """
    if problem.y_sets is None:
        raise SolverError("composite direction needs composite sets")
    x = state.x
    out = np.empty_like(x)
    for i in range(problem.node_count):
        neighbors = [x[j] for j in problem.graph.neighbors[i]]
        pull = x[i] - problem.y_sets[i].project(x[i])
        out[i] = local_direction(problem.gradients[i], x[i], neighbors, r,
                                 composite_pull=pull)
    return out


def _oracle_round(problem, directions, k, config):
    """One linear-minimization round, exact or within the eps budget."""
    n = problem.node_count
    if config.kappa is None:
        eps_node = 0.0
    else:
        eps_node = eps_budget(k, config.kappa, problem.beta, config.r0,
                              problem.laplacian_norm, problem.delta,
                              problem.composite) / n
    sets = problem.x_sets
    if (isinstance(sets[0], NuclearBallSym)
            and all(isinstance(s, NuclearBallSym)
                    and s.side == sets[0].side for s in sets)):
        ys, _ = nuclear_lmo_batch(sets, directions, [eps_node] * n)
        return ys
    out = np.empty_like(directions)
    for i, s in enumerate(sets):
        if eps_node > 0.0:
            out[i] = s.lmo_inexact(directions[i], eps_node)
        else:
            out[i] = s.lmo(directions[i])
    return out


def rc_step(problem, state, config):
    """One plain iteration; returns the next state (feasible by convexity)."""
    r = penalty(state.k, config.r0)
    g = rc_direction(problem, state, r)
    y = _oracle_round(problem, g, state.k, config)
    alpha = step_size(state.k)
    return IterateState(x=state.x + alpha * (y - state.x), k=state.k + 1)


def rc_co_step(problem, state, config):
    """One composite iteration; same combination step as :func:`rc_step`."""
    r = penalty(state.k, config.r0)
    g = rc_co_direction(problem, state, r)
    y = _oracle_round(problem, g, state.k, config)
    alpha = step_size(state.k)
    return IterateState(x=state.x + alpha * (y - state.x), k=state.k + 1)


def initial_state(problem, config):
    """First iterate per the configured initialization (always in X)."""
    d = problem.block_dim
    if isinstance(config.init, str):
        if config.init == "canonical":
            x = np.stack([s.canonical_point() for s in problem.x_sets])
        else:  # lmo_of_ones
            x = np.stack([s.lmo(np.ones(d)) for s in problem.x_sets])
    else:
        x = np.asarray(config.init, dtype=float)
        if x.shape != (problem.node_count, d):
            raise SolverError(
                f"explicit init must have shape ({problem.node_count}, {d})")
        for i, s in enumerate(problem.x_sets):
            if not s.contains(x[i], 1e-9):
                raise SolverError(f"explicit init infeasible at node {i}")
        x = x.copy()
    return IterateState(x=x, k=1)


def run(problem, config, rho=0.0, f_star=None, observer=None):
    """Execute a full run and return its :class:`~.diagnostics.Trace`.

    The step kind (plain or composite) follows the presence of composite
    sets on the problem.  A record is logged at k = 1, then every
    ``log_every`` iterations, and at the final iterate.  ``rho`` and
    ``f_star`` feed the recorded bounds; without a reference value the
    lemma residual column is NaN.  ``observer(state, record)`` is invoked
    at every logged iterate.

    Solver failures annotate and return the partial trace (see
    ``Trace.error``) instead of raising.
    """
    params = diagnostics.BoundParams(
        rho=rho, delta=problem.delta, beta=problem.beta, r0=config.r0,
        laplacian_norm=problem.laplacian_norm, composite=problem.composite,
        kappa=0.0 if config.kappa is None else config.kappa)
    step = rc_co_step if problem.y_sets is not None else rc_step
    trace = diagnostics.Trace()

    def log(state):
        x = state.x
        k = state.k
        f_value = problem.objective_value(x)
        cons = float(np.linalg.norm(incidence_apply_t(problem.graph, x)))
        feas = problem.feasibility_error(x)
        ref = math.nan if f_star is None else f_star
        eps_used = 0.0 if config.kappa is None else eps_budget(
            k, config.kappa, problem.beta, config.r0,
            problem.laplacian_norm, problem.delta, problem.composite)
        record = diagnostics.TraceRecord(
            k=k,
            f_value=f_value,
            consensus_err=cons,
            feas_err=feas,
            sigma_k=diagnostics.sigma_k(params, k),
            gap_bound=diagnostics.gap_bound(params, k),
            gap_bound_lit=diagnostics.gap_bound_literal(params, k),
            consensus_bound=diagnostics.consensus_bound(params, k),
            lemma1_residual=diagnostics.lemma1_residual_from_metrics(
                f_value, ref, cons, feas, params, k),
            eps_budget_used=eps_used,
        )
        trace.append(record)
        if observer is not None:
            observer(state, record)

    state = None
    try:
        state = initial_state(problem, config)
        log(state)
        for _ in range(config.max_iter):
            state = step(problem, state, config)
            if (state.k - 1) % config.log_every == 0:
                log(state)
        if (state.k - 1) % config.log_every != 0 and config.max_iter > 0:
            log(state)
    except SolverError as exc:
        trace.error = str(exc)
    except (OracleError, CapabilityError) as exc:
        trace.error = f"{type(exc).__name__}: {exc}"
    if state is not None:
        trace.final_x = state.x
    return trace


@dataclass(frozen=True)
class ReferenceSolution:
    """Certified centralized optimum used as a diagnostics baseline.

    ``certificate`` bounds ``f_star - min f``: the final conditional
    gradient duality gap for the oracle-based methods, or the documented
    accuracy of an external convex solver.
    """

    z: np.ndarray
    f_star: float
    certificate: float
    method: str

    def replicated(self, node_count):
        return np.tile(self.z, (node_count, 1))


def _same_sets(sets):
    first = sets[0]
    for s in sets[1:]:
        if type(s) is not type(first):
            return False
        for attr in ("lower", "upper", "radius", "side", "dim"):
            a, b = getattr(first, attr, None), getattr(s, attr, None)
            if isinstance(a, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
    return True


def centralized_reference(problem, iters=100_000, gap_target=1e-6):
    """Solve the collapsed problem ``min_z sum_i f_i(z)`` for diagnostics.

    Requires identical per-node sets (true for the bundled problems); the
    consensus constraint then collapses to a single block.  Strategy:

    * problem builders may attach a certified solver (``reference_hook``),
      used first when present;
    * with composite sets, both box: projected gradient on the
      intersection box, certified by its conditional gradient gap;
    * without composite sets: projected gradient when the set projects
      cheaply, else plain conditional gradient with its duality gap.

    The certificate is reported, never assumed; callers decide whether it
    is tight enough for their check.
    """
    if not _same_sets(problem.x_sets):
        raise ValueError("reference solver needs identical X sets")
    if problem.y_sets is not None and not _same_sets(problem.y_sets):
        raise ValueError("reference solver needs identical Y sets")
    if problem.reference_hook is not None:
        return problem.reference_hook(iters, gap_target)

    def f(z):
        return float(sum(fi(z) for fi in problem.objectives))

    def grad(z):
        total = problem.gradients[0](z).astype(float, copy=True)
        for gi in problem.gradients[1:]:
            total += gi(z)
        return total

    x1 = problem.x_sets[0]
    if problem.composite:
        y1 = problem.y_sets[0]
        feasible = _intersection_box(x1, y1)
        if feasible is None:
            raise NotImplementedError(
                "no cheap intersection oracle for this composite problem; "
                "attach a problem-specific reference_hook")
    else:
        feasible = x1

    lip = problem.beta * problem.node_count
    if feasible.supports_projection:
        return _projected_gradient_reference(f, grad, feasible, lip, iters,
                                             gap_target)
    return _conditional_gradient_reference(f, grad, feasible, iters,
                                           gap_target)


def _intersection_box(x1, y1):
    from .sets import Box
    if isinstance(x1, Box) and isinstance(y1, Box):
        lower = np.maximum(x1.lower, y1.lower)
        upper = np.minimum(x1.upper, y1.upper)
        if np.any(lower > upper):
            raise ValueError("empty intersection of X and Y boxes")
        return Box(lower, upper)
    return None


def _fw_gap(grad_z, z, feasible):
    return float(grad_z @ (z - feasible.lmo(grad_z)))


def _projected_gradient_reference(f, grad, feasible, lip, iters, gap_target):
    z = feasible.canonical_point()
    step = 1.0 / lip
    gap = _fw_gap(grad(z), z, feasible)
    done = 0
    while gap > gap_target and done < iters:
        for _ in range(min(200, iters - done)):
            z = feasible.project(z - step * grad(z))
            done += 1
        gap = _fw_gap(grad(z), z, feasible)
    return ReferenceSolution(z=z, f_star=f(z), certificate=gap,
                             method="projected-gradient")


def _conditional_gradient_reference(f, grad, feasible, iters, gap_target):
    z = feasible.canonical_point()
    for t in range(1, iters + 1):
        g = grad(z)
        y = feasible.lmo(g)
        gap = float(g @ (z - y))
        if gap <= gap_target:
            return ReferenceSolution(z=z, f_star=f(z), certificate=gap,
                                     method="conditional-gradient")
        z = z + (2.0 / (t + 2)) * (y - z)
    g = grad(z)  # certificate must describe the returned point
    gap = _fw_gap(g, z, feasible)
    return ReferenceSolution(z=z, f_star=f(z), certificate=gap,
                             method="conditional-gradient")
