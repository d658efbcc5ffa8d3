"""Distributed matrix completion on a random geometric graph.

Builds the bundled experiment: nodes at random positions in the unit cube
observe noisy distances to their graph neighbors, and cooperate to
complete the full pairwise-distance matrix under a nuclear-norm cap
(low-rank prior) plus entrywise bounds.  Node ``i`` holds the measurement
mask ``o_i`` marking its incident edges and minimizes
``||o_i (.) (x_i - d)||_F^2`` (Hadamard product, Frobenius norm), which
makes the instance a composite consensus problem: the nuclear ball has a
cheap linear minimization oracle, the entrywise box a cheap projection,
and their intersection has neither.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import Graph, graph_from_text, graph_to_text
from .sets import Box, NuclearBallSym
from .solvers import ReferenceSolution, make_problem


@dataclass(frozen=True)
class MatCompInstance:
    """Measurement matrix, per-node masks and constraint data.

    ``d`` is the symmetric, zero-diagonal noisy distance matrix; mask
    ``masks[i]`` has ones exactly at ``(i, j)`` and ``(j, i)`` for the
    graph neighbors ``j`` of node ``i``.  ``lower`` is the zero matrix and
    ``upper`` carries the entrywise caps (zero diagonal so the box pins
    the diagonal at zero).
    """

    graph: Graph
    d: np.ndarray
    masks: np.ndarray
    theta: float
    lower: np.ndarray
    upper: np.ndarray
    noise_std: float

    @property
    def side(self):
        return self.d.shape[0]


def _box_muller(rng, count):
    # explicit transform so the noise stream is pinned to the generator's
    # uniform output
    u1 = 1.0 - rng.uniform(size=count)
    u2 = rng.uniform(size=count)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def build_instance(seed, n_nodes=10, radius=0.6, noise_std=0.1, theta=None,
                   u_offdiag=3.0):
    """Generate the matrix completion instance for a seeded graph.

    Positions are sampled uniformly from [0, 1]^3, nodes within ``radius``
    are joined (resampling disconnected draws), and the measurement is
    ``d_ij = ||p_i - p_j|| + noise`` mirrored to keep ``d`` symmetric with
    a zero diagonal.  ``theta`` defaults to the nuclear norm of the
    generated measurement so the noiseless target stays feasible.
    """
    from .graph import random_geometric_graph
    graph = random_geometric_graph(seed, n_nodes, radius)
    n = n_nodes
    dist = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dist[i, j] = dist[j, i] = np.linalg.norm(
                graph.positions[i] - graph.positions[j])
    if noise_std > 0.0:
        noise_rng = np.random.default_rng([seed, 1])
        xi = noise_std * _box_muller(noise_rng, n * (n - 1) // 2)
        iu, ju = np.triu_indices(n, k=1)
        noise = np.zeros((n, n))
        noise[iu, ju] = xi
        noise = noise + noise.T
        dist = dist + noise
    masks = np.zeros((n, n, n))
    for i in range(n):
        for j in graph.neighbors[i]:
            masks[i, i, j] = masks[i, j, i] = 1.0
    if theta is None:
        theta = float(np.sum(np.linalg.svd(dist, compute_uv=False)))
    upper = u_offdiag * (np.ones((n, n)) - np.eye(n))
    return MatCompInstance(graph=graph, d=dist, masks=masks,
                           theta=float(theta), lower=np.zeros((n, n)),
                           upper=upper, noise_std=float(noise_std))


def matcomp_gradient(inst, i, x_i):
    """Gradient ``2 o_i (.) (x_i - d)`` of node i's objective (n x n)."""
    x_i = np.asarray(x_i, dtype=float)
    if x_i.shape != inst.d.shape:
        raise ValueError(f"expected {inst.d.shape} block, got {x_i.shape}")
    return 2.0 * inst.masks[i] * (x_i - inst.d)


def matcomp_objective(inst, i, x_i):
    """Node i's loss ``||o_i (.) (x_i - d)||_F^2``."""
    diff = inst.masks[i] * (np.asarray(x_i, dtype=float) - inst.d)
    return float(np.sum(diff * diff))


def assemble_problem(inst):
    """Wrap the instance as a composite consensus problem.

    Blocks are the flattened matrices; the per-node feasible sets are the
    symmetric nuclear-norm ball (LMO side) and the entrywise box
    (projection side).  The masks have 0/1 entries, so every node
    objective is 2-smooth.
    """
    n = inst.side
    objectives, gradients = [], []
    for i in range(inst.graph.node_count):
        def value(x, i=i):
            return matcomp_objective(inst, i, x.reshape(n, n))

        def grad(x, i=i):
            return matcomp_gradient(inst, i, x.reshape(n, n)).ravel()

        objectives.append(value)
        gradients.append(grad)
    x_sets = [NuclearBallSym(inst.theta, n)
              for _ in range(inst.graph.node_count)]
    y_sets = [Box(inst.lower.ravel(), inst.upper.ravel())
              for _ in range(inst.graph.node_count)]

    def hook(iters, gap_target):
        return reference_via_convex_solver(inst)

    return make_problem(inst.graph, objectives, gradients, x_sets, beta=2.0,
                        y_sets=y_sets, reference_hook=hook)


# documented accuracy of the external convex solver on this instance
# family (10 x 10 blocks); validated by a solver cross-check test
CONVEX_REFERENCE_CERTIFICATE = 1e-5


def reference_via_convex_solver(inst):
    """Certified centralized optimum via an interior-point/conic solver.

    The collapsed problem ``min_z sum_i ||o_i (.) (z - d)||_F^2`` subject
    to the nuclear-ball, symmetry and box constraints is a small
    semidefinite-representable program; a mature conic solver resolves it
    far past the accuracy any conditional gradient run could certify in
    reasonable time.
    """
    import cvxpy as cp

    n = inst.side
    z = cp.Variable((n, n), symmetric=True)
    loss = sum(cp.sum_squares(cp.multiply(inst.masks[i], z - inst.d))
               for i in range(inst.graph.node_count))
    constraints = [cp.normNuc(z) <= inst.theta,
                   z >= inst.lower, z <= inst.upper]
    prob = cp.Problem(cp.Minimize(loss), constraints)
    try:
        with warnings.catch_warnings():
            # an inaccurate first solve is handled by the fallback below
            warnings.simplefilter("ignore", UserWarning)
            prob.solve(solver=cp.CLARABEL)
        status = prob.status
    except cp.error.SolverError:
        status = None
    if status != cp.OPTIMAL:
        prob.solve(solver=cp.SCS, eps=1e-9, max_iters=200_000)
    if z.value is None or prob.status not in (cp.OPTIMAL,
                                              cp.OPTIMAL_INACCURATE):
        raise RuntimeError(f"convex reference solver failed ({prob.status})")
    z_star = 0.5 * (z.value + z.value.T)
    f_star = sum(matcomp_objective(inst, i, z_star)
                 for i in range(inst.graph.node_count))
    return ReferenceSolution(z=z_star.ravel(), f_star=float(f_star),
                             certificate=CONVEX_REFERENCE_CERTIFICATE,
                             method="convex-solver")


def _matrix_block(mat, fmt):
    return "\n".join(" ".join(format(v, fmt) for v in row) for row in mat)


def instance_to_text(inst):
    """Serialize an instance in the cross-implementation fixture format.

    The graph file records come first, then a ``d`` block with the
    measurement rows and one ``mask <i>`` block per node, all row-major.
    """
    parts = [graph_to_text(inst.graph).rstrip("\n"), "d",
             _matrix_block(inst.d, ".17g")]
    for i in range(inst.graph.node_count):
        parts.append(f"mask {i + 1}")
        parts.append(_matrix_block(inst.masks[i], ".0f"))
    return "\n".join(parts) + "\n"


def write_instance(inst, path):
    with open(path, "w") as fh:
        fh.write(instance_to_text(inst))


def instance_from_text(text, theta=None, noise_std=0.1, u_offdiag=3.0):
    """Parse the fixture format back into an instance.

    ``theta`` defaults to the nuclear norm of the parsed measurement, as
    at build time.
    """
    lines = text.splitlines()
    graph_lines, i = [], 0
    while i < len(lines) and lines[i].strip() != "d":
        graph_lines.append(lines[i])
        i += 1
    if i == len(lines):
        raise ValueError("missing 'd' block")
    graph = graph_from_text("\n".join(graph_lines))
    n = graph.node_count
    i += 1
    d = np.array([[float(v) for v in lines[i + r].split()]
                  for r in range(n)])
    i += n
    masks = np.zeros((n, n, n))
    for _ in range(n):
        if i >= len(lines) or not lines[i].startswith("mask "):
            raise ValueError("missing mask block")
        node = int(lines[i].split()[1]) - 1
        masks[node] = np.array([[float(v) for v in lines[i + 1 + r].split()]
                                for r in range(n)])
        i += 1 + n
    if d.shape != (n, n):
        raise ValueError("measurement block has wrong shape")
    if theta is None:
        theta = float(np.sum(np.linalg.svd(d, compute_uv=False)))
    upper = u_offdiag * (np.ones((n, n)) - np.eye(n))
    return MatCompInstance(graph=graph, d=d, masks=masks, theta=float(theta),
                           lower=np.zeros((n, n)), upper=upper,
                           noise_std=float(noise_std))


def read_instance(path, theta=None):
    with open(path) as fh:
        return instance_from_text(fh.read(), theta=theta)
