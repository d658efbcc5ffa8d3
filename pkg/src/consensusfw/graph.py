"""Undirected connected graphs with a fixed edge orientation.

Node states live in the product space of per-node blocks.  Throughout the
package a *block vector* is simply an ndarray of shape ``(node_count, d)``:
row ``i`` is the block of node ``i``, all blocks share the dimension ``d``,
and the inner product is the sum of per-block inner products (i.e. the flat
dot product).  Blocks that encode ``n x n`` matrices are stored flattened
row-major, so the block inner product is the Frobenius inner product.

The oriented incidence operator maps node blocks to edge blocks,

    (E^T x)_e = x_head(e) - x_tail(e),

and the graph Laplacian is its composition with the adjoint,

    (L x)_i = sum_{j in N(i)} (x_i - x_j).

Both are orientation-invariant in norm; generated graphs orient every edge
head = lower node index so that results are reproducible.
"""

from collections import deque

import numpy as np


class GraphError(ValueError):
    """Invalid graph structure or graph file."""


class Graph:
    """Undirected connected graph with a fixed orientation on each edge.

    Parameters
    ----------
    node_count : int
        Number of nodes (at least 2 for a usable consensus topology).
    edges : sequence of (int, int)
        Oriented edges as (head, tail) pairs of 0-based node indices.  The
        orientation is arbitrary but fixed: it never changes after
        construction.
    positions : ndarray of shape (node_count, 3), optional
        Node coordinates, kept when the graph was generated geometrically.

    Raises
    ------
    GraphError
        On self-loops, duplicate edges (as unordered pairs), out-of-range
        indices, or a disconnected graph.
    """

    def __init__(self, node_count, edges, positions=None):
        node_count = int(node_count)
        if node_count < 1:
            raise GraphError("node_count must be positive")
        seen = set()
        clean = []
        for head, tail in edges:
            head, tail = int(head), int(tail)
            if head == tail:
                raise GraphError(f"self-loop at node {head}")
            if not (0 <= head < node_count and 0 <= tail < node_count):
                raise GraphError(f"edge ({head}, {tail}) out of range")
            key = (min(head, tail), max(head, tail))
            if key in seen:
                raise GraphError(f"duplicate edge {key}")
            seen.add(key)
            clean.append((head, tail))
        self.node_count = node_count
        self.edges = tuple(clean)
        self.neighbors = tuple(
            tuple(sorted(js)) for js in _adjacency(node_count, clean)
        )
        self.degrees = np.array([len(js) for js in self.neighbors])
        if positions is not None:
            positions = np.asarray(positions, dtype=float)
            if positions.shape[0] != node_count:
                raise GraphError("positions row count != node_count")
        self.positions = positions
        if not _connected(node_count, self.neighbors):
            raise GraphError("graph is not connected")
        self._lap_norm = None

    @property
    def edge_count(self):
        return len(self.edges)

    def incidence_matrix(self):
        """Dense node-by-edge incidence matrix (+1 at head, -1 at tail)."""
        mat = np.zeros((self.node_count, len(self.edges)))
        for e, (head, tail) in enumerate(self.edges):
            mat[head, e] = 1.0
            mat[tail, e] = -1.0
        return mat

    def laplacian_matrix(self):
        """Dense node-level Laplacian (degree matrix minus adjacency)."""
        inc = self.incidence_matrix()
        return inc @ inc.T

    def __repr__(self):
        return f"Graph(node_count={self.node_count}, edges={len(self.edges)})"


def _adjacency(node_count, edges):
    adj = [[] for _ in range(node_count)]
    for head, tail in edges:
        adj[head].append(tail)
        adj[tail].append(head)
    return adj


def _connected(node_count, neighbors):
    if node_count == 1:
        return True
    seen = np.zeros(node_count, dtype=bool)
    queue = deque([0])
    seen[0] = True
    while queue:
        i = queue.popleft()
        for j in neighbors[i]:
            if not seen[j]:
                seen[j] = True
                queue.append(j)
    return bool(seen.all())


def _check_blocks(graph, x):
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] != graph.node_count:
        raise ValueError(
            f"expected block vector of shape ({graph.node_count}, d), "
            f"got {x.shape}"
        )
    return x


def incidence_apply_t(graph, x):
    """Edge differences (E^T x)_e = x_head(e) - x_tail(e).

    Parameters
    ----------
    graph : Graph
    x : ndarray of shape (node_count, d)

    Returns
    -------
    ndarray of shape (edge_count, d)
    """
    x = _check_blocks(graph, x)
    heads = np.fromiter((h for h, _ in graph.edges), dtype=int,
                        count=len(graph.edges))
    tails = np.fromiter((t for _, t in graph.edges), dtype=int,
                        count=len(graph.edges))
    return x[heads] - x[tails]


def incidence_apply(graph, w):
    """Adjoint of :func:`incidence_apply_t`: edge blocks back to nodes.

    ``(E w)_i`` accumulates ``+w_e`` over edges headed at ``i`` and ``-w_e``
    over edges tailed at ``i``.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != len(graph.edges):
        raise ValueError(
            f"expected edge vector of shape ({len(graph.edges)}, d), "
            f"got {w.shape}"
        )
    out = np.zeros((graph.node_count, w.shape[1]))
    for e, (head, tail) in enumerate(graph.edges):
        out[head] += w[e]
        out[tail] -= w[e]
    return out


def laplacian_apply(graph, x):
    """Graph Laplacian action (L x)_i = sum_{j in N(i)} (x_i - x_j)."""
    x = _check_blocks(graph, x)
    out = graph.degrees[:, None] * x
    for i, js in enumerate(graph.neighbors):
        for j in js:
            out[i] -= x[j]
    return out


def laplacian_norm(graph, method="auto", tol=1e-10, max_iter=10**6):
    """Largest eigenvalue of the node-level Laplacian.

    Computed once and cached on the graph.  ``method`` selects the dense
    eigendecomposition (``"dense"``), deterministic power iteration
    (``"power"``), or dense for graphs up to 64 nodes and power iteration
    beyond (``"auto"``).  Power iteration starts from an all-ones vector
    with a small index ramp so repeated runs are bit-identical.
    """
    if method == "auto" and graph._lap_norm is not None:
        return graph._lap_norm
    lap = graph.laplacian_matrix()
    if method == "dense" or (method == "auto" and graph.node_count <= 64):
        value = float(np.linalg.eigvalsh(lap)[-1])
    elif method in ("power", "auto"):
        value = _power_norm(lap, tol, max_iter)
    else:
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        graph._lap_norm = value
    return value


def _power_norm(mat, tol, max_iter):
    # deterministic start: ones plus index ramp, never orthogonal to the
    # top eigenspace in practice
    n = mat.shape[0]
    v = 1.0 + np.arange(n) / (10.0 * n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = mat @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0  # zero Laplacian (single node)
        v = w / norm
        new_lam = float(v @ (mat @ v))
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1e-300):
            return new_lam
        lam = new_lam
    raise RuntimeError("power iteration failed to converge (internal cap)")


def random_geometric_graph(seed, n_nodes, radius, max_attempts=1000):
    """Connected random geometric graph on the unit cube.

    Samples ``n_nodes`` positions uniformly from [0, 1]^3 with the given
    seed and joins pairs within Euclidean distance ``radius`` (head = lower
    index).  Disconnected draws are resampled with an incremented seed, up
    to ``max_attempts`` tries.

    Returns
    -------
    Graph
        With ``positions`` retained.

    Raises
    ------
    GraphError
        If no connected sample was found within the attempt cap.
    """
    if n_nodes < 2:
        raise GraphError("n_nodes must be at least 2")
    if radius <= 0:
        raise GraphError("radius must be positive")
    for attempt in range(max_attempts):
        rng = np.random.default_rng(seed + attempt)
        pos = rng.uniform(0.0, 1.0, size=(n_nodes, 3))
        edges = []
        for i in range(n_nodes):
            for j in range(i + 1, n_nodes):
                if np.linalg.norm(pos[i] - pos[j]) <= radius:
                    edges.append((i, j))
        adj = _adjacency(n_nodes, edges)
        if _connected(n_nodes, adj):
            return Graph(n_nodes, edges, positions=pos)
    raise GraphError(
        f"no connected geometric graph after {max_attempts} attempts "
        f"(n_nodes={n_nodes}, radius={radius}); increase the radius"
    )


def write_graph(graph, path):
    """Write a graph in the plain-text format (1-based indices)."""
    with open(path, "w") as fh:
        fh.write(graph_to_text(graph))


def graph_to_text(graph):
    lines = [f"nodes {graph.node_count}"]
    for head, tail in graph.edges:
        i, j = sorted((head + 1, tail + 1))
        lines.append(f"edge {i} {j}")
    if graph.positions is not None:
        for i, p in enumerate(graph.positions):
            coords = " ".join(format(c, ".17g") for c in p)
            lines.append(f"pos {i + 1} {coords}")
    return "\n".join(lines) + "\n"


def read_graph(path):
    """Parse a graph file written by :func:`write_graph`."""
    with open(path) as fh:
        return graph_from_text(fh.read())


def graph_from_text(text):
    node_count = None
    edges = []
    pos = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "nodes":
                node_count = int(parts[1])
            elif kind == "edge":
                i, j = int(parts[1]), int(parts[2])
                if not i < j:
                    raise GraphError(
                        f"line {lineno}: edge endpoints must satisfy i < j"
                    )
                edges.append((i - 1, j - 1))
            elif kind == "pos":
                pos[int(parts[1]) - 1] = [float(v) for v in parts[2:5]]
            else:
                raise GraphError(f"line {lineno}: unknown record {kind!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, GraphError):
                raise
            raise GraphError(f"line {lineno}: malformed record {line!r}")
    if node_count is None:
        raise GraphError("missing 'nodes' line")
    positions = None
    if pos:
        if sorted(pos) != list(range(node_count)):
            raise GraphError("positions must cover every node exactly once")
        positions = np.array([pos[i] for i in range(node_count)])
    return Graph(node_count, edges, positions=positions)
