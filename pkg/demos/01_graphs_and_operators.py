"""Graphs, disagreement operators, and spectral quantities.

Walks through the graph layer: building graphs, applying the oriented
edge-difference operator and the Laplacian to per-node blocks, and
computing the spectral norm that enters every convergence bound.
"""

import numpy as np

from consensusfw import (
    Graph,
    graph_to_text,
    incidence_apply_t,
    laplacian_apply,
    laplacian_norm,
    random_geometric_graph,
)

print("=== A triangle, by hand ===")
tri = Graph(3, [(0, 1), (1, 2), (0, 2)])
x = np.array([[1.0], [2.0], [4.0]])
print("node blocks:", x.ravel())
print("edge differences E^T x:", incidence_apply_t(tri, x).ravel())
print("Laplacian action L x:  ", laplacian_apply(tri, x).ravel())
print("spectral norm ||L||:   ", laplacian_norm(tri))
print()

print("=== Consensus is the nullspace ===")
same = np.tile([7.0, -1.0], (3, 1))
print("equal blocks -> E^T x =", incidence_apply_t(tri, same).ravel())
print()

print("=== Identity L = E E^T on random data ===")
rng = np.random.default_rng(0)
g = random_geometric_graph(seed=5, n_nodes=8, radius=0.7)
xr = rng.standard_normal((8, 3))
quad = float(np.sum(xr * laplacian_apply(g, xr)))
edge = float(np.sum(incidence_apply_t(g, xr) ** 2))
print(f"<x, Lx> = {quad:.12f}")
print(f"||E^T x||^2 = {edge:.12f}  (equal, and nonnegative)")
print()

print("=== Random geometric graphs are resampled until connected ===")
for seed in range(3):
    g = random_geometric_graph(seed, n_nodes=10, radius=0.6)
    print(f"seed {seed}: {g.edge_count} edges, ||L|| = "
          f"{laplacian_norm(g):.6f}")
print()

print("=== Plain-text format (1-based, head = lower index) ===")
print(graph_to_text(Graph(3, [(0, 1), (1, 2)])))
