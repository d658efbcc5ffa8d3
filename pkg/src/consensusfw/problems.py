"""Bundled test problems and set-specification parsing.

The two-node quadratic toy is the hand-solvable workhorse used by the
quantitative bound checks: a path graph, one-dimensional boxes, and
objectives ``f_i(z) = w_i (z - a_i)^2``.  Its consensus optimum, optimal
value and least-norm dual all have closed forms or a cheap brute force
(:func:`consensusfw.diagnostics.two_node_dual_norm`).
"""

import numpy as np

from .graph import Graph
from .sets import Box, L1Ball, L2Ball, NuclearBallSym, Simplex, WholeSpace
from .solvers import make_problem


def quadratic_node(target, weight=1.0):
    """Objective/gradient pair for ``w * ||x - a||^2`` on flat blocks."""
    target = np.atleast_1d(np.asarray(target, dtype=float))

    def value(x):
        diff = x - target
        return weight * float(diff @ diff)

    def grad(x):
        return 2.0 * weight * (x - target)

    return value, grad


def two_node_quadratic(targets=(0.0, 1.0), weights=(1.0, 1.0),
                       x_bounds=((0.0, 1.0), (0.0, 1.0)), y_bounds=None,
                       sentinel_y=False):
    """Two nodes on a path with scalar quadratic objectives and boxes.

    ``y_bounds`` adds composite boxes per node; ``sentinel_y`` instead
    attaches the whole-space sentinel (trivial composite constraint).

    Returns
    -------
    problem : ConsensusProblem
    info : dict
        Closed-form ``z_star`` and ``f_star`` of the collapsed problem
        (over the intersection of all boxes), for use as a test oracle.
    """
    graph = Graph(2, [(0, 1)])
    objectives, gradients = [], []
    for a, w in zip(targets, weights):
        value, grad = quadratic_node(a, w)
        objectives.append(value)
        gradients.append(grad)
    x_sets = [Box(lo, hi, dim=1) for lo, hi in x_bounds]
    if sentinel_y:
        y_sets = [WholeSpace(1), WholeSpace(1)]
    elif y_bounds is not None:
        y_sets = [Box(lo, hi, dim=1) for lo, hi in y_bounds]
    else:
        y_sets = None

    # collapsed optimum: weighted mean clamped to the tightest box
    lo = max(b[0] for b in x_bounds)
    hi = min(b[1] for b in x_bounds)
    if y_bounds is not None:
        lo = max([lo] + [b[0] for b in y_bounds])
        hi = min([hi] + [b[1] for b in y_bounds])
    mean = sum(w * a for w, a in zip(weights, targets)) / sum(weights)
    z_star = min(max(mean, lo), hi)
    f_star = sum(w * (z_star - a) ** 2 for w, a in zip(weights, targets))

    problem = make_problem(graph, objectives, gradients, x_sets,
                           beta=2.0 * max(weights), y_sets=y_sets)
    info = {"z_star": z_star, "f_star": f_star,
            "x_bounds": tuple(x_bounds),
            "y_bounds": None if y_bounds is None else tuple(y_bounds)}
    return problem, info


def quadratic_toy(sentinel_y=False):
    """The default two-node instance: targets (0, 1) on unit boxes.

    Optimum ``z* = 1/2`` with value ``f* = 1/2``; the interior dual
    solution is unique with norm 1.
    """
    return two_node_quadratic(sentinel_y=sentinel_y)


def set_from_spec(text):
    """Parse a set specification string.

    Formats: ``box <lower> <upper> <dim>``, ``l1 <radius> <dim>``,
    ``l2 <radius> <dim>``, ``simplex <dim>``, ``nuclear <radius> <side>``,
    ``wholespace <dim>``.
    """
    parts = text.split()
    if not parts:
        raise ValueError("empty set specification")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind == "box":
            return Box(float(args[0]), float(args[1]), dim=int(args[2]))
        if kind == "l1":
            return L1Ball(float(args[0]), int(args[1]))
        if kind == "l2":
            return L2Ball(float(args[0]), int(args[1]))
        if kind == "simplex":
            return Simplex(int(args[0]))
        if kind == "nuclear":
            return NuclearBallSym(float(args[0]), int(args[1]))
        if kind == "wholespace":
            return WholeSpace(int(args[0]))
    except (IndexError, ValueError) as exc:
        raise ValueError(f"bad set specification {text!r}: {exc}")
    raise ValueError(f"unknown set variant {kind!r}")


def custom_quadratic(graph, x_spec, y_spec=None, targets_seed=0):
    """Quadratic consensus problem on an arbitrary graph.

    Every node gets ``f_i(x) = ||x - a_i||^2`` with seeded random targets
    scaled to the order of the feasible set, and a copy of the set parsed
    from ``x_spec`` (and ``y_spec`` if given).
    """
    x_proto = set_from_spec(x_spec)
    d = x_proto.dim
    rng = np.random.default_rng(targets_seed)
    scale = np.sqrt(max(x_proto.squared_diameter(), 1.0))
    objectives, gradients = [], []
    for _ in range(graph.node_count):
        a = x_proto.canonical_point() + 0.5 * scale * rng.standard_normal(d)
        value, grad = quadratic_node(a)
        objectives.append(value)
        gradients.append(grad)
    x_sets = [set_from_spec(x_spec) for _ in range(graph.node_count)]
    y_sets = None
    if y_spec is not None:
        y_sets = [set_from_spec(y_spec) for _ in range(graph.node_count)]
    return make_problem(graph, objectives, gradients, x_sets, beta=2.0,
                        y_sets=y_sets)
