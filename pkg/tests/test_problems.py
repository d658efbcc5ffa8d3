import math

import numpy as np
import pytest

from consensusfw.diagnostics import two_node_dual_norm
from consensusfw.graph import random_geometric_graph
from consensusfw.problems import (
    custom_quadratic,
    quadratic_toy,
    set_from_spec,
    two_node_quadratic,
)
from consensusfw.sets import Box, L1Ball, L2Ball, NuclearBallSym, Simplex, \
    WholeSpace
from consensusfw.solvers import SolverConfig, run


class TestToy:
    def test_closed_form_optimum(self):
        problem, info = quadratic_toy()
        assert info["z_star"] == 0.5 and info["f_star"] == 0.5
        assert problem.beta == 2.0 and problem.delta == 2.0
        assert problem.laplacian_norm == pytest.approx(2.0)

    def test_boundary_clamping(self):
        _, info = two_node_quadratic(targets=(2.0, 3.0))
        assert info["z_star"] == 1.0
        assert info["f_star"] == pytest.approx((1 - 2) ** 2 + (1 - 3) ** 2)

    def test_composite_tightens_feasible_interval(self):
        _, info = two_node_quadratic(y_bounds=((0.0, 0.4), (0.0, 0.4)))
        assert info["z_star"] == pytest.approx(0.4)
        assert info["f_star"] == pytest.approx(0.16 + 0.36)


class TestTheorem2StackedNorm:
    def test_composite_run_within_stacked_envelope(self):
        # brute-force dual (u, v1, v2) = (-0.8, 0, 0.4) gives rho=sqrt(0.8);
        # the stacked consensus/feasibility norm must respect the composite
        # envelope at every logged iterate, and the objective gap likewise
        problem, info = two_node_quadratic(y_bounds=((0.0, 0.4), (0.0, 0.4)))
        rho = two_node_dual_norm(
            [problem.gradients[0], problem.gradients[1]],
            info["x_bounds"], info["z_star"], y_bounds=info["y_bounds"])
        assert rho == pytest.approx(math.sqrt(0.8), abs=1e-9)
        tr = run(problem, SolverConfig(r0=1.0, max_iter=20_000, log_every=1),
                 rho=rho, f_star=info["f_star"])
        assert tr.error is None
        stacked = np.sqrt(tr.column("consensus_err") ** 2
                          + tr.column("feas_err") ** 2)
        assert np.all(stacked <= tr.column("consensus_bound") + 1e-9)
        gap = np.abs(tr.column("f_value") - info["f_star"])
        assert np.all(gap <= tr.column("gap_bound") + 1e-9)
        assert np.all(tr.column("lemma1_residual") <= 1e-9)


class TestSetSpec:
    def test_all_variants(self):
        assert isinstance(set_from_spec("box 0 1 4"), Box)
        assert isinstance(set_from_spec("l1 2.0 3"), L1Ball)
        assert isinstance(set_from_spec("l2 1.5 3"), L2Ball)
        assert isinstance(set_from_spec("simplex 5"), Simplex)
        assert isinstance(set_from_spec("nuclear 1.0 4"), NuclearBallSym)
        assert isinstance(set_from_spec("wholespace 2"), WholeSpace)

    def test_dimensions(self):
        assert set_from_spec("box -1 1 6").dim == 6
        assert set_from_spec("nuclear 2.0 3").dim == 9

    def test_rejects_unknown_and_malformed(self):
        with pytest.raises(ValueError, match="unknown set"):
            set_from_spec("ellipsoid 1 2")
        with pytest.raises(ValueError, match="bad set"):
            set_from_spec("box 0 1")
        with pytest.raises(ValueError, match="empty"):
            set_from_spec("  ")


class TestCustomQuadratic:
    def test_seeded_targets_deterministic(self):
        g = random_geometric_graph(4, 6, 0.9)
        a = custom_quadratic(g, "box 0 1 3", targets_seed=5)
        b = custom_quadratic(g, "box 0 1 3", targets_seed=5)
        x = np.full((6, 3), 0.25)
        assert a.objective_value(x) == b.objective_value(x)

    def test_composite_variant_runs(self):
        g = random_geometric_graph(1, 5, 0.9)
        problem = custom_quadratic(g, "box -2 2 3", y_spec="box 0 1 3",
                                   targets_seed=2)
        assert problem.composite
        tr = run(problem, SolverConfig(max_iter=200, log_every=20))
        assert tr.error is None
        assert tr.records[-1].feas_err < tr.records[0].feas_err + 1.0
