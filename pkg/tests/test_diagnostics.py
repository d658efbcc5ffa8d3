import math

import numpy as np
import pytest

from consensusfw.diagnostics import (
    BoundParams,
    Trace,
    TraceRecord,
    consensus_bound,
    gap_bound,
    gap_bound_literal,
    lemma1_residual,
    lemma1_residual_from_metrics,
    rate_fit,
    sigma_k,
    two_node_dual_norm,
)
from consensusfw.problems import quadratic_toy
from consensusfw.solvers import IterateState


def params(rho=0.0, delta=2.0, beta=2.0, r0=1.0, lap=2.0, composite=False,
           kappa=0.0):
    return BoundParams(rho=rho, delta=delta, beta=beta, r0=r0,
                       laplacian_norm=lap, composite=composite, kappa=kappa)


class TestSigma:
    def test_arithmetic(self):
        # beta/sqrt(k) + |L| r0 at k=4
        assert sigma_k(params(), 4) == pytest.approx(3.0)

    def test_limit(self):
        assert sigma_k(params(), 10 ** 12) == pytest.approx(2.0, abs=1e-5)
        assert sigma_k(params(composite=True), 10 ** 12) == pytest.approx(
            3.0, abs=1e-5)

    def test_kappa_inflation_doubles(self):
        assert sigma_k(params(kappa=1.0), 4) == pytest.approx(6.0)


class TestConsensusBound:
    def test_arithmetic(self):
        # rho=0, sigma*delta=1, k=4 -> 2*sqrt(1)/2
        bp = params(rho=0.0, delta=1.0 / 3.0, beta=2.0, r0=1.0, lap=2.0)
        assert sigma_k(bp, 4) * bp.delta == pytest.approx(1.0)
        assert consensus_bound(bp, 4) == pytest.approx(1.0)

    def test_monotone_nonincreasing(self):
        bp = params(rho=0.7)
        vals = [consensus_bound(bp, k) for k in range(2, 3000)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


class TestGapBound:
    def test_arithmetic_with_dual(self):
        # sigma*delta = 1, rho = 1, k = 1 -> 2 max{1, 2} = 4
        bp = params(rho=1.0, delta=1.0 / 4.0, beta=2.0, r0=1.0, lap=2.0)
        assert sigma_k(bp, 1) * bp.delta == pytest.approx(1.0)
        assert gap_bound(bp, 1) == pytest.approx(4.0)

    def test_zero_dual_reduces_to_lemma_term(self):
        bp = params(rho=0.0)
        for k in (1, 7, 100):
            assert gap_bound(bp, k) == pytest.approx(
                2.0 * sigma_k(bp, k) * bp.delta / math.sqrt(k))

    def test_literal_variant_squares_delta(self):
        bp = params(rho=0.0, delta=3.0)
        for k in (1, 9):
            assert gap_bound_literal(bp, k) == pytest.approx(
                2.0 * sigma_k(bp, k) * 9.0 / math.sqrt(k))

    def test_monotone_nonincreasing(self):
        bp = params(rho=0.5, delta=4.0)
        vals = [gap_bound(bp, k) for k in range(2, 3000)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_log_log_slope_is_minus_half(self):
        bp = params(rho=0.0)
        ks = np.arange(10 ** 4, 10 ** 5, 997)
        vals = np.array([gap_bound(bp, int(k)) for k in ks])
        slope, _ = np.polyfit(np.log(ks), np.log(vals), 1)
        assert slope == pytest.approx(-0.5, abs=0.01)


class TestLemmaResidual:
    def test_at_replicated_optimum(self):
        # zero gap and zero errors leave residual = -2 sigma delta / sqrt(k)
        bp = params()
        k = 1000
        res = lemma1_residual_from_metrics(0.5, 0.5, 0.0, 0.0, bp, k)
        assert res == pytest.approx(-2.0 * sigma_k(bp, k) * bp.delta
                                    / math.sqrt(k))

    def test_state_level_wrapper(self):
        problem, info = quadratic_toy()
        bp = params()
        st = IterateState(x=np.array([[0.5], [0.5]]), k=50)
        direct = lemma1_residual(problem, st, info["f_star"], bp)
        assert direct == pytest.approx(
            lemma1_residual_from_metrics(0.5, 0.5, 0.0, 0.0, bp, 50))

    def test_error_terms_tighten_the_certificate(self):
        bp = params()
        base = lemma1_residual_from_metrics(1.0, 0.5, 0.0, 0.0, bp, 100)
        with_err = lemma1_residual_from_metrics(1.0, 0.5, 0.3, 0.4, bp, 100)
        assert with_err == pytest.approx(
            base + 0.5 * math.sqrt(100) * (0.09 + 0.16))


class TestRateFit:
    def _trace(self, fn):
        tr = Trace()
        for k in range(1, 20001, 7):
            tr.append(TraceRecord(k, fn(k), fn(k), 0.0, 0.0, 0.0, 0.0,
                                  0.0, 0.0, 0.0))
        return tr

    def test_inverse_sqrt(self):
        tr = self._trace(lambda k: 3.0 / math.sqrt(k))
        assert rate_fit(tr, "f_value", 10, 20000) == pytest.approx(
            -0.5, abs=1e-6)

    def test_inverse_linear(self):
        tr = self._trace(lambda k: 5.0 / k)
        assert rate_fit(tr, "consensus_err", 10, 20000) == pytest.approx(
            -1.0, abs=1e-6)

    def test_insufficient_records(self):
        tr = self._trace(lambda k: 1.0 / k)
        with pytest.raises(ValueError, match="at least 10"):
            rate_fit(tr, "f_value", 1, 20)

    def test_rejects_nonpositive_values(self):
        tr = self._trace(lambda k: -1.0)
        with pytest.raises(ValueError, match="positive"):
            rate_fit(tr, "f_value", 1, 20000)


class TestDualNorm:
    def test_interior_optimum_unique_dual(self):
        rho = two_node_dual_norm(
            [lambda z: 2.0 * z, lambda z: 2.0 * (z - 1.0)],
            [(0.0, 1.0), (0.0, 1.0)], 0.5)
        assert rho == pytest.approx(1.0, abs=1e-9)

    def test_boundary_optimum_zero_dual(self):
        # both targets above the box: z* = 1 with both nodes at the upper
        # bound; u = 0 satisfies stationarity, so the least norm is 0
        rho = two_node_dual_norm(
            [lambda z: 2.0 * (z - 2.0), lambda z: 2.0 * (z - 3.0)],
            [(0.0, 1.0), (0.0, 1.0)], 1.0)
        assert rho == pytest.approx(0.0, abs=1e-9)

    def test_composite_hand_computed(self):
        # X = [0,1], Y = [0, 0.4], targets (0, 1): z* = 0.4, least-norm
        # dual (u, v1, v2) = (-0.8, 0, 0.4), norm sqrt(0.8)
        rho = two_node_dual_norm(
            [lambda z: 2.0 * z, lambda z: 2.0 * (z - 1.0)],
            [(0.0, 1.0), (0.0, 1.0)], 0.4,
            y_bounds=[(0.0, 0.4), (0.0, 0.4)])
        assert rho == pytest.approx(math.sqrt(0.8), abs=1e-9)

    def test_infeasible_z_star_rejected(self):
        with pytest.raises(ValueError, match="not feasible"):
            two_node_dual_norm([lambda z: z, lambda z: z],
                               [(0.0, 1.0), (0.0, 1.0)], 2.0)


class TestTraceCsv:
    def _record(self, k, value):
        return TraceRecord(k, value, 0.1, 0.0, 1.0, 2.0, 3.0, 4.0, -1.0, 0.0)

    def test_header_and_round_trip(self):
        tr = Trace()
        tr.append(self._record(1, 1.0 / 3.0))
        tr.append(self._record(11, math.pi))
        text = tr.to_csv_text()
        assert text.splitlines()[0] == (
            "k,f,consensus_err,feas_err,sigma_k,gap_bound,gap_bound_lit,"
            "consensus_bound,lemma1_residual,eps_budget")
        back = Trace.from_csv_text(text)
        assert [r.k for r in back.records] == [1, 11]
        assert back.records[0].f_value == 1.0 / 3.0  # 17 digits round-trip
        assert back.records[1].f_value == math.pi
        assert back.to_csv_text() == text

    def test_nan_round_trips(self):
        tr = Trace()
        tr.append(TraceRecord(1, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0,
                              math.nan, 0.0))
        back = Trace.from_csv_text(tr.to_csv_text())
        assert math.isnan(back.records[0].lemma1_residual)

    def test_k_strictly_increasing(self):
        tr = Trace()
        tr.append(self._record(5, 0.0))
        with pytest.raises(ValueError, match="increasing"):
            tr.append(self._record(5, 1.0))

    def test_unknown_column(self):
        with pytest.raises(KeyError):
            Trace().column("nope")


class TestBoundParamsValidation:
    def test_rejects_negative(self):
        with pytest.raises(ValueError, match="rho"):
            params(rho=-1.0)
        with pytest.raises(ValueError, match="delta"):
            params(delta=-0.1)
