"""Per-iteration metrics and convergence bounds as executable inequalities.

Every run produces a :class:`Trace` of :class:`TraceRecord` rows.  Each row
carries the raw metrics (objective value, consensus error ``||E^T x||``,
composite feasibility error ``||x - P_Y(x)||``) together with the values of
the theoretical envelopes at that iteration, so a run certifies its own
convergence claims:

* ``sigma_k``         -- the iteration constant ``beta/sqrt(k) + c * r0``
  with ``c`` the Laplacian norm (plus one in composite mode), inflated by
  ``1 + kappa`` when the linear minimization is inexact;
* ``consensus_bound`` -- ``2 (rho + sqrt(sigma_k * delta)) / sqrt(k)``,
  which in composite mode bounds the stacked consensus/feasibility norm;
* ``gap_bound``       -- ``(2/sqrt(k)) max{sigma_k delta, rho^2 +
  rho sqrt(sigma_k delta)}`` on ``|f(x^k) - f*|``.  A published variant
  squares ``delta`` in the first argument of the max; since ``delta``
  already bounds a *squared* diameter that reading is inconsistent with
  the per-iteration certificate below, so both are recorded
  (``gap_bound`` and ``gap_bound_lit``) and checks use the former.
* ``lemma1_residual`` -- the slack of the per-iteration certificate

      f(x^k) - f* <= 2 sigma_k delta / sqrt(k)
                     - (sqrt(k)/2) (||E^T x^k||^2 + ||x^k - P_Y(x^k)||^2),

  reported as ``lhs - rhs`` (nonpositive up to the accuracy of ``f*``).

``rho`` is the norm of a dual solution; it is not observable by the
algorithm, so quantitative bound checks derive it by brute force on tiny
two-node instances (:func:`two_node_dual_norm`) and otherwise treat it as
a configuration input (0 disables the dual contribution).
"""

import math
from dataclasses import dataclass, fields

import numpy as np

from .graph import incidence_apply_t


@dataclass(frozen=True)
class BoundParams:
    """Constants entering the convergence bounds.

    ``rho`` is the dual-solution norm (``||u*||``, stacked with ``||v*||``
    in composite mode); ``kappa`` is the inexact-oracle inflation factor
    (0 for exact runs).
    """

    rho: float
    delta: float
    beta: float
    r0: float
    laplacian_norm: float
    composite: bool = False
    kappa: float = 0.0

    def __post_init__(self):
        for name in ("rho", "delta", "beta", "r0", "laplacian_norm",
                     "kappa"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def sigma_k(params, k):
    """Iteration constant of the bounds at iterate ``k >= 1``."""
    lap = params.laplacian_norm + (1.0 if params.composite else 0.0)
    base = params.beta / math.sqrt(k) + lap * params.r0
    return (1.0 + params.kappa) * base


def consensus_bound(params, k):
    """Envelope on ``||E^T x^k||`` (stacked norm in composite mode)."""
    s = sigma_k(params, k)
    return 2.0 * (params.rho + math.sqrt(s * params.delta)) / math.sqrt(k)


def gap_bound(params, k):
    """Envelope on ``|f(x^k) - f*|`` (consistent, delta-linear form)."""
    s = sigma_k(params, k)
    sd = s * params.delta
    return 2.0 * max(sd, params.rho ** 2
                     + params.rho * math.sqrt(sd)) / math.sqrt(k)


def gap_bound_literal(params, k):
    """Published variant of :func:`gap_bound` with delta squared."""
    s = sigma_k(params, k)
    sd = s * params.delta
    return 2.0 * max(s * params.delta ** 2, params.rho ** 2
                     + params.rho * math.sqrt(sd)) / math.sqrt(k)


def lemma1_residual_from_metrics(f_value, f_star, cons_err, feas_err,
                                 params, k):
    """Certificate slack ``lhs - rhs`` from already-computed metrics."""
    rhs = (2.0 * sigma_k(params, k) * params.delta / math.sqrt(k)
           - 0.5 * math.sqrt(k) * (cons_err ** 2 + feas_err ** 2))
    return f_value - f_star - rhs


def lemma1_residual(problem, state, f_star, params):
    """Certificate slack evaluated directly on an iterate."""
    f_value = problem.objective_value(state.x)
    cons_err = float(np.linalg.norm(incidence_apply_t(problem.graph,
                                                      state.x)))
    feas_err = problem.feasibility_error(state.x)
    return lemma1_residual_from_metrics(f_value, f_star, cons_err, feas_err,
                                        params, state.k)


@dataclass(frozen=True)
class TraceRecord:
    k: int
    f_value: float
    consensus_err: float
    feas_err: float
    sigma_k: float
    gap_bound: float
    gap_bound_lit: float
    consensus_bound: float
    lemma1_residual: float
    eps_budget_used: float


CSV_HEADER = ("k,f,consensus_err,feas_err,sigma_k,gap_bound,gap_bound_lit,"
              "consensus_bound,lemma1_residual,eps_budget")

_COLUMNS = [f.name for f in fields(TraceRecord)]


class Trace:
    """Ordered trace of logged iterations, with optional error annotation.

    ``error`` is set (and the trace left partial) when the driver stopped
    on a solver failure; ``final_x`` holds the last iterate either way.
    """

    def __init__(self):
        self.records = []
        self.error = None
        self.final_x = None

    def append(self, record):
        if self.records and record.k <= self.records[-1].k:
            raise ValueError("iteration index must be strictly increasing")
        self.records.append(record)

    def column(self, name):
        if name not in _COLUMNS:
            raise KeyError(f"unknown column {name!r}")
        return np.array([getattr(r, name) for r in self.records])

    def to_csv_text(self):
        lines = [CSV_HEADER]
        for r in self.records:
            vals = [str(r.k)] + [format(getattr(r, name), ".17g")
                                 for name in _COLUMNS[1:]]
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def from_csv_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != CSV_HEADER:
            raise ValueError("unrecognized trace CSV header")
        trace = cls()
        for ln in lines[1:]:
            parts = ln.split(",")
            trace.append(TraceRecord(int(parts[0]),
                                     *[float(p) for p in parts[1:]]))
        return trace

    @classmethod
    def read_csv(cls, path):
        with open(path) as fh:
            return cls.from_csv_text(fh.read())


def rate_fit(trace, column, k_lo, k_hi):
    """Least-squares slope of log(column) against log(k) on [k_lo, k_hi].

    Needs at least 10 logged records with positive values in the range.
    A column decaying like ``c / sqrt(k)`` fits slope -0.5.
    """
    ks = trace.column("k").astype(float)
    vals = trace.column(column)
    mask = (ks >= k_lo) & (ks <= k_hi)
    ks, vals = ks[mask], vals[mask]
    if ks.size < 10:
        raise ValueError(
            f"need at least 10 records in [{k_lo}, {k_hi}], have {ks.size}")
    if np.any(vals <= 0):
        raise ValueError("rate fit requires positive column values")
    slope, _ = np.polyfit(np.log(ks), np.log(vals), 1)
    return float(slope)


def _normal_cone_interval(lower, upper, z, tol=1e-9):
    """Normal cone of [lower, upper] at z, as an interval (lo, hi)."""
    if z < lower - tol or z > upper + tol:
        return None
    lo = -math.inf if z <= lower + tol else 0.0
    hi = math.inf if z >= upper - tol else 0.0
    return lo, hi


def two_node_dual_norm(grad_fns, x_bounds, z_star, y_bounds=None,
                       u_range=None):
    """Least-norm dual solution for a two-node path with 1-d boxes.

    Brute-forces the stationarity system at the consensus optimum
    ``z_star``: for the single edge multiplier ``u`` the per-node
    conditions are

        -(E u)_i - f_i'(z*) - v_i  in  N_{X_i}(z*),   v_i in N_{Y_i}(z*),

    with ``(E u) = (+u, -u)`` and ``v_i = 0`` when there is no composite
    set.  For each ``u`` on a dense grid the least-norm ``v_i`` follow in
    closed form from the normal-cone intervals; the grid is refined around
    the incumbent until the dual norm is resolved to ~1e-12.

    Parameters
    ----------
    grad_fns : pair of callables
        Scalar derivatives of the two node objectives.
    x_bounds : pair of (lower, upper)
        The per-node box constraints with a cheap LMO.
    z_star : float
        Consensus optimizer (must be feasible for all boxes).
    y_bounds : pair of (lower, upper), optional
        Composite per-node boxes; when given the returned norm stacks the
        edge multiplier with the two composite multipliers.

    Returns
    -------
    float
        ``||u*||`` (or ``||(u*, v*)||`` in the composite case) of the
        least-norm KKT solution.
    """
    g = []
    for fn in grad_fns:
        val = np.ravel(np.asarray(fn(z_star), dtype=float))
        if val.size != 1:
            raise ValueError("the dual brute force handles 1-d blocks only")
        g.append(float(val[0]))
    nx = [_normal_cone_interval(lo, hi, z_star) for lo, hi in x_bounds]
    if any(c is None for c in nx):
        raise ValueError("z_star is not feasible for the X boxes")
    if y_bounds is None:
        ny = [(0.0, 0.0), (0.0, 0.0)]
    else:
        ny = [_normal_cone_interval(lo, hi, z_star) for lo, hi in y_bounds]
        if any(c is None for c in ny):
            raise ValueError("z_star is not feasible for the Y boxes")

    def norm2(u_grid):
        # a_i = -(Eu)_i - f_i'(z*); v_i must lie in (a_i - N_X) /\ N_Y
        total = u_grid ** 2
        for i, edge_sign in enumerate((1.0, -1.0)):
            a = -edge_sign * u_grid - g[i]
            lo = np.maximum(a - nx[i][1], ny[i][0])
            hi = np.minimum(a - nx[i][0], ny[i][1])
            v = np.maximum.reduce([lo, -hi, np.zeros_like(u_grid)])
            total = total + np.where(lo <= hi, v ** 2, math.inf)
        return total

    if u_range is None:
        u_range = 10.0 * (1.0 + max(abs(v) for v in g))
    lo, hi = -u_range, u_range
    for _ in range(6):
        grid = np.linspace(lo, hi, 20001)
        vals = norm2(grid)
        best = int(np.argmin(vals))
        if not math.isfinite(vals[best]):
            raise ValueError("no dual solution found (KKT infeasible?)")
        step = grid[1] - grid[0]
        lo, hi = grid[best] - 2 * step, grid[best] + 2 * step
    return float(math.sqrt(vals[best]))
