"""Compact convex per-node feasible sets and their oracles.

Every set descriptor works on flat float vectors of length ``dim`` and
exposes:

* ``lmo(c)``             -- a minimizer of ``<c, y>`` over the set,
* ``lmo_inexact(c, eps)``-- a feasible point within ``eps`` of that minimum,
* ``project(c)``         -- nearest point in the set (where supported),
* ``squared_diameter()`` -- an upper bound on ``max ||y - y'||^2``,
* ``contains(x, tol)``   -- membership up to ``tol``,
* ``canonical_point()``  -- a deterministic feasible starting point.

All descriptors are immutable and every oracle call is a pure function, so
they are safe to share across threads.

Tie-breaking is deterministic throughout: box coordinates with a zero
objective coefficient pick the lower bound, argmin/argmax ties pick the
lowest index, and the nuclear ball resolves an exact magnitude tie between
the extreme eigenvalues in favor of the largest (most positive) one.

The symmetric nuclear-norm ball is the one set here whose linear
minimization needs an iterative eigensolver.  Its extreme points are
``+/- radius * v v^T`` for unit vectors ``v``, so the oracle reduces to the
eigenvalue of largest magnitude of the symmetrized objective matrix.  That
eigenpair comes from a deterministic Lanczos iteration (matrix-vector
products only, full reorthogonalization, seeded replacement directions on
breakdown), run until the Ritz residual certifies the requested optimality
gap via ``gap <= 2 * radius * ||C v - rho(v) v||``.  Budgeted calls stop
early once certified, but never return answers cruder than a small
relative-residual floor, however loose the budget.
"""

import numpy as np


class CapabilityError(NotImplementedError):
    """Operation not supported by this set variant (declared, not a bug)."""


class OracleError(RuntimeError):
    """An oracle could not meet its accuracy contract."""


# relative residual at which the eigensolver treats an LMO call as exact
_EXACT_RES_REL = 1e-12
# quality floor for budgeted calls: a loose budget is certified but never
# exploited beyond this relative residual, so inexact answers stay sane
_INEXACT_REL_FLOOR = 0.02
_LANCZOS_MAX_DIM = 64        # Krylov cap; exhaustive below this size
_BREAKDOWN_REL = 1e-14


def _ramp_start(n):
    v = 1.0 + np.arange(n) / (10.0 * n)
    return v / np.linalg.norm(v)


class FeasibleSet:
    """Base class; concrete variants fill in the oracle methods."""

    dim = None

    def _check(self, c):
        c = np.asarray(c, dtype=float)
        if c.shape != (self.dim,):
            raise ValueError(f"expected vector of shape ({self.dim},), "
                             f"got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite entries in oracle input")
        return c

    def lmo(self, c):
        raise CapabilityError(f"{type(self).__name__} has no LMO")

    def lmo_certified(self, c, eps):
        """Feasible eps-minimizer plus a certified optimality-gap bound.

        Exact-oracle variants return their LMO output with a zero
        certificate regardless of ``eps``.
        """
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        return self.lmo(c), 0.0

    def lmo_inexact(self, c, eps):
        return self.lmo_certified(c, eps)[0]

    @property
    def supports_projection(self):
        return False

    def project(self, c):
        raise CapabilityError(
            f"{type(self).__name__} does not support projection")

    def squared_diameter(self):
        raise CapabilityError(
            f"{type(self).__name__} has no finite diameter")

    def contains(self, x, tol):
        raise NotImplementedError

    def canonical_point(self):
        raise NotImplementedError


class Box(FeasibleSet):
    """Axis-aligned box ``lower <= y <= upper`` (componentwise, finite)."""

    def __init__(self, lower, upper, dim=None):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.ndim == 0 or upper.ndim == 0:
            if dim is None:
                raise ValueError("scalar bounds need an explicit dim")
            lower = np.full(dim, float(lower))
            upper = np.full(dim, float(upper))
        if lower.shape != upper.shape or lower.ndim != 1:
            raise ValueError("bounds must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("box bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("box requires lower <= upper")
        self.lower = lower
        self.upper = upper
        self.dim = lower.size

    def lmo(self, c):
        c = self._check(c)
        # zero coefficients break the tie toward the lower bound
        return np.where(c >= 0, self.lower, self.upper)

    @property
    def supports_projection(self):
        return True

    def project(self, c):
        c = self._check(c)
        return np.clip(c, self.lower, self.upper)

    def squared_diameter(self):
        return float(np.sum((self.upper - self.lower) ** 2))

    def contains(self, x, tol):
        x = self._check(x)
        return bool(np.all(x >= self.lower - tol)
                    and np.all(x <= self.upper + tol))

    def canonical_point(self):
        return 0.5 * (self.lower + self.upper)


class L1Ball(FeasibleSet):
    """Scaled cross-polytope ``||y||_1 <= radius``."""

    def __init__(self, radius, dim):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.dim = int(dim)

    def lmo(self, c):
        c = self._check(c)
        y = np.zeros(self.dim)
        if np.any(c != 0.0):
            j = int(np.argmax(np.abs(c)))  # first maximal index on ties
            y[j] = -self.radius * np.sign(c[j])
        return y

    def squared_diameter(self):
        return (2.0 * self.radius) ** 2

    def contains(self, x, tol):
        x = self._check(x)
        return bool(np.sum(np.abs(x)) <= self.radius + tol)

    def canonical_point(self):
        return np.zeros(self.dim)


class L2Ball(FeasibleSet):
    """Euclidean ball ``||y||_2 <= radius``."""

    def __init__(self, radius, dim):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.dim = int(dim)

    def lmo(self, c):
        c = self._check(c)
        norm = np.linalg.norm(c)
        if norm == 0.0:
            return np.zeros(self.dim)
        return -(self.radius / norm) * c

    @property
    def supports_projection(self):
        return True

    def project(self, c):
        c = self._check(c)
        norm = np.linalg.norm(c)
        if norm <= self.radius:
            return c.copy()
        return (self.radius / norm) * c

    def squared_diameter(self):
        return (2.0 * self.radius) ** 2

    def contains(self, x, tol):
        x = self._check(x)
        return bool(np.linalg.norm(x) <= self.radius + tol)

    def canonical_point(self):
        return np.zeros(self.dim)


class Simplex(FeasibleSet):
    """Probability simplex ``y >= 0, sum(y) = 1``."""

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)

    def lmo(self, c):
        c = self._check(c)
        y = np.zeros(self.dim)
        y[int(np.argmin(c))] = 1.0  # first minimal index on ties
        return y

    @property
    def supports_projection(self):
        return True

    def project(self, c):
        # sort-based projection (Held et al. / Duchi et al.)
        c = self._check(c)
        u = np.sort(c)[::-1]
        css = np.cumsum(u) - 1.0
        idx = np.arange(1, self.dim + 1)
        rho = int(np.nonzero(u * idx > css)[0][-1])
        tau = css[rho] / (rho + 1.0)
        return np.maximum(c - tau, 0.0)

    def squared_diameter(self):
        # ||e_i - e_j||^2 = 2 between distinct vertices
        return 2.0 if self.dim >= 2 else 0.0

    def contains(self, x, tol):
        x = self._check(x)
        return bool(np.all(x >= -tol) and abs(np.sum(x) - 1.0) <= tol)

    def canonical_point(self):
        return np.full(self.dim, 1.0 / self.dim)


class NuclearBallSym(FeasibleSet):
    """Symmetric matrices with nuclear norm at most ``radius``.

    Points are ``side x side`` symmetric matrices stored flattened
    row-major (``dim = side**2``).  Oracle inputs are symmetrized before
    use, and oracle outputs are exactly symmetric rank-one matrices of
    Frobenius norm ``radius`` (or the zero matrix for a zero objective).
    """

    def __init__(self, radius, side):
        if radius <= 0:
            raise ValueError("radius must be positive")
        if side < 1:
            raise ValueError("side must be positive")
        self.radius = float(radius)
        self.side = int(side)
        self.dim = self.side * self.side

    def _sym(self, c):
        mat = self._check(c).reshape(self.side, self.side)
        return 0.5 * (mat + mat.T)

    def lmo(self, c):
        y, _ = self._solve(self._sym(c), eps=0.0)
        return y

    def lmo_certified(self, c, eps):
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        return self._solve(self._sym(c), eps=eps)

    def _solve(self, sym, eps):
        ys, certs = _nuclear_lmo_core([sym], [self.radius], [eps])
        return ys[0].ravel(), certs[0]

    def squared_diameter(self):
        return (2.0 * self.radius) ** 2

    def contains(self, x, tol):
        mat = self._check(x).reshape(self.side, self.side)
        if np.max(np.abs(mat - mat.T)) > tol:
            return False
        nuclear = float(np.sum(np.linalg.svd(mat, compute_uv=False)))
        return nuclear <= self.radius + tol

    def canonical_point(self):
        return np.zeros(self.dim)


class WholeSpace(FeasibleSet):
    """Unbounded sentinel used as a trivial composite constraint.

    Its projection is the identity, so the composite penalty term vanishes
    and the composite iteration reduces to the plain one.
    """

    def __init__(self, dim):
        self.dim = int(dim)

    @property
    def supports_projection(self):
        return True

    def project(self, c):
        return self._check(c).copy()

    def contains(self, x, tol):
        self._check(x)
        return True

    def canonical_point(self):
        return np.zeros(self.dim)


def nuclear_lmo_batch(balls, directions, eps_each):
    """Batched nuclear-ball LMO for one direction per ball.

    Parameters
    ----------
    balls : sequence of NuclearBallSym
        Must all share the same matrix side.
    directions : ndarray of shape (len(balls), side**2)
        Flattened objective matrices.
    eps_each : sequence of float
        Per-ball optimality-gap budgets (0 for exact calls).

    Returns
    -------
    ys : ndarray of shape (len(balls), side**2)
    certs : ndarray of certified gap bounds, one per ball.

    The per-ball results are identical to calling ``lmo_certified`` on each
    ball separately; batching only amortizes the iteration over the batch.
    """
    sides = {b.side for b in balls}
    if len(sides) != 1:
        raise ValueError("batched nuclear LMO requires a common side")
    side = sides.pop()
    directions = np.asarray(directions, dtype=float)
    mats = [b._sym(c) for b, c in zip(balls, directions)]
    ys, certs = _nuclear_lmo_core(mats, [b.radius for b in balls], eps_each)
    return ys.reshape(len(balls), side * side), np.asarray(certs)


def _nuclear_lmo_core(mats, radii, eps_each):
    """Shared eigensolver behind the nuclear-ball oracles.

    For each symmetric matrix C, finds the extreme eigenpairs by a batched
    Lanczos iteration from a deterministic start vector and returns
    ``y = -radius * sign(lambda) * v v^T`` for the end of larger magnitude
    together with the residual certificate ``2 * radius * ||C v - rho v||``
    (residuals are recomputed directly, not trusted from the tridiagonal
    estimate).  Each matrix stops at the first step whose certificate meets
    its target, so batched and one-at-a-time calls agree exactly.

    The basis is fully reorthogonalized; on breakdown the iteration
    continues with a seeded direction orthogonal to the basis, so below
    the Krylov cap the decomposition is exhaustive and the extreme ends
    are exact to machine precision even for adversarial inputs.
    """
    m = len(mats)
    n = mats[0].shape[0]
    c_stack = np.stack(mats)
    radii = np.asarray(radii, dtype=float)
    eps_arr = np.asarray(eps_each, dtype=float)
    scale = np.linalg.norm(c_stack.reshape(m, -1), axis=1)
    targets = np.where(eps_arr > 0.0,
                       np.minimum(eps_arr / (2.0 * radii),
                                  _INEXACT_REL_FLOOR * scale),
                       _EXACT_RES_REL * scale)
    targets = np.maximum(targets, _EXACT_RES_REL * scale)

    steps = min(n, _LANCZOS_MAX_DIM)
    basis = np.zeros((m, steps, n))
    alphas = np.zeros((m, steps))
    betas = np.zeros((m, steps))
    resolved = scale == 0.0  # zero objectives resolve to the center
    theta = np.zeros((m, 2))
    ritz = np.zeros((m, 2, n))
    resid = np.zeros((m, 2))

    def record(j, force):
        live = np.nonzero(~resolved)[0]
        dim = j + 1
        tri = np.zeros((live.size, dim, dim))
        idx = np.arange(dim)
        tri[:, idx, idx] = alphas[live, :dim]
        if dim > 1:
            off = np.arange(dim - 1)
            tri[:, off, off + 1] = betas[live, :dim - 1]
            tri[:, off + 1, off] = betas[live, :dim - 1]
        evals, evecs = np.linalg.eigh(tri)
        est_lo = betas[live, j] * np.abs(evecs[:, dim - 1, 0])
        est_hi = betas[live, j] * np.abs(evecs[:, dim - 1, dim - 1])
        for pos, b in enumerate(live):
            if not force and max(est_lo[pos], est_hi[pos]) > targets[b]:
                continue
            ok = True
            for slot, end in ((0, 0), (1, dim - 1)):
                y = evecs[pos, :, end] @ basis[b, :dim]
                y /= np.linalg.norm(y)
                lam = evals[pos, end]
                true_res = np.linalg.norm(c_stack[b] @ y - lam * y)
                theta[b, slot], ritz[b, slot], resid[b, slot] = lam, y, \
                    true_res
                ok = ok and true_res <= targets[b]
            if ok or force:
                resolved[b] = True

    v = np.tile(_ramp_start(n), (m, 1))
    basis[:, 0] = v
    for j in range(steps):
        w = np.einsum("bij,bj->bi", c_stack, basis[:, j])
        alphas[:, j] = np.einsum("bi,bi->b", basis[:, j], w)
        w -= alphas[:, j, None] * basis[:, j]
        if j > 0:
            w -= betas[:, j - 1, None] * basis[:, j - 1]
        span = basis[:, :j + 1]
        for _ in range(2):  # full reorthogonalization, twice for stability
            coeff = np.einsum("bkn,bn->bk", span, w)
            w -= np.einsum("bkn,bk->bn", span, coeff)
        betas[:, j] = np.linalg.norm(w, axis=1)
        if not resolved.all() and (j >= 1 or j == steps - 1):
            record(j, force=(j == steps - 1))
        if resolved.all() or j == steps - 1:
            break
        floor = _BREAKDOWN_REL * np.maximum(scale, 1e-300)
        broke = (betas[:, j] <= floor) & ~resolved
        safe = np.where(betas[:, j] > floor, betas[:, j], 1.0)
        nxt = w / safe[:, None]
        for b in np.nonzero(broke)[0]:
            # invariant subspace: continue exhaustively with a seeded
            # direction orthogonal to the current basis
            rng = np.random.default_rng([9137, int(b), int(j)])
            fresh = rng.standard_normal(n)
            fresh -= span[b].T @ (span[b] @ fresh)
            nxt[b] = fresh / np.linalg.norm(fresh)
            betas[b, j] = 0.0
        basis[:, j + 1] = nxt

    ys = np.empty((m, n, n))
    certs = np.empty(m)
    for i in range(m):
        if scale[i] == 0.0:  # zero objective: every point ties, use center
            ys[i] = np.zeros((n, n))
            certs[i] = 0.0
            continue
        # larger magnitude end wins; ties go to the largest eigenvalue
        slot = 1 if abs(theta[i, 1]) >= abs(theta[i, 0]) else 0
        lam, v_i = theta[i, slot], ritz[i, slot]
        sign = -1.0 if lam < 0 else 1.0
        ys[i] = -radii[i] * sign * np.outer(v_i, v_i)
        certs[i] = 2.0 * radii[i] * resid[i, slot]
        if eps_arr[i] > 0.0 and certs[i] > eps_arr[i]:
            raise OracleError(
                f"nuclear LMO certificate {certs[i]:.3e} exceeds the "
                f"requested gap {eps_arr[i]:.3e}")
    return ys, certs
