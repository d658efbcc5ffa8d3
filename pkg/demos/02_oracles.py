"""Feasible sets and their oracles.

Each per-node constraint set exposes a linear minimization oracle (LMO)
and, where it is cheap, a Euclidean projection.  The split matters: the
nuclear-norm ball has a cheap LMO but no cheap projection, the entrywise
box the reverse, and the composite solver combines them.
"""

import numpy as np

from consensusfw import Box, L1Ball, L2Ball, NuclearBallSym, Simplex

print("=== Linear minimization across variants ===")
c = np.array([3.0, -4.0])
print("direction c =", c)
print("box [0,1]^2    ->", Box(0.0, 1.0, dim=2).lmo(c))
print("l1 ball r=2    ->", L1Ball(2.0, 2).lmo(c))
print("l2 ball r=1    ->", L2Ball(1.0, 2).lmo(c))
print("simplex        ->", Simplex(2).lmo(c))
print()

print("=== Projections where they are cheap ===")
p = np.array([-2.0, 0.5, 7.0])
print("clamp to [0,1]^3:      ", Box(0.0, 1.0, dim=3).project(p))
print("radial to the l2 ball: ", L2Ball(1.0, 2).project(np.array([3.0, 4.0])))
print("sorting-based simplex: ", Simplex(3).project(np.full(3, 0.5)))
print("l1 ball / nuclear ball: no projection --",
      L1Ball(1.0, 2).supports_projection,
      NuclearBallSym(1.0, 2).supports_projection)
print()

print("=== The nuclear-ball LMO is an extreme eigenpair ===")
ball = NuclearBallSym(1.0, 4)
rng = np.random.default_rng(1)
a = rng.standard_normal((4, 4))
sym = 0.5 * (a + a.T)
y = ball.lmo(sym.ravel()).reshape(4, 4)
lams = np.linalg.eigvalsh(sym)
print("eigenvalues of the direction:", np.round(lams, 6))
print("oracle value <C, Y>:", round(float(np.sum(sym * y)), 6),
      " (= -radius * max |eigenvalue|)")
print("output is rank one, Frobenius norm = radius:",
      np.linalg.matrix_rank(y), np.round(np.linalg.norm(y), 12))
print()

print("=== Budgeted calls carry a certificate ===")
big = NuclearBallSym(1.0, 12)
a = rng.standard_normal((12, 12))
sym12 = 0.5 * (a + a.T)
best = -float(np.max(np.abs(np.linalg.eigvalsh(sym12))))
for eps in (1e-1, 1e-4, 1e-8):
    y, cert = big.lmo_certified(sym12.ravel(), eps)
    val = float(np.sum(sym12 * y.reshape(12, 12)))
    print(f"budget {eps:8.0e}: value {val:+.8f} (optimum {best:+.8f}), "
          f"certified gap {cert:.2e}")
print("(the certificate 2 r ||C v - rho v|| bounds the true gap;"
      " looser budgets stop the eigensolver earlier)")
