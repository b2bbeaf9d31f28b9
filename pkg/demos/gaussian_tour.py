#!/usr/bin/env python3
"""Tour of the Gaussian-model toolkit.

Large-n estimation problems reduce to Gaussian shift models described by a
complex correlation matrix Gamma.  This script walks through the machinery on
the full qubit family with spectrum (3/4, 1/4):

  1. the qubit's correlation matrix and its canonical (classical + modes) form,
  2. Williamson normal form of a random covariance,
  3. optimal measurement covariances for a thermal mode under several weights,
  4. tail probabilities: closed form vs Monte Carlo.
"""

import numpy as np

from qestbounds import fisher, gaussian
from qestbounds.models import builtin

rng = np.random.default_rng(4)

# 1. canonical reduction -----------------------------------------------------
q2 = builtin("qudit_full", {"d": 2, "p": (0.75, 0.25)})
corr = fisher.qlan_correspondence(q2, np.zeros(3))
print("correlation matrix Gamma (qubit, p = 3/4):")
print(np.round(corr.gamma, 4))
cf = gaussian.canonical_form(corr.gamma)
print(f"\ncanonical form: {cf.dC} classical direction(s), {cf.dQ} mode(s)")
print(f"classical variances: {np.diag(cf.classical)}")
print(f"mode occupations N:  {cf.N}")  # r/(1-r) = 0.5 for r = 1/3

# 2. Williamson normal form --------------------------------------------------
A = rng.normal(size=(4, 4))
M = A @ A.T + 0.3 * np.eye(4)
dec = gaussian.williamson(M)
print(f"\nsymplectic eigenvalues of a random 4x4 SPD: {np.round(dec.nu, 4)}")
resid = np.linalg.norm(dec.S.T @ M @ dec.S - gaussian.paired_diag(dec.nu))
print(f"S^T M S - diag residual: {resid:.2e}")

# 3. measurement covariance --------------------------------------------------
# A thermal mode at occupation N has Gamma = (N + 1/2) I + (i/2) Omega.  The
# best covariant measurement adds half a quantum per quadrature under W = I;
# skewed weights trade the quadratures against each other.
N = 0.8
Z = gaussian.thermal_gamma(N)
print(f"\nthermal mode, N = {N}")
for w in (
    np.eye(2),
    np.diag([1.0, 4.0]),
    np.diag([4.0, 1.0]),
):
    V = gaussian.measurement_covariance(Z, w)
    wdiag = ",".join(f"{v:g}" for v in np.diag(w))
    print(f"  weight diag({wdiag}) -> covariance diag {np.diag(V).real}")

# 4. tail probabilities ------------------------------------------------------
# P[|x| >= 2] for a unit normal, three ways.
exact = gaussian.gaussian_tail_bound(np.array([[1.0]]), None, np.eye(1), 4.0)
mc = gaussian.gaussian_tail_bound(
    np.eye(2), None, np.diag([1.0, 0.0]), 4.0, samples=200_000, seed=11
)
print(f"\ntail P[x^2 >= 4]: closed form {exact.value:.6f}")
print(f"                  monte-carlo {mc.value:.6f} +- {mc.stderr:.6f}")
