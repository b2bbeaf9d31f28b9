"""Classical-quantum Gaussian shift model toolkit.

Williamson normal forms, reduction of a correlation matrix to canonical
classical + thermal-mode data, D-invariance checks for Gaussian submodels,
optimal covariant measurement covariances, and tail-probability estimates
for the limiting distributions that show up in local asymptotics.

Conventions: quadratures are interleaved (q1, p1, q2, p2, ...) and the
symplectic form is Omega = direct sum of [[0, 1], [-1, 0]].
"""

import json
import math

import numpy as np
from scipy.linalg import schur

from .matcore import (
    PreconditionError,
    ValidationError,
    matrix_abs,
    psd_sqrt,
)

MC_SEED = 20240811
MC_BLOCK = 100_000


def omega(m):
    """Symplectic form for m modes, interleaved quadratures."""
    J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * m, 2 * m))
    for j in range(m):
        out[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = J2
    return out


def paired_diag(values):
    """E(v): diagonal matrix with each value repeated on a quadrature pair."""
    return np.diag(np.repeat(np.asarray(values, dtype=float), 2))


def thermal_gamma(N):
    """Canonical single-mode correlation (N + 1/2) I_2 + (i/2) Omega_1."""
    return (float(N) + 0.5) * np.eye(2) + 0.5j * omega(1)


class SymplecticDecomposition:
    """S symplectic with S^T M S = diag(nu_1, nu_1, ..., nu_m, nu_m)."""

    def __init__(self, S, nu):
        self.S = S
        self.nu = nu


def _antisym_schur_blocks(A):
    """Orthogonal Z and positive block values of an antisymmetric matrix.

    Z^T A Z = direct sum of [[0, a_j], [-a_j, 0]] with a_j > 0.
    """
    n = A.shape[0]
    if n % 2:
        raise ValidationError("antisymmetric normal form needs even dimension")
    T, Z = schur(A, output="real")
    # sign-fix each 2x2 block so the upper-right entry is positive
    for j in range(0, n, 2):
        if T[j, j + 1] < 0.0:
            Z[:, [j, j + 1]] = Z[:, [j + 1, j]]
    T = Z.T @ A @ Z
    a = np.array([0.5 * (T[j, j + 1] - T[j + 1, j]) for j in range(0, n, 2)])
    off = T.copy()
    for j in range(0, n, 2):
        off[j : j + 2, j : j + 2] = 0.0
    if np.linalg.norm(off) > 1e-6 * max(1.0, np.linalg.norm(A)):
        raise ValidationError("Schur form of antisymmetric matrix is not block-diagonal")
    return Z, a


def williamson(M):
    """Symplectic normal form of a symmetric positive definite matrix.

    Returns S with S^T Omega S = Omega and S^T M S = E(nu), nu ascending.
    """
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    n = M.shape[0]
    if n % 2:
        raise ValidationError("williamson needs an even-dimensional matrix")
    w, U = np.linalg.eigh(M)
    if w.min() <= 0.0:
        raise ValidationError("williamson needs M > 0 (min eigenvalue %.3e)" % w.min())
    m = n // 2
    M_isqrt = (U * (1.0 / np.sqrt(w))) @ U.T
    A = M_isqrt @ omega(m) @ M_isqrt
    A = 0.5 * (A - A.T)
    Z, a = _antisym_schur_blocks(A)
    nu = 1.0 / a
    # sort mode pairs by nu ascending
    order = np.argsort(nu)
    nu = nu[order]
    cols = np.empty(n, dtype=int)
    for jnew, jold in enumerate(order):
        cols[2 * jnew] = 2 * jold
        cols[2 * jnew + 1] = 2 * jold + 1
    Z = Z[:, cols]
    S = M_isqrt @ Z @ paired_diag(np.sqrt(nu))
    return SymplecticDecomposition(S, nu)


class CanonicalForm:
    """Output of canonical_form: T, classical block, thermal occupations."""

    def __init__(self, T, classical, N, kappa, dC, dQ):
        self.T = T
        self.classical = classical
        self.N = N
        self.kappa = kappa
        self.dC = dC
        self.dQ = dQ


def canonical_form(Gamma):
    """Reduce a correlation matrix to classical + canonical thermal modes.

    Splits R^n into Ker(Im Gamma) (classical directions) and its complement,
    then builds a real invertible T with

        T Gamma T^T = [Gamma_C  0] + (i/2) (0 + Omega)   (direct sums)
                      [0     E(kappa)]

    with kappa_j = N_j + 1/2 >= 1/2.  Raises when Re Gamma is indefinite or
    a mode violates kappa >= 1/2 - 1e-8.
    """
    Gamma = np.asarray(Gamma)
    n = Gamma.shape[0]
    if np.linalg.norm(Gamma - Gamma.conj().T) > 1e-10 * max(1.0, np.linalg.norm(Gamma)):
        raise ValidationError("correlation matrix must be Hermitian")
    Gamma = 0.5 * (Gamma + Gamma.conj().T)
    A = Gamma.real.copy()
    B = Gamma.imag.copy()
    if np.linalg.eigvalsh(A).min() < -1e-10 * max(1.0, np.linalg.norm(A)):
        raise ValidationError("Re Gamma is indefinite")

    normB = np.linalg.norm(B, 2) if B.size else 0.0
    tol = 1e-10 * max(1.0, normB)
    if normB <= tol:
        # fully classical
        return CanonicalForm(np.eye(n), A, np.empty(0), np.empty(0), n, 0)

    _u, sv, vt = np.linalg.svd(B)
    null = sv <= tol
    dC = int(null.sum())
    dQ2 = n - dC
    if dQ2 % 2:
        raise ValidationError("Im Gamma has odd rank; kernel split is ill-conditioned")
    dQ = dQ2 // 2
    if dC == 0:
        K = np.zeros((n, 0))
        V = np.eye(n)
    else:
        K = vt[null].T
        V = vt[~null].T

    if dC:
        GC = K.T @ A @ K
        # decorrelate the quantum rows from the classical block
        try:
            corr = np.linalg.solve(GC, K.T @ A @ V).T
        except np.linalg.LinAlgError:
            raise ValidationError("classical block of Re Gamma is singular")
        Q0 = V.T - corr @ K.T
    else:
        GC = np.zeros((0, 0))
        Q0 = V.T

    B_mid = Q0 @ B @ Q0.T
    B_mid = 0.5 * (B_mid - B_mid.T)
    ZB, b = _antisym_schur_blocks(B_mid)
    if b.min() <= 0.0:
        raise ValidationError("degenerate symplectic structure on the quantum block")
    R = paired_diag(1.0 / np.sqrt(2.0 * b)) @ ZB.T
    A2 = R @ (Q0 @ A @ Q0.T) @ R.T
    A2 = 0.5 * (A2 + A2.T)
    dec = williamson(A2)
    kappa = dec.nu
    if kappa.min() < 0.5 - 1e-8:
        raise ValidationError(
            "mode with kappa = %.6f < 1/2: not a valid quantum correlation"
            % kappa.min()
        )
    N = np.clip(kappa - 0.5, 0.0, None)
    TQ = dec.S.T @ R @ Q0
    T = np.vstack([K.T, TQ])
    return CanonicalForm(T, GC, N, kappa, dC, dQ)


class GaussianModel:
    """Classical-quantum Gaussian shift model data."""

    def __init__(self, dC, dQ, Gamma, T):
        self.dC = int(dC)
        self.dQ = int(dQ)
        self.Gamma = Gamma
        self.T = T
        n = dC + 2 * dQ
        if Gamma.shape != (n, n):
            raise ValidationError("Gamma shape %r does not match dC + 2 dQ = %d" % (Gamma.shape, n))
        if np.linalg.norm(Gamma - Gamma.conj().T) > 1e-10 * max(1.0, np.linalg.norm(Gamma)):
            raise ValidationError("Gamma must be Hermitian")
        if np.linalg.eigvalsh(Gamma.real).min() < -1e-10:
            raise ValidationError("Re Gamma must be PSD")
        if dC and np.linalg.norm(Gamma.imag[: self.dC, : self.dC]) > 1e-10:
            raise ValidationError("Im Gamma must vanish on the classical block")
        if T is not None:
            T = np.asarray(T, dtype=float)
            if T.shape[0] != n:
                raise ValidationError("displacement map T has %d rows, expected %d" % (T.shape[0], n))
        self.T = T


def load_gaussian_model(path):
    """Read a Gaussian model from JSON: {dC, dQ, Gamma_re, Gamma_im, T}."""
    with open(path) as fh:
        data = json.load(fh)
    for key in ("dC", "dQ", "Gamma_re", "Gamma_im"):
        if key not in data:
            raise ValidationError("gaussian model file missing field %r" % key)
    Gamma = np.asarray(data["Gamma_re"], dtype=float) + 1j * np.asarray(
        data["Gamma_im"], dtype=float
    )
    T = np.asarray(data["T"], dtype=float) if data.get("T") is not None else None
    return GaussianModel(data["dC"], data["dQ"], Gamma, T)


def rld_of_gaussian(Gamma):
    """RLD information matrix of the Gaussian shift model: Gamma^{-1}."""
    Gamma = np.asarray(Gamma)
    w = np.linalg.eigvalsh(0.5 * (Gamma + Gamma.conj().T))
    if np.abs(w).min() <= 1e-12 * max(1.0, np.abs(w).max()):
        raise ValidationError("singular correlation matrix")
    return np.linalg.inv(Gamma)


def is_d_invariant_submodel(Gamma, T):
    """Check whether span(A^{-1} T) is invariant under B (A = Re, B = Im).

    Returns (flag, diagnostics) with the projection residual.
    """
    Gamma = np.asarray(Gamma)
    A = Gamma.real
    B = Gamma.imag
    T = np.asarray(T, dtype=float)
    sv = np.linalg.svd(T, compute_uv=False)
    if sv.min() <= 1e-10 * max(1.0, sv.max()):
        raise ValidationError("displacement map T is rank-deficient")
    M = np.linalg.solve(A, T)
    Q, _ = np.linalg.qr(M)
    resid = np.linalg.norm(B @ Q - Q @ (Q.T @ (B @ Q)))
    return bool(resid < 1e-8), {"residual": float(resid)}


def measurement_covariance(Z, W):
    """Covariance of the optimal covariant Gaussian measurement.

    V = Re Z + sqrt(W)^{-1} |sqrt(W) Im Z sqrt(W)| sqrt(W)^{-1}; the weighted
    value tr[W V] equals tr[W Re Z] + ||sqrt(W) Im Z sqrt(W)||_1.
    """
    Z = np.asarray(Z)
    W = np.asarray(W, dtype=float)
    w = np.linalg.eigvalsh(0.5 * (W + W.T))
    if w.min() <= 1e-12 * max(1.0, abs(w).max()):
        raise ValidationError(
            "measurement_covariance needs W > 0; regularize singular weights first"
        )
    sqW = psd_sqrt(W)
    sqW_inv = np.linalg.inv(sqW)
    absM, _ = matrix_abs(sqW @ Z.imag @ sqW)
    V = Z.real + sqW_inv @ absM @ sqW_inv
    return 0.5 * (V + V.T)


def simultaneous_symplectic_check(A1, A2):
    """True when Omega A2 A1 = A1 A2 Omega (joint symplectic diagonalizability)."""
    A1 = np.asarray(A1, dtype=float)
    A2 = np.asarray(A2, dtype=float)
    if A1.shape != A2.shape or A1.ndim != 2 or A1.shape[0] != A1.shape[1]:
        raise ValidationError("A1, A2 must be square matrices of equal shape")
    n = A1.shape[0]
    if n % 2:
        raise ValidationError("need even dimension 2m")
    for M in (A1, A2):
        if np.linalg.norm(M - M.T) > 1e-10 * max(1.0, np.linalg.norm(M)):
            raise ValidationError("inputs must be symmetric")
    Om = omega(n // 2)
    return bool(np.linalg.norm(Om @ A2 @ A1 - A1 @ A2 @ Om) < 1e-9)


class TailEstimate:
    """Tail probability with Monte-Carlo uncertainty."""

    def __init__(self, value, stderr, nsamples, method):
        self.value = float(value)
        self.stderr = float(stderr)
        self.nsamples = int(nsamples)
        self.method = method

    def __float__(self):
        return self.value


def _mc_quadratic_tail(Sigma, Wq, c, samples, seed):
    """P(x^T Wq x >= c) under N(0, Sigma), blockwise seeded Monte-Carlo."""
    k = Sigma.shape[0]
    S = psd_sqrt(Sigma)
    count = 0
    done = 0
    bidx = 0
    while done < samples:
        m = min(MC_BLOCK, samples - done)
        rng = np.random.default_rng((seed, bidx))
        z = rng.standard_normal((m, k))
        x = z @ S
        quad = np.einsum("ij,jk,ik->i", x, Wq, x)
        count += int((quad >= c).sum())
        done += m
        bidx += 1
    p = count / samples
    stderr = math.sqrt(max(p * (1.0 - p), 1e-300) / samples)
    return TailEstimate(p, stderr, samples, "monte-carlo")


def _block_shape_weight(W, dC, dQ):
    """Validate W = W_C (+) w_1 I_2 (+) ... (+) w_dQ I_2; return (W_C, w list)."""
    k = dC + 2 * dQ
    W = np.asarray(W, dtype=float)
    if W.shape != (k, k):
        raise ValidationError("weight shape %r does not match dC + 2 dQ = %d" % (W.shape, k))
    if np.linalg.norm(W - W.T) > 1e-10 * max(1.0, np.linalg.norm(W)):
        raise ValidationError("weight must be symmetric")
    WC = W[:dC, :dC]
    rebuilt = np.zeros_like(W)
    rebuilt[:dC, :dC] = WC
    ws = []
    for j in range(dQ):
        i0 = dC + 2 * j
        wj = 0.5 * (W[i0, i0] + W[i0 + 1, i0 + 1])
        ws.append(wj)
        rebuilt[i0, i0] = rebuilt[i0 + 1, i0 + 1] = wj
    if np.linalg.norm(W - rebuilt) > 1e-10 * max(1.0, np.linalg.norm(W)):
        raise ValidationError(
            "weight must be block diagonal: arbitrary classical block plus "
            "w_j I_2 per quantum mode"
        )
    if np.linalg.eigvalsh(W).min() < -1e-10:
        raise ValidationError("weight must be PSD")
    return WC, np.array(ws)


def gaussian_tail_bound(gamma_c, N, W, c, samples=1_000_000, seed=MC_SEED):
    """Minimal achievable tail probability of the limiting distribution.

    The optimally measured Gaussian model with classical block gamma_c and
    thermal occupations N has outcome covariance
    Sigma = gamma_c (+) (N_j + 1/2) I_2 per mode; this returns
    P(x^T W x >= c) under N(0, Sigma).  W must be block diagonal:
    arbitrary PSD on the classical block, w_j I_2 per mode.  One-dimensional
    problems use the exact normal tail; otherwise seeded Monte-Carlo.
    """
    gamma_c = (
        np.zeros((0, 0)) if gamma_c is None else np.atleast_2d(np.asarray(gamma_c, dtype=float))
    )
    N = np.asarray(N, dtype=float) if N is not None else np.empty(0)
    if N.size and N.min() < 0.0:
        raise ValidationError("occupation numbers must be >= 0")
    dC = gamma_c.shape[0]
    dQ = N.size
    k = dC + 2 * dQ
    if k == 0:
        raise ValidationError("empty model")
    _WC, _ws = _block_shape_weight(W, dC, dQ)
    W = np.asarray(W, dtype=float)
    if c <= 0.0:
        return TailEstimate(1.0, 0.0, 0, "degenerate")
    Sigma = np.zeros((k, k))
    Sigma[:dC, :dC] = gamma_c
    for j in range(dQ):
        i0 = dC + 2 * j
        Sigma[i0, i0] = Sigma[i0 + 1, i0 + 1] = N[j] + 0.5
    if k == 1:
        w = W[0, 0]
        if w <= 0.0:
            return TailEstimate(0.0, 0.0, 0, "degenerate")
        sigma = math.sqrt(Sigma[0, 0])
        a = math.sqrt(c / w) / sigma
        return TailEstimate(math.erfc(a / math.sqrt(2.0)), 0.0, 0, "closed-form")
    return _mc_quadratic_tail(Sigma, W, c, samples, seed)


def qudit_tail_bound(J, D, W, c, samples=1_000_000, seed=MC_SEED):
    """Tail probability of the optimal limiting distribution of a qudit model.

    Applies only when J^{-1/2} W J^{-1/2} commutes with J^{-1/2} D J^{-1/2}
    (raises PreconditionError otherwise).  The limiting covariance in the
    W^{1/2}-rotated frame is
    Sigma = W^{1/2} J^{-1} W^{1/2} + (1/2)|W^{1/2} J^{-1} D J^{-1} W^{1/2}|
    and the bound is P(||x|| >= sqrt(c)) under N(0, Sigma).
    """
    J = np.asarray(J, dtype=float)
    D = np.asarray(D, dtype=float)
    W = np.asarray(W, dtype=float)
    w, U = np.linalg.eigh(0.5 * (J + J.T))
    if w.min() <= 0.0:
        raise ValidationError("J must be positive definite")
    J_isqrt = (U * (1.0 / np.sqrt(w))) @ U.T
    Wh = J_isqrt @ W @ J_isqrt
    Dh = J_isqrt @ D @ J_isqrt
    comm = Wh @ Dh - Dh @ Wh
    scale = max(1.0, np.linalg.norm(Wh) * np.linalg.norm(Dh))
    if np.linalg.norm(comm) >= 1e-8 * scale:
        raise PreconditionError(
            "W and D do not commute in the J-whitened frame (residual %.3e); "
            "the tail-bound construction does not apply" % np.linalg.norm(comm)
        )
    if c <= 0.0:
        return TailEstimate(1.0, 0.0, 0, "degenerate")
    Jinv = (U * (1.0 / w)) @ U.T
    sqW = psd_sqrt(W)
    base = sqW @ Jinv @ sqW
    absM, _ = matrix_abs(sqW @ Jinv @ D @ Jinv @ sqW)
    Sigma = base + 0.5 * absM
    Sigma = 0.5 * (Sigma + Sigma.T)
    k = Sigma.shape[0]
    if k == 1:
        sigma = math.sqrt(Sigma[0, 0])
        a = math.sqrt(c) / sigma
        return TailEstimate(math.erfc(a / math.sqrt(2.0)), 0.0, 0, "closed-form")
    return _mc_quadratic_tail(Sigma, np.eye(k), c, samples, seed)
