"""Dense matrix primitives shared by every other module.

Hermitian eigendecomposition, matrix absolute value / trace norm, PSD square
root, and the Lyapunov-type solvers that produce symmetric logarithmic
derivatives.  Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import numpy as np

HERM_TOL = 1e-12  # relative conjugate-symmetry tolerance
EIG_FLOOR = 1e-10  # eigenvalue floor separating "invertible" from "singular"


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


class PreconditionError(RuntimeError):
    """Raised when a mathematical applicability condition fails."""


def _as_matrix(a):
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValidationError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag if np.iscomplexobj(a) else a.real)):
        raise ValidationError("non-finite matrix entries")
    return a


def check_hermitian(H, tol=HERM_TOL):
    """Validate conjugate symmetry of H (relative tolerance) and return it."""
    H = _as_matrix(H)
    if H.shape[0] != H.shape[1]:
        raise ValidationError(f"expected square matrix, got shape {H.shape}")
    scale = max(1.0, float(np.linalg.norm(H)))
    if np.linalg.norm(H - H.conj().T) > tol * scale * H.shape[0]:
        raise ValidationError("matrix is not Hermitian within tolerance")
    return H


def hermitian_eig(H, tol=HERM_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, unitary of eigenvectors as columns).
    """
    H = check_hermitian(H, tol)
    w, U = np.linalg.eigh(0.5 * (H + H.conj().T))
    return w, U


def matrix_abs(A):
    """Matrix absolute value |A| = sqrt(A^dag A) and the trace norm of A.

    Returns (|A|, trace_norm).  Works for any square real or complex matrix.
    """
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValidationError("matrix_abs expects a square matrix")
    u, s, vh = np.linalg.svd(A)
    absA = vh.conj().T @ (s[:, None] * vh)
    return absA, float(np.sum(s))


def trace_norm(A):
    return matrix_abs(A)[1]


def psd_sqrt(W):
    """Principal square root of a positive semidefinite Hermitian matrix.

    Eigenvalues in [-1e-10, 0) are clamped to zero; smaller ones are an error.
    """
    w, U = hermitian_eig(W)
    if w.min() < -EIG_FLOOR:
        raise ValidationError(f"matrix is not PSD (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (U * np.sqrt(w)) @ U.conj().T


def _eig_density(rho):
    p, U = hermitian_eig(rho)
    return p, U


def sld_solve(rho, G):
    """Solve (rho L + L rho)/2 = G for Hermitian L, rho strictly positive.

    In rho's eigenbasis, L_jk = 2 G_jk / (p_j + p_k).
    """
    p, U = _eig_density(rho)
    if p.min() <= EIG_FLOOR:
        raise ValidationError("degenerate-to-zero eigenvalue of the state; SLD solver needs an invertible state")
    G = check_hermitian(G, tol=1e-9)
    Gt = U.conj().T @ G @ U
    L = U @ (2.0 * Gt / np.add.outer(p, p)) @ U.conj().T
    return 0.5 * (L + L.conj().T)


def sld_solve_support(rho, G, ker_tol=1e-9):
    """Support-restricted SLD solve, valid for rank-deficient states.

    Eigenvalues of rho at or below the floor are treated as an exact kernel;
    matrix elements of L between two kernel vectors are set to zero.  The
    equation is solvable only when G has no kernel-kernel block, which is
    checked and raised otherwise.
    """
    p, U = _eig_density(rho)
    G = check_hermitian(G, tol=1e-9)
    Gt = U.conj().T @ G @ U
    ker = p <= EIG_FLOOR
    if np.any(ker):
        blk = Gt[np.ix_(ker, ker)]
        if np.linalg.norm(blk) > ker_tol * max(1.0, np.linalg.norm(G)):
            raise ValidationError("derivative has weight outside the state's support; SLD does not exist")
    den = np.add.outer(p, p)
    safe = den > EIG_FLOOR
    Lt = np.zeros_like(Gt)
    Lt[safe] = 2.0 * Gt[safe] / den[safe]
    L = U @ Lt @ U.conj().T
    return 0.5 * (L + L.conj().T)


def d_map(rho, X):
    """The commutant map: solve (rho Y + Y rho)/2 = i[X, rho] for Hermitian Y."""
    p, U = _eig_density(rho)
    if p.min() <= EIG_FLOOR:
        raise ValidationError("degenerate-to-zero eigenvalue of the state")
    return _d_map_core(p, U, X)


def d_map_support(rho, X):
    """d_map for possibly rank-deficient rho.

    Always solvable: i[X, rho] never couples two kernel vectors.
    """
    p, U = _eig_density(rho)
    return _d_map_core(p, U, X)


def _d_map_core(p, U, X):
    X = check_hermitian(X, tol=1e-9)
    Xt = U.conj().T @ X @ U
    den = np.add.outer(p, p)
    num = 2.0j * Xt * np.subtract.outer(p, p).T  # (p_k - p_j) for entry (j, k)
    safe = den > EIG_FLOOR
    Yt = np.zeros_like(Xt, dtype=complex)
    Yt[safe] = num[safe] / den[safe]
    Y = U @ Yt @ U.conj().T
    return 0.5 * (Y + Y.conj().T)


def state_inner(rho, X, Y):
    """Re Tr[rho (XY + YX)/2] — the symmetric inner product attached to rho."""
    return float(np.real(np.trace(rho @ (X @ Y + Y @ X)))) * 0.5
