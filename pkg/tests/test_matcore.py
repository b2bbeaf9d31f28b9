"""Matrix primitive tests: eigendecomposition, |A|, PSD sqrt, SLD solvers."""

import numpy as np
import pytest

from qestbounds.matcore import (
    PreconditionError,
    ValidationError,
    check_hermitian,
    d_map,
    d_map_support,
    hermitian_eig,
    matrix_abs,
    psd_sqrt,
    sld_solve,
    sld_solve_support,
    state_inner,
    trace_norm,
)


def random_hermitian(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (A + A.conj().T)


def random_density(rng, n, floor=0.05):
    H = random_hermitian(rng, n)
    w, U = np.linalg.eigh(H)
    p = np.abs(rng.normal(size=n)) + floor
    p /= p.sum()
    return (U * p) @ U.conj().T


def test_check_hermitian_accepts_and_rejects():
    rng = np.random.default_rng(0)
    H = random_hermitian(rng, 4)
    check_hermitian(H)
    with pytest.raises(ValidationError):
        check_hermitian(np.triu(np.ones((4, 4))))
    with pytest.raises(ValidationError):
        check_hermitian(np.ones((2, 3)))
    with pytest.raises(ValidationError):
        check_hermitian(np.array([[np.nan, 0], [0, 1.0]]))


def test_hermitian_eig_reconstructs():
    rng = np.random.default_rng(1)
    for n in (2, 3, 5):
        H = random_hermitian(rng, n)
        w, U = hermitian_eig(H)
        assert np.all(np.diff(w) >= -1e-12)  # ascending
        assert np.linalg.norm((U * w) @ U.conj().T - H) < 1e-10 * max(1.0, np.linalg.norm(H))
        assert np.linalg.norm(U @ U.conj().T - np.eye(n)) < 1e-10


def test_matrix_abs_against_svd():
    rng = np.random.default_rng(2)
    for n in (2, 4):
        A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        absA, tn = matrix_abs(A)
        s = np.linalg.svd(A, compute_uv=False)
        assert abs(tn - s.sum()) < 1e-10 * s.sum()
        # |A|^2 = A^dag A
        assert np.linalg.norm(absA @ absA - A.conj().T @ A) < 1e-8
        assert np.linalg.eigvalsh(absA).min() > -1e-10
    assert abs(trace_norm(np.diag([3.0, -4.0])) - 7.0) < 1e-12


def test_psd_sqrt():
    rng = np.random.default_rng(3)
    B = rng.normal(size=(4, 4))
    W = B @ B.T
    R = psd_sqrt(W)
    assert np.linalg.norm(R @ R - W) < 1e-9 * max(1.0, np.linalg.norm(W))
    # tiny negative eigenvalues are clamped, genuinely indefinite input is not
    psd_sqrt(W - 0.5e-10 * np.eye(4))
    with pytest.raises(ValidationError):
        psd_sqrt(np.diag([1.0, -1e-3]))


def test_sld_solve_lyapunov_residual():
    rng = np.random.default_rng(4)
    for n in (2, 3, 4):
        rho = random_density(rng, n)
        G = random_hermitian(rng, n)
        G = G - np.trace(G) * np.eye(n) / n
        L = sld_solve(rho, G)
        assert np.linalg.norm(L - L.conj().T) < 1e-10
        assert np.linalg.norm(0.5 * (rho @ L + L @ rho) - G) < 1e-9


def test_sld_solve_diagonal_formula():
    # in the eigenbasis L_jk = 2 G_jk / (p_j + p_k)
    rho = np.diag([0.75, 0.25]).astype(complex)
    G = np.array([[0.1, 0.2 - 0.3j], [0.2 + 0.3j, -0.1]])
    L = sld_solve(rho, G)
    expect = np.array(
        [[2 * 0.1 / 1.5, 2 * (0.2 - 0.3j) / 1.0], [2 * (0.2 + 0.3j) / 1.0, 2 * -0.1 / 0.5]]
    )
    assert np.linalg.norm(L - expect) < 1e-12


def test_sld_solve_rejects_singular_state():
    rho = np.diag([1.0, 0.0]).astype(complex)
    with pytest.raises(ValidationError):
        sld_solve(rho, np.eye(2) - 2 * np.diag([0.0, 1.0]))


def test_sld_solve_support_pure_state():
    # pure qubit along z; a derivative moving the Bloch vector sideways is fine
    rho = np.diag([1.0, 0.0]).astype(complex)
    G = 0.5 * np.array([[0, 1], [1, 0]], dtype=complex)
    L = sld_solve_support(rho, G)
    assert np.linalg.norm(0.5 * (rho @ L + L @ rho) - G) < 1e-9
    # weight entirely outside the support cannot be matched
    bad = np.diag([0.0, 1.0]).astype(complex) - np.diag([1.0, 0.0]) * 0.0
    bad = bad - np.trace(bad) * np.eye(2) / 2
    with pytest.raises(ValidationError):
        sld_solve_support(rho, bad)


def test_d_map_solves_commutator_equation():
    rng = np.random.default_rng(5)
    rho = random_density(rng, 3)
    X = random_hermitian(rng, 3)
    Y = d_map(rho, X)
    target = 1j * (X @ rho - rho @ X)
    assert np.linalg.norm(0.5 * (rho @ Y + Y @ rho) - target) < 1e-9
    assert np.linalg.norm(Y - Y.conj().T) < 1e-10


def test_d_map_support_rank_deficient():
    rho = np.diag([0.6, 0.4, 0.0]).astype(complex)
    rng = np.random.default_rng(6)
    X = random_hermitian(rng, 3)
    Y = d_map_support(rho, X)
    target = 1j * (X @ rho - rho @ X)
    assert np.linalg.norm(0.5 * (rho @ Y + Y @ rho) - target) < 1e-9


def test_state_inner_is_symmetric_bilinear():
    rng = np.random.default_rng(7)
    rho = random_density(rng, 3)
    X, Y = random_hermitian(rng, 3), random_hermitian(rng, 3)
    assert abs(state_inner(rho, X, Y) - state_inner(rho, Y, X)) < 1e-12
    assert abs(state_inner(rho, 2.0 * X, Y) - 2.0 * state_inner(rho, X, Y)) < 1e-10
    # against the explicit trace
    direct = 0.5 * np.real(np.trace(rho @ (X @ Y + Y @ X)))
    assert abs(state_inner(rho, X, Y) - direct) < 1e-12


def test_error_types_are_distinct():
    assert issubclass(ValidationError, ValueError)
    assert issubclass(PreconditionError, RuntimeError)
