"""Fisher-matrix tests with hand-derived oracle values.

The qudit numbers below (J, D, and the inverse RLD matrix) were worked out
by hand for the diagonal spectrum (3/4, 1/4) in the generalized Gell-Mann
parametrization; the amplitude-damping and two-observable forms come from the
closed-form expressions those families satisfy.
"""

import math

import numpy as np
import pytest

from qestbounds import fisher, models
from qestbounds.matcore import ValidationError
from qestbounds.models import ParametricModel, builtin, multiphase_physical_point


def sine_bernoulli():
    """Curved classical family p(t) = 1/2 + 0.3 sin t (nonzero f' f'')."""

    def state(t):
        p = 0.5 + 0.3 * math.sin(t[0])
        return np.diag([p, 1 - p]).astype(complex)

    def derivs(t):
        fp = 0.3 * math.cos(t[0])
        return [np.diag([fp, -fp]).astype(complex)]

    return ParametricModel(
        name="sine_bernoulli", dim=2, nparams=1, param_names=("t",), state_fn=state, deriv_fn=derivs
    )


QUDIT2 = builtin("qudit_full", {"d": 2, "p": (0.75, 0.25)})
T2 = np.zeros(3)


def test_qudit_sld_matrix():
    bundle = fisher.sld_qfi(QUDIT2, T2)
    assert np.linalg.norm(bundle.J - np.diag([4.0, 4.0, 16.0 / 3.0])) < 1e-10
    assert not bundle.singular
    # Gram consistency: J_ij = Re Tr[rho (L_i L_j + L_j L_i)/2]
    rho = models.state_at(QUDIT2, T2)
    for i in range(3):
        for j in range(3):
            direct = 0.5 * np.real(
                np.trace(rho @ (bundle.sld_ops[i] @ bundle.sld_ops[j] + bundle.sld_ops[j] @ bundle.sld_ops[i]))
            )
            assert abs(bundle.J[i, j] - direct) < 1e-10


def test_bernoulli_fisher_info():
    m = builtin("classical_diagonal", {"d": 2})
    J = fisher.sld_qfi(m, [0.5]).J
    assert abs(J[0, 0] - 4.0) < 1e-10


def test_qudit_d_matrix():
    D = fisher.d_matrix(QUDIT2, T2)
    want = np.zeros((3, 3))
    want[0, 1], want[1, 0] = -4.0, 4.0
    assert np.linalg.norm(D - want) < 1e-10


def test_qudit_rld_and_identity():
    Jt = fisher.rld_qfi(QUDIT2, T2)
    gamma = np.linalg.inv(Jt)
    want = np.array(
        [
            [0.25, -0.125j, 0],
            [0.125j, 0.25, 0],
            [0, 0, 3.0 / 16.0],
        ]
    )
    assert np.linalg.norm(gamma - want) < 1e-10
    # J~^{-1} = J^{-1} + (i/2) J^{-1} D J^{-1}
    J = fisher.sld_qfi(QUDIT2, T2).J
    D = fisher.d_matrix(QUDIT2, T2)
    Jinv = np.linalg.inv(J)
    assert np.linalg.norm(gamma - (Jinv + 0.5j * Jinv @ D @ Jinv)) < 1e-8
    # positivity of the RLD matrix and its real part
    assert np.linalg.eigvalsh(Jt).min() > -1e-10
    assert np.linalg.eigvalsh(Jt.real).min() > -1e-10


def test_rld_needs_full_rank():
    pure = builtin("phase", {"r": 1.0})
    with pytest.raises(ValidationError):
        fisher.rld_qfi(pure, [0.3])
    bundle = fisher.qfi_bundle(pure, [0.3])
    assert bundle.singular and bundle.rld is None
    assert abs(bundle.J[0, 0] - 1.0) < 1e-10


def test_amplitude_damping_closed_forms():
    m = builtin("amplitude_damping")
    for th, ph, eta in ((0.9, 0.4, 0.55), (1.3, 2.0, 0.3)):
        bundle = fisher.qfi_bundle(m, [th, ph, eta])
        c, s = math.cos(th), math.sin(th)
        J = np.zeros((3, 3))
        J[0, 0] = 4 * eta
        J[1, 1] = 4 * eta * s * s
        J[0, 2] = J[2, 0] = 2 * s
        J[2, 2] = ((1 - eta) * (s * s + 4 * eta * (1 - c) ** 2) + (1 - c) ** 2 * (2 * eta - 1) ** 2) / (
            eta * (1 - eta)
        )
        assert np.linalg.norm(bundle.J - J) < 1e-7
        D = np.zeros((3, 3))
        D[0, 1] = 8 * eta * s * (eta - eta * c + c)
        D[2, 1] = 4 * s * s * (1 + eta - eta * c)
        D -= D.T
        assert np.linalg.norm(bundle.D - D) < 1e-7


def test_two_observables_inverse_info():
    s = 0.5
    m = builtin("two_observables", {"s": s})
    x, y, z = 0.3, 0.2, 0.4
    J = fisher.sld_qfi(m, [x, y, z]).J
    Jinv_closed = np.array(
        [
            [1 - x * x, s - x * y, -x * z],
            [s - x * y, 1 - y * y, -y * z],
            [-x * z, -y * z, 1 - z * z],
        ]
    )
    assert np.linalg.norm(np.linalg.inv(J) - Jinv_closed) < 1e-10


def test_reparametrization_covariance():
    rng = np.random.default_rng(11)
    base = QUDIT2
    t0 = np.array([0.02, -0.03, 0.01])
    for _ in range(3):
        A = rng.normal(size=(3, 3))
        while abs(np.linalg.det(A)) < 0.1:
            A = rng.normal(size=(3, 3))

        def state(t, A=A):
            return base.state_fn(A @ np.asarray(t, dtype=float))

        def derivs(t, A=A):
            d = base.deriv_fn(A @ np.asarray(t, dtype=float))
            return [sum(A[j, i] * d[j] for j in range(3)) for i in range(3)]

        mapped = ParametricModel(
            name="mapped", dim=2, nparams=3, param_names=("a", "b", "c"), state_fn=state, deriv_fn=derivs
        )
        s0 = np.linalg.solve(A, t0)
        J, D, Jt = (
            fisher.sld_qfi(base, t0).J,
            fisher.d_matrix(base, t0),
            fisher.rld_qfi(base, t0),
        )
        Jm, Dm, Jtm = (
            fisher.sld_qfi(mapped, s0).J,
            fisher.d_matrix(mapped, s0),
            fisher.rld_qfi(mapped, s0),
        )
        assert np.linalg.norm(Jm - A.T @ J @ A) < 1e-8 * max(1.0, np.linalg.norm(Jm))
        assert np.linalg.norm(Dm - A.T @ D @ A) < 1e-8 * max(1.0, np.linalg.norm(Dm))
        assert np.linalg.norm(Jtm - A.T @ Jt @ A) < 1e-8 * max(1.0, np.linalg.norm(Jtm))


def test_eps_rld_exact_for_linear_family():
    # the qudit family is linear in its coordinates, so the finite-increment
    # matrix coincides with the RLD matrix at any step
    Jt = fisher.rld_qfi(QUDIT2, T2)
    for eps in (1e-2, 1e-3):
        M = fisher.eps_rld(QUDIT2, T2, eps).matrix
        assert np.linalg.norm(M - Jt) < 1e-8


def test_eps_rld_linear_convergence_rate():
    m = sine_bernoulli()
    t0 = np.array([0.4])
    Jt = fisher.rld_qfi(m, t0)
    assert abs(Jt[0, 0].real - 0.3230430286554989) < 1e-12
    errs = [abs(fisher.eps_rld(m, t0, e).matrix[0, 0] - Jt[0, 0]) for e in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]
    for a, b in zip(errs, errs[1:]):
        assert 8.0 < a / b < 12.0  # one decade of eps buys one decade of error


def test_ncopy_two_copy_brute_force():
    eps = 1e-2
    M2 = fisher.ncopy_eps_rld(QUDIT2, T2, eps, 2).matrix
    rho0 = models.state_at(QUDIT2, T2)
    step = eps / math.sqrt(2)
    shifted = []
    for i in range(3):
        t = T2.copy()
        t[i] += step
        shifted.append(models.state_at(QUDIT2, t))
    R0 = np.kron(rho0, rho0)
    R0inv = np.linalg.inv(R0)
    for i in range(3):
        for j in range(3):
            Ri, Rj = np.kron(shifted[i], shifted[i]), np.kron(shifted[j], shifted[j])
            direct = (np.trace(Ri @ R0inv @ Rj) - 1.0) / eps**2
            direct = 0.5 * (direct + np.conj((np.trace(Rj @ R0inv @ Ri) - 1.0) / eps**2))
            assert abs(M2[i, j] - direct) < 1e-10


def test_ncopy_limit_rate():
    eps = 0.1
    Jt = fisher.rld_qfi(QUDIT2, T2)
    lim = fisher.ncopy_eps_rld_limit(Jt, eps)
    errs = [
        np.linalg.norm(fisher.ncopy_eps_rld(QUDIT2, T2, eps, n).matrix - lim) for n in (10, 100, 1000)
    ]
    assert errs[0] > errs[1] > errs[2]
    for a, b in zip(errs, errs[1:]):
        assert 8.0 < a / b < 12.0  # O(1/n)


def test_eps_rld_classical_dominance():
    eps = 1e-3
    Jq = fisher.eps_rld(QUDIT2, T2, eps).matrix
    rng = np.random.default_rng(3)
    for _ in range(5):
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        P1 = np.outer(v, v.conj())
        Jc = fisher.eps_rld_classical(QUDIT2, T2, eps, [P1, np.eye(2) - P1]).matrix
        assert np.linalg.eigvalsh(Jq - Jc).min() > -1e-8


def test_fidelity_values():
    r1 = np.diag([0.75, 0.25]).astype(complex)
    r2 = np.diag([0.5, 0.5]).astype(complex)
    want = math.sqrt(0.75 * 0.5) + math.sqrt(0.25 * 0.5)
    assert abs(fisher.fidelity(r1, r2) - want) < 1e-12
    assert abs(fisher.fidelity(r2, r1) - want) < 1e-12
    assert abs(fisher.fidelity(r1, r1) - 1.0) < 1e-12
    # pure states: |<psi|phi>|
    ph = builtin("phase", {"r": 1.0})
    F = fisher.fidelity(models.state_at(ph, [0.0]), models.state_at(ph, [0.4]))
    assert abs(F - abs(math.cos(0.2))) < 1e-10


def test_fidelity_sld_recovers_fisher_info():
    m = builtin("classical_diagonal", {"d": 2})
    res = fisher.fidelity_sld(m, [0.5])
    assert res.converged
    assert abs(res.value - 4.0) < 1e-6
    ph = builtin("phase", {"r": 0.8})
    res2 = fisher.fidelity_sld(ph, [0.3])
    assert res2.converged
    assert abs(res2.value - 0.64) < 1e-6


def test_qlan_correspondence_qubit():
    corr = fisher.qlan_correspondence(QUDIT2, T2)
    assert np.allclose(corr.spectrum, [0.75, 0.25])
    assert abs(corr.ratios[(0, 1)] - 1.0 / 3.0) < 1e-12
    assert abs(corr.occupations[(0, 1)] - 0.5) < 1e-12
    chk = corr.coth_check[(0, 1)]
    assert abs(chk["exp_minus_beta_prime"] - 0.5) < 1e-12
    assert abs(chk["kappa_gamma"] - 1.0) < 1e-9
    assert chk["mismatch"] < 1e-9
    assert np.linalg.eigvalsh(corr.gamma.real).min() > -1e-10


def test_qlan_correspondence_qutrit_blocks():
    m = builtin("qudit_full", {"d": 3, "p": (0.5, 0.3, 0.2)})
    corr = fisher.qlan_correspondence(m, np.zeros(8))
    for (j, k), chk in corr.coth_check.items():
        N = corr.occupations[(j, k)]
        assert 0 < corr.ratios[(j, k)] < 1
        assert chk["kappa_gamma"] is not None
        assert abs(chk["kappa_gamma"] - (N + 0.5)) < 1e-9


def test_qlan_degenerate_spectrum_rejected():
    # maximally mixed qubit: the two eigenvalues coincide
    m = builtin("classical_diagonal", {"d": 2})
    with pytest.raises(ValidationError):
        fisher.qlan_correspondence(m, [0.5])
