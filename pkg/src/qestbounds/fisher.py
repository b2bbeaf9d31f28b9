"""Quantum Fisher information matrices and related local quantities.

Everything here works at a single parameter point: SLD Fisher matrix,
the antisymmetric commutator matrix D, the right-logarithmic-derivative
Fisher matrix, epsilon-difference relatives of the RLD, fidelity, and
the mode-ratio bookkeeping used to map a local model onto Gaussian data.
"""

import numpy as np

from .matcore import (
    EIG_FLOOR,
    ValidationError,
    hermitian_eig,
    sld_solve,
    sld_solve_support,
    state_inner,
    trace_norm,
    psd_sqrt,
)
from .models import state_at, derivatives_at


class QfiBundle:
    """Local information package: point, SLD matrix J, D-matrix, RLD matrix.

    `rld` is None when the state is singular (the RLD needs full rank).
    """

    def __init__(self, t0, J, D=None, rld=None, sld_ops=None, singular=False):
        self.t0 = np.asarray(t0, dtype=float)
        self.J = J
        self.D = D
        self.rld = rld
        self.sld_ops = sld_ops
        self.singular = bool(singular)


def _slds_at(model, t0):
    """State, derivative list, SLD list and a singular flag at t0."""
    rho = state_at(model, t0)
    derivs = derivatives_at(model, t0)
    p = np.linalg.eigvalsh(rho)
    singular = p.min() <= EIG_FLOOR
    solver = sld_solve_support if singular else sld_solve
    slds = [solver(rho, G) for G in derivs]
    return rho, derivs, slds, singular


def sld_qfi(model, t0):
    """SLD quantum Fisher matrix as a QfiBundle (J and SLD operators filled).

    J_ij = Re Tr[rho (L_i L_j + L_j L_i)/2].
    """
    rho, _, slds, singular = _slds_at(model, t0)
    k = len(slds)
    J = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            J[i, j] = J[j, i] = state_inner(rho, slds[i], slds[j])
    return QfiBundle(t0, J, sld_ops=slds, singular=singular)


def d_matrix(model, t0):
    """Antisymmetric matrix D_jk = i Tr[rho [L_j, L_k]] of SLD commutators."""
    rho, _, slds, _ = _slds_at(model, t0)
    k = len(slds)
    D = np.zeros((k, k))
    for j in range(k):
        for kk in range(j + 1, k):
            val = 1j * np.trace(rho @ (slds[j] @ slds[kk] - slds[kk] @ slds[j]))
            if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
                raise ValidationError(
                    "D-matrix entry has a non-real residue: %r" % val
                )
            D[j, kk] = val.real
            D[kk, j] = -val.real
    return D


def rld_qfi(model, t0):
    """RLD quantum Fisher matrix J~_ij = Tr[drho_i rho^{-1} drho_j].

    Hermitian with real part >= SLD information.  Undefined for singular
    states: raises ValidationError there (callers that want a soft failure
    should catch it and carry None).
    """
    rho = state_at(model, t0)
    p = np.linalg.eigvalsh(rho)
    if p.min() <= EIG_FLOOR:
        raise ValidationError(
            "RLD Fisher matrix needs a full-rank state (min eigenvalue %.3e)"
            % p.min()
        )
    derivs = derivatives_at(model, t0)
    k = len(derivs)
    # S_j = rho^{-1} drho_j, then J~_ij = Tr[rho^{-1} drho_j drho_i] = Tr[S_j drho_i]
    sols = [np.linalg.solve(rho, G) for G in derivs]
    Jt = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            Jt[i, j] = np.trace(sols[j] @ derivs[i])
    # symmetrize away the solve noise
    Jt = 0.5 * (Jt + Jt.conj().T)
    return Jt


def qfi_bundle(model, t0):
    """All local matrices at once; rld is None when the state is singular."""
    bundle = sld_qfi(model, t0)
    bundle.D = d_matrix(model, t0)
    if not bundle.singular:
        bundle.rld = rld_qfi(model, t0)
    return bundle


class EpsRldMatrix:
    """Finite-step RLD relative: the matrix and the step it was taken at."""

    def __init__(self, eps, matrix):
        self.eps = float(eps)
        self.matrix = matrix


def eps_rld(model, t0, eps):
    """Epsilon-difference RLD matrix.

    Entry (i, j) = (Tr[rho_{t0+eps e_i} rho_{t0}^{-1} rho_{t0+eps e_j}] - 1) / eps^2.
    Converges to rld_qfi at rate O(eps) as eps -> 0.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive, got %r" % eps)
    t0 = np.asarray(t0, dtype=float)
    rho0 = state_at(model, t0)
    p = np.linalg.eigvalsh(rho0)
    if p.min() <= EIG_FLOOR:
        raise ValidationError("eps_rld needs a full-rank base state")
    k = model.nparams
    shifted = []
    for i in range(k):
        t = t0.copy()
        t[i] += eps
        shifted.append(state_at(model, t))
    # rho0^{-1} rho_j once per column
    sols = [np.linalg.solve(rho0, s) for s in shifted]
    M = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            M[i, j] = (np.trace(shifted[i] @ sols[j]) - 1.0) / eps**2
    M = 0.5 * (M + M.conj().T)
    return EpsRldMatrix(eps, M)


def ncopy_eps_rld(model, t0, eps, n):
    """Epsilon-difference RLD on n iid copies with step eps/sqrt(n).

    Entry (i, j) = ((Tr[rho_{+i} rho0^{-1} rho_{+j}])^n - 1) / eps^2 where the
    shifts are eps/sqrt(n) along the coordinate axes.  As n grows this tends to
    (exp(eps^2 J~_ij) - 1)/eps^2 at rate O(1/n).
    """
    if n < 1:
        raise ValidationError("n must be a positive integer, got %r" % n)
    t0 = np.asarray(t0, dtype=float)
    step = eps / np.sqrt(n)
    rho0 = state_at(model, t0)
    p = np.linalg.eigvalsh(rho0)
    if p.min() <= EIG_FLOOR:
        raise ValidationError("ncopy_eps_rld needs a full-rank base state")
    k = model.nparams
    shifted = []
    for i in range(k):
        t = t0.copy()
        t[i] += step
        shifted.append(state_at(model, t))
    sols = [np.linalg.solve(rho0, s) for s in shifted]
    M = np.empty((k, k), dtype=complex)
    for i in range(k):
        for j in range(k):
            z = np.trace(shifted[i] @ sols[j])
            # z^n via the principal log; |z| is 1 + O(eps^2/n), angle tiny
            M[i, j] = (np.exp(n * np.log(z)) - 1.0) / eps**2
    M = 0.5 * (M + M.conj().T)
    return EpsRldMatrix(eps, M)


def ncopy_eps_rld_limit(rld_matrix, eps):
    """Large-n limit of the n-copy epsilon-difference matrix.

    Entrywise (exp(eps^2 J~_ij) - 1) / eps^2 from the exact RLD matrix.
    """
    Jt = np.asarray(rld_matrix, dtype=complex)
    return (np.exp(eps**2 * Jt) - 1.0) / eps**2


def eps_rld_classical(model, t0, eps, effects):
    """Classical epsilon-difference matrix for a POVM measurement.

    effects: list of PSD operators summing to the identity.  Entry (i, j) =
    (sum_m p_i(m) p_j(m) / p_0(m) - 1) / eps^2 with p_i the outcome
    distribution at t0 + eps e_i.  Any POVM's matrix is dominated by the
    quantum eps_rld matrix in the PSD order.
    """
    t0 = np.asarray(t0, dtype=float)
    rho0 = state_at(model, t0)
    p0 = np.array([np.trace(rho0 @ E).real for E in effects])
    if p0.min() <= 1e-14:
        raise ValidationError("POVM outcome with zero probability at the base point")
    k = model.nparams
    probs = []
    for i in range(k):
        t = t0.copy()
        t[i] += eps
        rho = state_at(model, t)
        probs.append(np.array([np.trace(rho @ E).real for E in effects]))
    M = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            M[i, j] = (np.sum(probs[i] * probs[j] / p0) - 1.0) / eps**2
    return EpsRldMatrix(eps, M)


def fidelity(rho, sigma):
    """Uhlmann fidelity Tr|sqrt(rho) sqrt(sigma)|."""
    a = psd_sqrt(rho)
    b = psd_sqrt(sigma)
    return trace_norm(a @ b)


class FidelitySldResult:
    def __init__(self, value, converged, estimates):
        self.value = float(value)
        self.converged = bool(converged)
        self.estimates = estimates

    def __float__(self):
        return self.value


def fidelity_sld(model, t0, direction=None):
    """One-parameter SLD information from fidelity decay.

    Uses J(eps) = 8 (1 - F(rho_t0, rho_{t0+eps v})) / eps^2 at steps
    1e-2, 5e-3, 2.5e-3 and Richardson-extrapolates in eps^2 (two stages).
    Returns value, a convergence flag, and the raw ladder.  For a
    multiparameter model, `direction` picks the line through t0 (defaults
    to the first coordinate axis).
    """
    t0 = np.asarray(t0, dtype=float)
    if direction is None:
        v = np.zeros(model.nparams)
        v[0] = 1.0
    else:
        v = np.asarray(direction, dtype=float)
    rho0 = state_at(model, t0)
    steps = (1e-2, 5e-3, 2.5e-3)
    raw = []
    for eps in steps:
        rho1 = state_at(model, t0 + eps * v)
        F = fidelity(rho0, rho1)
        raw.append(8.0 * (1.0 - F) / eps**2)
    # Neville in eps^2; each halving multiplies eps^2 by 1/4
    r1 = [(4.0 * raw[i + 1] - raw[i]) / 3.0 for i in range(2)]
    r2 = (16.0 * r1[1] - r1[0]) / 15.0
    scale = max(1.0, abs(r2))
    converged = abs(r1[1] - r1[0]) <= 1e-3 * scale
    return FidelitySldResult(r2, converged, {"raw": raw, "stage1": r1, "stage2": r2})


class QlanCorrespondence:
    """Mode ratios, occupation numbers and the Gaussian correlation matrix."""

    def __init__(self, spectrum, ratios, occupations, gamma, coth_check):
        self.spectrum = spectrum
        self.ratios = ratios
        self.occupations = occupations
        self.gamma = gamma
        self.coth_check = coth_check


def qlan_correspondence(model, t0):
    """Mode ratios and thermal occupation numbers for the local Gaussian picture.

    For a full-rank state with eigenvalues mu_1 > mu_2 > ... the pair (j, k),
    j < k, gets ratio r = mu_k / mu_j < 1 and occupation N = r / (1 - r).

    Per pair, coth_check reports beta = -ln r, the predicted block diagonal
    exp(-beta') = (1/4) coth(beta/2) of the inverse RLD matrix in rescaled
    (pair-normalized) coordinates, and - when the model exposes the standard
    full-tomography coordinate layout (diagonal state, descending spectrum,
    pair coordinates first) - the measured scale-free block ratio
    kappa_gamma = Gamma_diag / (2 |Im Gamma_offdiag|), which must equal
    N + 1/2 = (1/2) coth(beta/2).  The mismatch |kappa_gamma - (N + 1/2)| is
    the reported consistency figure; it is None when the layout is not
    recognized.
    """
    rho = state_at(model, t0)
    p, _ = hermitian_eig(rho)
    mu = p[::-1]  # descending
    if mu.min() <= EIG_FLOOR:
        raise ValidationError("mode ratios need a full-rank state")
    gaps = np.abs(np.subtract.outer(mu, mu))
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() <= 1e-8:
        raise ValidationError(
            "degenerate spectrum (gap %.3e): mode ratios undefined" % gaps.min()
        )
    d = len(mu)
    try:
        gamma = np.linalg.inv(rld_qfi(model, t0))
    except ValidationError:
        gamma = None

    # pair blocks of gamma are addressable only for the standard layout:
    # diagonal state with descending diagonal, and d(d-1)/2 leading coordinate
    # pairs enumerated (0,1), (0,2), ..., as in the full-tomography family
    diag = np.real(np.diag(rho))
    layout_ok = (
        gamma is not None
        and model.nparams == d * d - 1
        and np.linalg.norm(rho - np.diag(diag)) <= 1e-10
        and np.all(np.diff(diag) < 0)
    )

    ratios = {}
    occupations = {}
    coth_check = {}
    pair_index = 0
    for j in range(d):
        for k in range(j + 1, d):
            r = mu[k] / mu[j]
            ratios[(j, k)] = r
            occ = r / (1.0 - r)
            occupations[(j, k)] = occ
            beta = -np.log(r)
            ebp = 0.25 / np.tanh(beta / 2.0)
            entry = {
                "beta": beta,
                "exp_minus_beta_prime": ebp,
                "kappa_gamma": None,
                "mismatch": None,
            }
            coth_check[(j, k)] = entry
            pair_index += 1
            if not layout_ok:
                continue
            # this pair occupies coordinates (2q, 2q+1) in enumeration order
            q = 2 * (pair_index - 1)
            gd = 0.5 * (gamma[q, q].real + gamma[q + 1, q + 1].real)
            goff = abs(gamma[q, q + 1].imag)
            if goff <= EIG_FLOOR:
                continue
            kg = gd / (2.0 * goff)
            entry["kappa_gamma"] = kg
            entry["mismatch"] = abs(kg - (occ + 0.5))
    return QlanCorrespondence(mu, ratios, occupations, gamma, coth_check)
