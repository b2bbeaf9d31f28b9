"""Precision bounds for multiparameter estimation at a point.

The ladder: SLD bound, RLD bound, the Holevo-type minimized bound computed
through a finite matrix optimization over the extended model, the
nuisance-parameter variant, the optimal limiting covariance that attains the
minimized bound, the commutator gap bound, and reduction of a smooth cost
function to a weighted-MSE bound.
"""

import numpy as np
from scipy.optimize import minimize

from .matcore import (
    ValidationError,
    hermitian_eig,
    matrix_abs,
    psd_sqrt,
    trace_norm,
)
from .models import minimal_d_invariant_extension, restrict
from . import fisher

RESTART_SEED = 20240811
N_RESTARTS = 8
NM_MAXFEV = 20000
NM_XATOL = 1e-9
STABILITY_RTOL = 1e-5
_SING_TOL = 1e-12


def check_weight(W, k=None):
    """Validate a weight matrix: real symmetric, eigenvalues >= -1e-10.

    Small negative eigenvalues are clamped to zero.  Returns the cleaned
    matrix.
    """
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise ValidationError("weight matrix must be square, got shape %r" % (W.shape,))
    if k is not None and W.shape[0] != k:
        raise ValidationError(
            "weight matrix is %dx%d but %d parameters expected" % (*W.shape, k)
        )
    if np.linalg.norm(W - W.T) > 1e-10 * max(1.0, np.linalg.norm(W)):
        raise ValidationError("weight matrix must be symmetric")
    W = 0.5 * (W + W.T)
    w, U = np.linalg.eigh(W)
    if w.min() < -1e-10:
        raise ValidationError(
            "weight matrix has negative eigenvalue %.3e" % w.min()
        )
    if w.min() < 0.0:
        w = np.clip(w, 0.0, None)
        W = (U * w) @ U.T
        W = 0.5 * (W + W.T)
    return W


def _inv_spd(J, what="J"):
    J = np.asarray(J)
    Js = 0.5 * (J + J.conj().T)
    w = np.linalg.eigvalsh(Js)
    if np.abs(w).min() <= _SING_TOL * max(1.0, np.abs(w).max()):
        raise ValidationError("singular %s matrix (eigenvalue %.3e)" % (what, np.abs(w).min()))
    return np.linalg.inv(Js)


def sld_bound(J, W):
    """SLD information bound tr[W J^{-1}]."""
    W = check_weight(W)
    Jinv = _inv_spd(J)
    return float(np.trace(W @ Jinv).real)


def rld_bound(Jt, W):
    """RLD bound tr[W Re(Jt^{-1})] + ||sqrt(W) Im(Jt^{-1}) sqrt(W)||_1."""
    W = check_weight(W)
    G = _inv_spd(Jt, what="RLD")
    sqW = psd_sqrt(W)
    re_term = float(np.trace(W @ G.real))
    im_term = trace_norm(sqW @ G.imag @ sqW)
    return re_term + im_term


def holevo_objective(P, Jp, Dp, W):
    """Minimization objective in reduced k x k form.

    f(P) = tr[W P Jp^{-1} P^T] + (1/2)||sqrt(W) (P Jp^{-1} Dp Jp^{-1} P^T) sqrt(W)||_1.
    """
    Kinv = _inv_spd(Jp)
    KDK = Kinv @ Dp @ Kinv
    sqW = psd_sqrt(W)
    M1 = P @ Kinv @ P.T
    M2 = P @ KDK @ P.T
    return float(np.trace(W @ M1)) + 0.5 * trace_norm(sqW @ M2 @ sqW)


def holevo_objective_full(P, Jp, Dp, W):
    """Same objective in the k' x k' form with the weight pulled through P.

    f(P) = tr[(P^T W P) Jp^{-1}] + (1/2)||sqrt(P^T W P) Jp^{-1} Dp Jp^{-1} sqrt(P^T W P)||_1.
    Agrees with holevo_objective for every P (singular-value argument); kept
    as an independent formulation for tests.
    """
    Kinv = _inv_spd(Jp)
    KDK = Kinv @ Dp @ Kinv
    PWP = P.T @ W @ P
    S = psd_sqrt(PWP)
    return float(np.trace(PWP @ Kinv)) + 0.5 * trace_norm(S @ KDK @ S)


class MinimizeOutcome:
    def __init__(self, value, P, values, converged, stable):
        self.value = value
        self.P = P
        self.values = values
        self.converged = converged
        self.stable = stable


def _pinned_minimize(Jp, Dp, W, k, pinned):
    """Minimize the objective over k x k' P with the first `pinned` columns
    fixed to [I_k | 0].  Nelder-Mead with seeded restarts."""
    kp = Jp.shape[0]
    Kinv = _inv_spd(Jp)
    KDK = Kinv @ Dp @ Kinv
    sqW = psd_sqrt(W)
    nfree_cols = kp - pinned

    def build_p(x):
        P = np.zeros((k, kp))
        P[:, :k] = np.eye(k)
        if nfree_cols:
            P[:, pinned:] = x.reshape(k, nfree_cols)
        return P

    def f(x):
        P = build_p(x)
        M1 = P @ Kinv @ P.T
        M2 = P @ KDK @ P.T
        return float(np.trace(W @ M1)) + 0.5 * trace_norm(sqW @ M2 @ sqW)

    if nfree_cols == 0:
        v = f(np.empty(0))
        return MinimizeOutcome(v, build_p(np.empty(0)), [v], [True], True)

    nvar = k * nfree_cols
    rng = np.random.default_rng(RESTART_SEED)
    starts = [np.zeros(nvar)]
    for _ in range(N_RESTARTS - 1):
        starts.append(rng.normal(0.0, 0.5, size=nvar))

    values, xs, flags = [], [], []
    for x0 in starts:
        res = minimize(
            f,
            x0,
            method="Nelder-Mead",
            options={
                "xatol": NM_XATOL,
                "fatol": 1e-12,
                "maxfev": NM_MAXFEV,
                "maxiter": NM_MAXFEV,
            },
        )
        values.append(float(res.fun))
        xs.append(res.x)
        flags.append(bool(res.success))

    order = np.argsort(values)
    best = order[0]
    vals_sorted = [values[i] for i in order]
    stable = True
    if len(vals_sorted) > 1:
        stable = (vals_sorted[1] - vals_sorted[0]) <= STABILITY_RTOL * max(
            1.0, abs(vals_sorted[0])
        )
    return MinimizeOutcome(values[best], build_p(xs[best]), values, flags, stable)


def optimal_limiting_covariance(Jp, Dp, W, P):
    """Covariance of the attaining normal limit for minimizer P.

    Z = P Jp^{-1} P^T + (i/2) P Jp^{-1} Dp Jp^{-1} P^T;
    V = Re Z + sqrt(W)^{-1} |sqrt(W) Im Z sqrt(W)| sqrt(W)^{-1}.
    tr[W V] reproduces the objective value at P exactly.
    """
    W = check_weight(W)
    w = np.linalg.eigvalsh(W)
    if w.min() <= _SING_TOL * max(1.0, w.max()):
        raise ValidationError(
            "optimal_limiting_covariance needs W > 0; regularize singular "
            "weights with W + eps*P_perp first"
        )
    Kinv = _inv_spd(Jp)
    re_z = P @ Kinv @ P.T
    im_z = 0.5 * P @ Kinv @ Dp @ Kinv @ P.T
    sqW = psd_sqrt(W)
    sqW_inv = np.linalg.inv(sqW)
    absM, _ = matrix_abs(sqW @ im_z @ sqW)
    V = re_z + sqW_inv @ absM @ sqW_inv
    V = 0.5 * (V + V.T)
    return np.real_if_close(V).astype(float)


class HolevoResult:
    """Minimized bound value with the argmin and attaining covariance."""

    def __init__(self, value, P, V, diagnostics):
        self.value = float(value)
        self.P = P
        self.V = V
        self.diagnostics = diagnostics

    def __float__(self):
        return self.value


def _null_projector(W):
    w, U = np.linalg.eigh(W)
    null = w <= _SING_TOL * max(1.0, w.max())
    Un = U[:, null]
    return Un @ Un.T


def _minimize_with_weight(Jp, Dp, W, k, pinned):
    """Run the pinned minimization, regularizing a singular weight.

    A singular W is replaced by W + eps * P_perp for eps in {1e-6, 1e-7, 1e-8}
    and the value extrapolated linearly to eps = 0; the argmin is taken from
    the smallest eps.
    """
    W = check_weight(W, k)
    w = np.linalg.eigvalsh(W)
    singular = w.min() <= _SING_TOL * max(1.0, w.max())
    if not singular:
        out = _pinned_minimize(Jp, Dp, W, k, pinned)
        diag = {
            "restart_values": out.values,
            "restart_converged": out.converged,
            "stable": out.stable,
            "regularized": False,
        }
        return out.value, out.P, W, diag

    Pperp = _null_projector(W)
    eps_seq = (1e-6, 1e-7, 1e-8)
    vals, outs = [], []
    for eps in eps_seq:
        out = _pinned_minimize(Jp, Dp, W + eps * Pperp, k, pinned)
        vals.append(out.value)
        outs.append(out)
    # linear fit v = a + b*eps, report a
    A = np.vstack([np.ones(len(eps_seq)), np.array(eps_seq)]).T
    coef, *_ = np.linalg.lstsq(A, np.array(vals), rcond=None)
    value = float(coef[0])
    last = outs[-1]
    diag = {
        "restart_values": last.values,
        "restart_converged": last.converged,
        "stable": all(o.stable for o in outs),
        "regularized": True,
        "reg_eps": list(eps_seq),
        "reg_values": vals,
    }
    return value, last.P, W + eps_seq[-1] * Pperp, diag


def holevo_bound(Jp, Dp, W, k):
    """Minimized precision bound over the D-invariant extension data (Jp, Dp).

    Minimizes f(P) over k x k' matrices P whose left k x k block is pinned to
    the identity.  Returns the value, the argmin P, the attaining covariance
    V and minimizer diagnostics.
    """
    Jp = np.asarray(Jp, dtype=float)
    Dp = np.asarray(Dp, dtype=float)
    if Jp.shape != Dp.shape:
        raise ValidationError("Jp and Dp shapes differ: %r vs %r" % (Jp.shape, Dp.shape))
    kp = Jp.shape[0]
    if not (1 <= k <= kp):
        raise ValidationError("need 1 <= k <= k', got k=%d, k'=%d" % (k, kp))
    value, P, W_used, diag = _minimize_with_weight(Jp, Dp, W, k, pinned=k)
    V = optimal_limiting_covariance(Jp, Dp, W_used, P)
    diag["trace_wv"] = float(np.trace(W_used @ V))
    return HolevoResult(value, P, V, diag)


def nuisance_bound(Jp, Dp, W, k, s):
    """Bound for k interest parameters with s nuisance parameters.

    Same objective as holevo_bound, but P has its first k+s columns pinned to
    [I_k | 0]: the nuisance directions cannot be traded against the extension.
    W is k x k (interest block only).  s = 0 reduces to holevo_bound.
    """
    Jp = np.asarray(Jp, dtype=float)
    Dp = np.asarray(Dp, dtype=float)
    kp = Jp.shape[0]
    if s < 0 or k < 1 or k + s > kp:
        raise ValidationError(
            "need k >= 1, s >= 0, k+s <= k'; got k=%d, s=%d, k'=%d" % (k, s, kp)
        )
    value, _P, _W_used, _diag = _minimize_with_weight(Jp, Dp, W, k, pinned=k + s)
    return float(value)


def sld_gap_bound(Jp, Dp, k):
    """Half trace norm of the interest block of Jp^{-1} Dp Jp^{-1}.

    Lower-bounds the total variance excess forced by SLD incompatibility.
    Zero for classical (commuting) models.
    """
    Kinv = _inv_spd(np.asarray(Jp, dtype=float))
    KDK = Kinv @ np.asarray(Dp, dtype=float) @ Kinv
    block = KDK[:k, :k]
    return 0.5 * trace_norm(block)


def cost_hessian(cost_fn, t0, h=1e-4):
    """Quadratic coefficient matrix of a smooth cost c(that, t) at that = t = t0.

    W_ij = (1/2) d^2 c / d_delta_i d_delta_j at delta = 0, central differences.
    """
    t0 = np.asarray(t0, dtype=float)
    kk = t0.size

    def c(delta):
        return float(cost_fn(t0 + delta, t0))

    W = np.empty((kk, kk))
    c0 = c(np.zeros(kk))
    for i in range(kk):
        ei = np.zeros(kk)
        ei[i] = h
        W[i, i] = (c(ei) - 2.0 * c0 + c(-ei)) / h**2
        for j in range(i + 1, kk):
            ej = np.zeros(kk)
            ej[j] = h
            W[i, j] = W[j, i] = (
                c(ei + ej) - c(ei - ej) - c(-ei + ej) + c(-ei - ej)
            ) / (4.0 * h**2)
    W = 0.25 * (W + W.T)  # halve for the quadratic form, symmetrize
    return W


def asymptotic_cost_bound(model, t0, W, nuisance=0):
    """Asymptotic bound on n * E[c] for a cost with quadratic coefficient W.

    Builds the minimal D-invariant extension at t0 and evaluates the
    minimized bound (with nuisance pinning when nuisance > 0).  W must be
    PSD: an indefinite cost Hessian is rejected.
    """
    W = np.asarray(W, dtype=float)
    if np.linalg.eigvalsh(0.5 * (W + W.T)).min() < -1e-10:
        raise ValidationError("cost Hessian is indefinite")
    k = model.nparams - nuisance
    W = check_weight(W, k)
    ext = minimal_d_invariant_extension(model, t0)
    if nuisance == 0:
        return holevo_bound(ext.J, ext.D, W, k).value
    return nuisance_bound(ext.J, ext.D, W, k, nuisance)


class BoundReport:
    """The full ladder at one point.

    When `nuisance_s` > 0 the sld/rld/holevo entries refer to the restricted
    family with the nuisance coordinates frozen at their true values, and
    `nuisance` is the bound for estimating the interest block without that
    knowledge; holevo <= nuisance always.
    """

    def __init__(self, point, sld, rld, holevo, nuisance, argmin_P, V_opt, diagnostics):
        self.point = point
        self.sld = sld
        self.rld = rld
        self.holevo = holevo
        self.nuisance = nuisance
        self.argmin_P = argmin_P
        self.V_opt = V_opt
        self.diagnostics = diagnostics

    def to_record(self):
        rec = {
            "point": [float(x) for x in np.atleast_1d(self.point)],
            "sld": self.sld,
            "rld": self.rld,
            "holevo": self.holevo,
            "nuisance": self.nuisance,
            "v_opt": None if self.V_opt is None else self.V_opt.tolist(),
            "argmin_p": None if self.argmin_P is None else self.argmin_P.tolist(),
            "stable": bool(self.diagnostics.get("stable", True)),
            "restart_values": self.diagnostics.get("restart_values"),
        }
        return rec


def bound_report(model, t0, W, nuisance=0):
    """Compute the whole ladder for `model` at t0 with weight W.

    nuisance: number of trailing parameters treated as nuisance.  The
    interest block is the leading k = nparams - nuisance coordinates.
    """
    t0 = np.asarray(t0, dtype=float)
    k = model.nparams - nuisance
    if k < 1:
        raise ValidationError("no interest parameters left (nuisance too large)")
    W = check_weight(W, k)

    if nuisance:
        interest = restrict(model, list(range(k)), t0)
        t_int = t0[:k]
    else:
        interest = model
        t_int = t0

    bundle = fisher.sld_qfi(interest, t_int)
    sld = sld_bound(bundle.J, W)
    try:
        Jt = fisher.rld_qfi(interest, t_int)
        rld = rld_bound(Jt, W)
    except ValidationError:
        rld = None

    ext_int = minimal_d_invariant_extension(interest, t_int)
    hol = holevo_bound(ext_int.J, ext_int.D, W, k)

    nui = None
    diag = dict(hol.diagnostics)
    if nuisance:
        ext_full = minimal_d_invariant_extension(model, t0)
        nui = nuisance_bound(ext_full.J, ext_full.D, W, k, nuisance)
        diag["full_extension_dim"] = ext_full.k_ext

    diag["interest_extension_dim"] = ext_int.k_ext
    return BoundReport(t0, sld, rld, hol.value, nui, hol.P, hol.V, diag)
