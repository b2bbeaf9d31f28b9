"""Monte-Carlo attainability checks for one-parameter models.

Sampling of POVM outcomes, the locally optimal single-copy measurement,
averaged-estimator simulations, the two-step (localize, then measure
optimally) protocol, and the fidelity form of the Cramer-Rao inequality.
All randomness is drawn from numpy Generators seeded as (seed, trial), so
runs are reproducible bit-for-bit.
"""

import math

import numpy as np
from scipy.stats import norm

from .matcore import EIG_FLOOR, ValidationError, hermitian_eig, state_inner, sld_solve, sld_solve_support
from .models import state_at, derivatives_at
from .fisher import fidelity

KS_CRITICAL_1PCT = 1.6276  # asymptotic Kolmogorov quantile at alpha = 0.01


class Povm:
    """Measurement with effects and a real outcome value per effect."""

    def __init__(self, effects, values):
        effects = [np.asarray(E) for E in effects]
        if not effects:
            raise ValidationError("POVM needs at least one effect")
        dim = effects[0].shape[0]
        total = np.zeros((dim, dim), dtype=complex)
        for E in effects:
            if E.shape != (dim, dim):
                raise ValidationError("POVM effects must share one square shape")
            if np.linalg.eigvalsh(0.5 * (E + E.conj().T)).min() < -1e-10:
                raise ValidationError("POVM effect has negative eigenvalue")
            total += E
        if np.linalg.norm(total - np.eye(dim)) > 1e-9:
            raise ValidationError("POVM effects do not sum to the identity")
        values = np.asarray(values, dtype=float)
        if values.shape[0] != len(effects):
            raise ValidationError("need one outcome value per effect")
        self.effects = effects
        self.values = values
        self.dim = dim

    def probabilities(self, rho):
        p = np.array([np.trace(rho @ E).real for E in self.effects])
        if p.min() < -1e-10:
            raise ValidationError("negative outcome probability %.3e" % p.min())
        p = np.clip(p, 0.0, None)
        s = p.sum()
        if not (1.0 - 1e-8 <= s <= 1.0 + 1e-8):
            raise ValidationError("outcome probabilities sum to %.12f" % s)
        return p / s


def sample_povm(rho, povm, shots, rng):
    """I.i.d. categorical outcome indices for `shots` measurements."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    p = povm.probabilities(rho)
    return rng.choice(len(povm.effects), size=int(shots), p=p)


def one_param_local_povm(model, t0):
    """Locally optimal projective measurement for a one-parameter model.

    Measures in the SLD eigenbasis and assigns value t0 + lambda/J to the
    eigenvalue-lambda projector.  Locally unbiased at t0: the expectation is
    t0 and its derivative there is 1.
    """
    if model.nparams != 1:
        raise ValidationError("one_param_local_povm needs a single parameter")
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    rho = state_at(model, t0)
    G = derivatives_at(model, t0)[0]
    p = np.linalg.eigvalsh(rho)
    solver = sld_solve_support if p.min() <= EIG_FLOOR else sld_solve
    L = solver(rho, G)
    J = state_inner(rho, L, L)
    if J <= 1e-10:
        raise ValidationError("SLD information is numerically zero")
    lam, U = hermitian_eig(L)
    effects = [np.outer(U[:, i], U[:, i].conj()) for i in range(U.shape[1])]
    values = float(t0[0]) + lam / J
    return Povm(effects, values)


class SimulationRun:
    """Rescaled estimates from repeated n-copy trials."""

    def __init__(self, seed, n, trials, rescaled, fallback=None, tails=None):
        self.seed = seed
        self.n = int(n)
        self.trials = int(trials)
        self.rescaled = np.asarray(rescaled, dtype=float)
        if self.rescaled.shape[0] != self.trials:
            raise ValidationError("sample count does not match trials")
        if not np.all(np.isfinite(self.rescaled)):
            raise ValidationError("non-finite estimate in simulation run")
        self.fallback = None if fallback is None else np.asarray(fallback, dtype=bool)
        self.tails = dict(tails) if tails else {}

    @property
    def n_mse(self):
        return float(np.mean(self.rescaled**2))

    @property
    def fallback_frac(self):
        if self.fallback is None:
            return None
        return float(np.mean(self.fallback))

    def tail_frequency(self, c):
        return float(np.mean(self.rescaled**2 >= c))

    def ks_distance_to_normal(self, variance):
        """Kolmogorov-Smirnov distance of the rescaled sample to N(0, variance)."""
        xs = np.sort(self.rescaled)
        nn = xs.size
        cdf = norm.cdf(xs, scale=math.sqrt(variance))
        upper = np.max(np.arange(1, nn + 1) / nn - cdf)
        lower = np.max(cdf - np.arange(0, nn) / nn)
        return float(max(upper, lower))

    def to_csv(self, path):
        lines = ["# qestbounds-csv v1"]
        summary = "# seed=%s n=%d trials=%d n_mse=%.17g" % (
            self.seed,
            self.n,
            self.trials,
            self.n_mse,
        )
        if self.fallback is not None:
            summary += " fallback_frac=%.17g" % self.fallback_frac
        lines.append(summary)
        lines.append("trial,rescaled,fallback")
        for i in range(self.trials):
            fb = "" if self.fallback is None else str(int(self.fallback[i]))
            lines.append("%d,%.17g,%s" % (i, self.rescaled[i], fb))
        text = "\n".join(lines) + "\n"
        if hasattr(path, "write"):
            path.write(text)
        else:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def simulate_mse(model, t_true, t0, n, trials, seed=0, c_values=()):
    """Average the locally optimal single-copy estimator over n copies.

    The measurement is optimized at t0; data are drawn at t_true; the
    recorded statistics are sqrt(n) * (mean - t_true) per trial.
    """
    t_true = np.atleast_1d(np.asarray(t_true, dtype=float))
    povm = one_param_local_povm(model, t0)
    p = povm.probabilities(state_at(model, t_true))
    v = povm.values
    sqrt_n = math.sqrt(n)
    rescaled = np.empty(trials)
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        counts = rng.multinomial(n, p)
        tbar = float(counts @ v) / n
        rescaled[trial] = sqrt_n * (tbar - t_true[0])
    run = SimulationRun(seed, n, trials, rescaled)
    run.tails = {c: run.tail_frequency(c) for c in c_values}
    return run


def _pauli_tomography_estimate(model, t_true, m, rng):
    """Linear-inversion Bloch estimate from m copies split over sigma_x/y/z."""
    from .models import PAULI

    rho = state_at(model, t_true)
    m1 = m // 3
    counts = (m1, m1, m - 2 * m1)
    r_hat = np.empty(3)
    for a in range(3):
        r_a = float(np.trace(rho @ PAULI[a]).real)
        p_up = min(max(0.5 * (1.0 + r_a), 0.0), 1.0)
        ups = rng.binomial(counts[a], p_up)
        r_hat[a] = 2.0 * ups / counts[a] - 1.0
    norm_r = np.linalg.norm(r_hat)
    if norm_r > 1.0:
        r_hat /= norm_r
    return r_hat


def two_step_simulate(model, t_true, n, x, trials, seed=0):
    """Two-step protocol: crude localization, then the locally optimal POVM.

    Step 1 runs Pauli linear-inversion tomography on m = ceil(n^(1-x/2))
    copies and projects the Bloch estimate into the model domain to get
    t0_hat.  Step 2 averages the locally optimal measurement at t0_hat over
    the remaining copies to get t1_hat, accepted only if it lies within
    n^(-(1-x)/2) of t0_hat; otherwise the crude estimate is kept.
    """
    if model.nparams != 1:
        raise ValidationError("two_step_simulate needs a one-parameter model")
    if model.dim != 2:
        raise ValidationError("two_step_simulate is implemented for qubit models")
    if model.bloch_to_param is None or model.domain_project is None:
        raise ValidationError(
            "model must provide bloch_to_param and domain_project for tomography"
        )
    if not (0.0 < x < 2.0 / 9.0):
        raise ValidationError("x must lie in (0, 2/9), got %r" % x)
    t_true = np.atleast_1d(np.asarray(t_true, dtype=float))
    m = int(math.ceil(n ** (1.0 - x / 2.0)))
    if m < 30:
        raise ValidationError("localization stage too small (m = %d < 30)" % m)
    if m >= n:
        raise ValidationError("localization stage consumes all copies (m = %d >= n)" % m)
    n2 = n - m
    radius = n ** (-(1.0 - x) / 2.0)
    sqrt_n = math.sqrt(n)
    rho_true = state_at(model, t_true)

    rescaled = np.empty(trials)
    fallback = np.empty(trials, dtype=bool)
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        r_hat = _pauli_tomography_estimate(model, t_true, m, rng)
        t0_hat = float(model.domain_project(np.atleast_1d(model.bloch_to_param(r_hat)))[0])
        povm = one_param_local_povm(model, np.array([t0_hat]))
        p = povm.probabilities(rho_true)
        counts = rng.multinomial(n2, p)
        t1_hat = float(counts @ povm.values) / n2
        if abs(t1_hat - t0_hat) <= radius:
            final = t1_hat
            fallback[trial] = False
        else:
            final = t0_hat
            fallback[trial] = True
        rescaled[trial] = sqrt_n * (final - t_true[0])
    return SimulationRun(seed, n, trials, rescaled, fallback=fallback)


def two_point_phase_povm(model, t0, eps):
    """Projective qubit measurement unbiased at both t0 and t0 + eps.

    For the phase model (Bloch radius r in the equatorial plane), measure
    along the axis at angle t0 + eps/2 + pi/2 and assign values
    (t0 + eps/2) +/- eps/(2 r sin(eps/2)).
    """
    from .models import PAULI

    if eps <= 0.0:
        raise ValidationError("eps must be positive")
    r = float(model.constants.get("r", 1.0))
    t0 = float(np.atleast_1d(t0)[0])
    phi = t0 + 0.5 * eps + 0.5 * math.pi
    axis = np.array([math.cos(phi), math.sin(phi), 0.0])
    msig = sum(axis[a] * PAULI[a] for a in range(3))
    eye = np.eye(2, dtype=complex)
    effects = [0.5 * (eye + msig), 0.5 * (eye - msig)]
    S = eps / (2.0 * r * math.sin(0.5 * eps))
    center = t0 + 0.5 * eps
    return Povm(effects, [center + S, center - S])


class CrCheckReport:
    """Outcome of the fidelity Cramer-Rao inequality evaluation."""

    def __init__(self, eps, V0, V1, F, bias0, bias1, slack, unbiased_ok):
        self.eps = eps
        self.V0 = V0
        self.V1 = V1
        self.F = F
        self.bias0 = bias0
        self.bias1 = bias1
        self.slack = slack
        self.unbiased_ok = unbiased_ok
        self.holds = slack >= -1e-9 if unbiased_ok else None


def fidelity_cr_check(model, t0, eps, povm):
    """Evaluate the fidelity form of the Cramer-Rao inequality.

    slack = (V_t0 + V_t1 + eps^2)/2 - eps^2 / (8 (1 - F(rho_t0, rho_t1)))
    with t1 = t0 + eps, using exact trace formulas.  The inequality is only
    guaranteed for estimators unbiased at both points; biases beyond 1e-6 are
    reported (unbiased_ok = False) and `holds` is left undecided.
    """
    if eps <= 0.0:
        raise ValidationError("eps must be positive")
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    t1 = t0.copy()
    t1[0] += eps
    rho0 = state_at(model, t0)
    rho1 = state_at(model, t1)
    p0 = povm.probabilities(rho0)
    p1 = povm.probabilities(rho1)
    v = povm.values
    mean0 = float(p0 @ v)
    mean1 = float(p1 @ v)
    bias0 = mean0 - float(t0[0])
    bias1 = mean1 - float(t1[0])
    V0 = float(p0 @ (v - float(t0[0])) ** 2)
    V1 = float(p1 @ (v - float(t1[0])) ** 2)
    F = fidelity(rho0, rho1)
    if F >= 1.0 - 1e-15:
        raise ValidationError("states at t0 and t0+eps are indistinguishable")
    slack = 0.5 * (V0 + V1 + eps**2) - eps**2 / (8.0 * (1.0 - F))
    unbiased_ok = abs(bias0) <= 1e-6 and abs(bias1) <= 1e-6
    return CrCheckReport(eps, V0, V1, F, bias0, bias1, slack, unbiased_ok)


def ks_critical(trials, alpha=0.01):
    """Asymptotic Kolmogorov-Smirnov critical value."""
    if alpha != 0.01:
        raise ValidationError("only the 1%% level is tabulated here")
    return KS_CRITICAL_1PCT / math.sqrt(trials)
