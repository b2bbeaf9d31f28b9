"""Parametric state families and the minimal D-invariant extension builder.

A model is a map from a real parameter vector to a density matrix, together
with (optionally analytic) derivative access.  Built-in families cover the
standard worked examples: two non-commuting qubit observables, amplitude
damping, the multi-phase interferometric family with loss, the full qudit
model, classical probability simplices, and a single-phase qubit rotation.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .matcore import (
    EIG_FLOOR,
    ValidationError,
    check_hermitian,
    d_map_support,
    hermitian_eig,
    sld_solve,
    sld_solve_support,
    state_inner,
)

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class ParametricModel:
    name: str
    dim: int
    nparams: int
    param_names: tuple
    state_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fn: Optional[Callable[[np.ndarray], list]] = None
    fd_step: float = 1e-5
    constants: dict = field(default_factory=dict)
    # qubit-only hooks used by the two-step tomography stage
    bloch_to_param: Optional[Callable[[np.ndarray], float]] = None
    domain_project: Optional[Callable[[float], float]] = None


@dataclass(frozen=True)
class ModelExtension:
    """SLD span of a model closed under the commutant map.

    Carries the extended derivative and SLD lists (first k entries match the
    original model), the appended orthonormal directions, and the extended
    information matrices consumed by the bound minimizers.
    """

    k: int
    k_ext: int
    sld_ops: list
    ext_derivs: list
    new_basis: list
    J: np.ndarray
    D: np.ndarray
    closure_residual: float


def _validate_density(rho, dim, where):
    rho = check_hermitian(rho, tol=1e-10)
    if rho.shape != (dim, dim):
        raise ValidationError(f"{where}: state has shape {rho.shape}, expected ({dim}, {dim})")
    tr = float(np.real(np.trace(rho)))
    if abs(tr - 1.0) > 1e-10:
        raise ValidationError(f"{where}: state trace {tr} is not 1")
    w = np.linalg.eigvalsh(rho)
    if w.min() < -1e-10:
        raise ValidationError(f"{where}: state has negative eigenvalue {w.min():.3e}")
    return rho


def state_at(model: ParametricModel, t) -> np.ndarray:
    """Evaluate and validate the model's density matrix at parameter t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.shape != (model.nparams,):
        raise ValidationError(
            f"model {model.name} takes {model.nparams} parameters, got {t.shape}"
        )
    rho = model.state_fn(t)
    return _validate_density(rho, model.dim, f"{model.name} at t={t}")


def derivatives_at(model: ParametricModel, t0) -> list:
    """Derivative matrices at t0: analytic when the model carries them,
    otherwise symmetric differences with the model's step."""
    t0 = np.atleast_1d(np.asarray(t0, dtype=float))
    if model.deriv_fn is not None:
        ds = [np.asarray(d, dtype=complex) for d in model.deriv_fn(t0)]
    else:
        h = model.fd_step
        ds = []
        for j in range(model.nparams):
            e = np.zeros(model.nparams)
            e[j] = h
            ds.append((state_at(model, t0 + e) - state_at(model, t0 - e)) / (2 * h))
    for j, d in enumerate(ds):
        check_hermitian(d, tol=1e-8)
        if abs(np.trace(d)) > 1e-8:
            raise ValidationError(f"derivative {j} of {model.name} is not traceless")
    return ds


# ---------------------------------------------------------------------------
# built-in families


def _bloch(n):
    return 0.5 * (np.eye(2, dtype=complex) + n[0] * PAULI[0] + n[1] * PAULI[1] + n[2] * PAULI[2])


def _vec_sigma(v):
    return v[0] * PAULI[0] + v[1] * PAULI[1] + v[2] * PAULI[2]


def _two_observables(constants):
    a = np.asarray(constants.get("a", (1.0, 0.0, 0.0)), dtype=float)
    if "b" in constants:
        b = np.asarray(constants["b"], dtype=float)
    else:
        s = float(constants.get("s", 0.0))
        if not 0.0 <= s < 1.0:
            raise ValidationError("two_observables needs s in [0, 1)")
        b = s * np.array([1.0, 0, 0]) + math.sqrt(1 - s * s) * np.array([0, 1.0, 0])
    for v, nm in ((a, "a"), (b, "b")):
        if abs(np.linalg.norm(v) - 1.0) > 1e-9:
            raise ValidationError(f"two_observables: |{nm}| must be 1")
    s = float(a @ b)
    if not 0.0 <= s < 1.0:
        raise ValidationError("two_observables: a.b must lie in [0, 1)")
    om = 1.0 - s * s
    c = np.cross(a, b) / math.sqrt(om)
    ap = (a - s * b) / om
    bp = (b - s * a) / om

    def state(t):
        x, y, z = t
        xp = (x - y * s) / om
        yp = (y - x * s) / om
        return _bloch(xp * a + yp * b + z * c)

    derivs = [0.5 * _vec_sigma(ap), 0.5 * _vec_sigma(bp), 0.5 * _vec_sigma(c)]

    return ParametricModel(
        name="two_observables",
        dim=2,
        nparams=3,
        param_names=("x", "y", "z"),
        state_fn=state,
        deriv_fn=lambda t: derivs,
        constants={"a": tuple(a), "b": tuple(b), "s": s},
    )


def _amplitude_damping(constants):
    def nvec(t):
        th, ph, eta = t
        if not 0.0 < eta <= 1.0:
            raise ValidationError("amplitude_damping: eta must lie in (0, 1]")
        se = math.sqrt(eta)
        return np.array(
            [se * math.sin(th) * math.sin(ph), se * math.sin(th) * math.cos(ph), 1 - eta + eta * math.cos(th)]
        )

    def state(t):
        return _bloch(nvec(t))

    def derivs(t):
        th, ph, eta = t
        se = math.sqrt(eta)
        p_th = np.array([se * math.cos(th) * math.sin(ph), se * math.cos(th) * math.cos(ph), -eta * math.sin(th)])
        p_ph = np.array([se * math.sin(th) * math.cos(ph), -se * math.sin(th) * math.sin(ph), 0.0])
        p_eta = np.array(
            [math.sin(th) * math.sin(ph) / (2 * se), math.sin(th) * math.cos(ph) / (2 * se), -1 + math.cos(th)]
        )
        # convention: generators are (dn).sigma — twice the raw state derivative
        return [_vec_sigma(p_th), _vec_sigma(p_ph), _vec_sigma(p_eta)]

    return ParametricModel(
        name="amplitude_damping",
        dim=2,
        nparams=3,
        param_names=("theta", "phi", "eta"),
        state_fn=state,
        deriv_fn=derivs,
    )


def _multiphase(constants):
    try:
        d = int(constants["d"])
        N = float(constants["N"])
        a = float(constants["a"])
        b = float(constants["b"])
    except KeyError as exc:
        raise ValidationError(f"multiphase needs constant {exc}") from exc
    if d < 1:
        raise ValidationError("multiphase: d must be a positive integer")
    if N <= 0:
        raise ValidationError("multiphase: N must be positive")
    if not 0.0 <= b * b <= 1.0:
        raise ValidationError("multiphase: b^2 must lie in [0, 1]")
    if abs(a * a + b * b - 1.0) > 1e-9:
        raise ValidationError("multiphase: a^2 + b^2 must equal 1")
    dim = d + 2  # modes 0..d plus one sink direction

    def psi(t):
        ts, alpha = t[:d], t[d]
        v = np.zeros(dim, dtype=complex)
        v[0] = math.cos(alpha)
        amp = math.sin(alpha) / math.sqrt(d)
        for j in range(d):
            v[1 + j] = amp * cmath.exp(1j * N * ts[j])
        return v

    def state(t):
        p = t[d + 1]
        if not 0.0 <= p <= 1.0:
            raise ValidationError("multiphase: p must lie in [0, 1]")
        v = psi(t)
        rho = p * np.outer(v, v.conj())
        rho[dim - 1, dim - 1] += 1 - p
        return rho

    def derivs(t):
        p = t[d + 1]
        ts, alpha = t[:d], t[d]
        v = psi(t)
        out = []
        amp = math.sin(alpha) / math.sqrt(d)
        for j in range(d):
            dv = np.zeros(dim, dtype=complex)
            dv[1 + j] = 1j * N * amp * cmath.exp(1j * N * ts[j])
            m = p * (np.outer(dv, v.conj()) + np.outer(v, dv.conj()))
            out.append(m)
        dv = np.zeros(dim, dtype=complex)
        dv[0] = -math.sin(alpha)
        ca = math.cos(alpha) / math.sqrt(d)
        for j in range(d):
            dv[1 + j] = ca * cmath.exp(1j * N * ts[j])
        out.append(p * (np.outer(dv, v.conj()) + np.outer(v, dv.conj())))
        dp = np.outer(v, v.conj())
        dp[dim - 1, dim - 1] -= 1.0
        out.append(dp)
        return out

    names = tuple(f"t{j+1}" for j in range(d)) + ("alpha", "p")
    return ParametricModel(
        name="multiphase",
        dim=dim,
        nparams=d + 2,
        param_names=names,
        state_fn=state,
        deriv_fn=derivs,
        constants={"d": d, "N": N, "a": a, "b": b},
    )


def multiphase_physical_point(a, b, N, eta, t=None):
    """Parameter vector of the multiphase family for transmissivity eta.

    Survival probability p = 1 - b^2 (1 - eta^N) and mixing angle
    alpha = arccos(a / sqrt(p)); phases default to zero.
    """
    if not 0.0 < eta <= 1.0:
        raise ValidationError("eta must lie in (0, 1]")
    p = 1.0 - b * b * (1.0 - eta ** N)
    ca = a / math.sqrt(p)
    if not -1.0 <= ca <= 1.0:
        raise ValidationError("inconsistent (a, b, eta): cos(alpha) outside [-1, 1]")
    alpha = math.acos(ca)
    if t is None:
        t = ()
    return np.array(list(t) + [alpha, p], dtype=float)


def gellmann_basis(d):
    """Generalized Gell-Mann matrices normalized to Tr[G_a G_b] = 2 delta_ab."""
    out = []
    for j in range(d):
        for k in range(j + 1, d):
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            out.append(m)
            m = np.zeros((d, d), dtype=complex)
            m[j, k] = -1j
            m[k, j] = 1j
            out.append(m)
    for l in range(1, d):
        m = np.zeros((d, d), dtype=complex)
        scale = math.sqrt(2.0 / (l * (l + 1)))
        for i in range(l):
            m[i, i] = scale
        m[l, l] = -l * scale
        out.append(m)
    return out


def _qudit_full(constants):
    try:
        d = int(constants["d"])
    except KeyError as exc:
        raise ValidationError("qudit_full needs constant d") from exc
    spec = np.asarray(constants.get("p", np.linspace(2, 1, d) / np.sum(np.linspace(2, 1, d))), dtype=float)
    if spec.shape != (d,):
        raise ValidationError(f"qudit_full: spectrum must have length {d}")
    if abs(spec.sum() - 1.0) > 1e-9 or spec.min() <= 0:
        raise ValidationError("qudit_full: spectrum must be positive and sum to 1")
    gaps = np.diff(np.sort(spec))
    if gaps.size and np.abs(gaps).min() <= 1e-8:
        raise ValidationError("qudit_full: spectrum must be nondegenerate")
    rho0 = np.diag(spec).astype(complex)
    basis = gellmann_basis(d)
    k = d * d - 1

    def state(t):
        rho = rho0.copy()
        for a, G in zip(t, basis):
            rho = rho + a * G
        return rho

    return ParametricModel(
        name="qudit_full",
        dim=d,
        nparams=k,
        param_names=tuple(f"t{a+1}" for a in range(k)),
        state_fn=state,
        deriv_fn=lambda t: [G.copy() for G in basis],
        constants={"d": d, "p": tuple(spec)},
    )


def _classical_diagonal(constants):
    d = int(constants.get("d", 2))
    if d < 2:
        raise ValidationError("classical_diagonal: d must be at least 2")
    k = d - 1

    def state(t):
        probs = np.concatenate([t, [1.0 - float(np.sum(t))]])
        return np.diag(probs).astype(complex)

    def derivs(t):
        out = []
        for j in range(k):
            m = np.zeros((d, d), dtype=complex)
            m[j, j] = 1.0
            m[d - 1, d - 1] = -1.0
            out.append(m)
        return out

    extra = {}
    if d == 2:
        extra = {
            "bloch_to_param": lambda r: 0.5 * (1.0 + r[2]),
            "domain_project": lambda t: min(max(t, 1e-6), 1 - 1e-6),
        }
    return ParametricModel(
        name="classical_diagonal",
        dim=d,
        nparams=k,
        param_names=tuple(f"t{j+1}" for j in range(k)),
        state_fn=state,
        deriv_fn=derivs,
        constants={"d": d},
        **extra,
    )


def _phase(constants):
    r = float(constants.get("r", 1.0))
    if not 0.0 < r <= 1.0:
        raise ValidationError("phase: r must lie in (0, 1]")

    def state(t):
        return _bloch(np.array([r * math.cos(t[0]), r * math.sin(t[0]), 0.0]))

    def derivs(t):
        return [0.5 * _vec_sigma(np.array([-r * math.sin(t[0]), r * math.cos(t[0]), 0.0]))]

    return ParametricModel(
        name="phase",
        dim=2,
        nparams=1,
        param_names=("t",),
        state_fn=state,
        deriv_fn=derivs,
        constants={"r": r},
        bloch_to_param=lambda v: math.atan2(v[1], v[0]),
        domain_project=lambda t: t,
    )


_BUILTINS = {
    "two_observables": _two_observables,
    "amplitude_damping": _amplitude_damping,
    "multiphase": _multiphase,
    "qudit_full": _qudit_full,
    "classical_diagonal": _classical_diagonal,
    "phase": _phase,
}


def builtin(name: str, constants: Optional[dict] = None) -> ParametricModel:
    """Construct a named built-in model from its constants."""
    if name not in _BUILTINS:
        raise ValidationError(f"unknown model {name!r}; choose from {sorted(_BUILTINS)}")
    return _BUILTINS[name](dict(constants or {}))


def restrict(model: ParametricModel, keep: Sequence[int], base_point) -> ParametricModel:
    """Submodel varying only the parameters in `keep`, others frozen at base_point."""
    keep = tuple(int(i) for i in keep)
    base = np.asarray(base_point, dtype=float).copy()

    def embed(t):
        full = base.copy()
        full[list(keep)] = t
        return full

    def state(t):
        return model.state_fn(embed(t))

    deriv_fn = None
    if model.deriv_fn is not None:
        deriv_fn = lambda t: [model.deriv_fn(embed(t))[i] for i in keep]

    return ParametricModel(
        name=f"{model.name}[{','.join(model.param_names[i] for i in keep)}]",
        dim=model.dim,
        nparams=len(keep),
        param_names=tuple(model.param_names[i] for i in keep),
        state_fn=state,
        deriv_fn=deriv_fn,
        fd_step=model.fd_step,
        constants=dict(model.constants),
    )


def model_from_spec(spec: dict):
    """Build (model, point) from a {name, constants, point} mapping."""
    try:
        name = spec["name"]
    except KeyError as exc:
        raise ValidationError("model spec needs a 'name'") from exc
    model = builtin(name, spec.get("constants") or {})
    point = spec.get("point")
    if point is not None:
        point = np.asarray(point, dtype=float)
    return model, point


def load_model_spec(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_spec(json.load(fh))


# ---------------------------------------------------------------------------
# minimal D-invariant extension

SPAN_CUTOFF = 1e-8


def _project_out(rho, X, basis):
    out = X.copy()
    for B in basis:
        out = out - state_inner(rho, B, X) * B
    return out


def _rho_norm(rho, X):
    return math.sqrt(max(state_inner(rho, X, X), 0.0))


def minimal_d_invariant_extension(model: ParametricModel, t0) -> ModelExtension:
    """Close the SLD span of the model at t0 under the commutant map.

    Appends orthonormal directions (under the state's symmetric inner product)
    until the span is invariant, and returns the extended derivative/SLD lists
    together with the extended information matrices.
    """
    rho = state_at(model, t0)
    derivs = derivatives_at(model, t0)
    k = len(derivs)
    singular = np.linalg.eigvalsh(rho).min() <= EIG_FLOOR
    solve = sld_solve_support if singular else sld_solve
    slds = [solve(rho, G) for G in derivs]

    gram = np.array([[state_inner(rho, a, b) for b in slds] for a in slds])
    gw = np.linalg.eigvalsh(gram)
    if gw.min() <= SPAN_CUTOFF * max(1.0, gw.max()):
        raise ValidationError("SLD operators are linearly dependent; extension is ill-posed")

    # orthonormal working basis for the current span
    basis = []
    for L in slds:
        V = _project_out(rho, L, basis)
        V = _project_out(rho, V, basis)
        basis.append(V / _rho_norm(rho, V))

    new_dirs = []
    frontier = list(basis)
    guard = model.dim ** 2 + 1
    while frontier and guard:
        guard -= 1
        images = [d_map_support(rho, B) for B in frontier]
        frontier = []
        for img in images:
            V = _project_out(rho, img, basis)
            V = _project_out(rho, V, basis)
            nrm = _rho_norm(rho, V)
            if nrm > SPAN_CUTOFF * max(1.0, _rho_norm(rho, img)):
                V = V / nrm
                basis.append(V)
                new_dirs.append(V)
                frontier.append(V)
    if frontier:
        raise ValidationError("commutant closure failed to stabilize")

    closure = 0.0
    for B in basis:
        img = d_map_support(rho, B)
        resid = _project_out(rho, img, basis)
        closure = max(closure, _rho_norm(rho, resid))

    sld_ops = slds + new_dirs
    ext_derivs = list(derivs) + [0.5 * (rho @ B + B @ rho) for B in new_dirs]
    kp = len(sld_ops)
    J = np.array([[state_inner(rho, a, b) for b in sld_ops] for a in sld_ops])
    J = 0.5 * (J + J.T)
    Dm = np.zeros((kp, kp))
    for i in range(kp):
        for j in range(i + 1, kp):
            val = 1j * np.trace(rho @ (sld_ops[i] @ sld_ops[j] - sld_ops[j] @ sld_ops[i]))
            if abs(val.imag) > 1e-9:
                raise ValidationError("commutator trace is not real")
            Dm[i, j] = val.real
            Dm[j, i] = -val.real
    return ModelExtension(
        k=k,
        k_ext=kp,
        sld_ops=sld_ops,
        ext_derivs=ext_derivs,
        new_basis=new_dirs,
        J=J,
        D=Dm,
        closure_residual=closure,
    )
