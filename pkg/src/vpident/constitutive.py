"""Finite-strain viscoplasticity with combined isotropic-kinematic hardening.

The material stores elastic energy in a compressible neo-Hookean-type
potential and hardening energy in two saturating backstress terms plus a
quadratic isotropic term. Flow is overstress-driven with a power-law
(Perzyna) multiplier, and the inelastic metric tensors evolve so that
their determinants stay at one (incompressible flow).

All stress expressions are the exact derivatives of the potentials; the
central-difference checks live in the test suite only. The integrator
advances a whole batch of hardening-parameter sets along one shared strain
path with vectorized 3x3 algebra, so Monte Carlo work costs a single pass.

Time stepping is first order: the elastic trial stress is evaluated at the
end-of-step strain with frozen internal variables, the flow magnitude is
solved implicitly against a linearized overstress relaxation (which keeps
large steps stable), and the internal tensors are updated in Euler form
followed by a unimodular projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import (
    InvalidTimeGrid,
    NonPositiveDefinite,
    NonPositiveDeterminant,
    StepFailure,
)
from .tensors import (
    I3,
    det,
    deviator,
    frobenius_norm,
    inverse,
    is_positive_definite,
    sym,
    symmetry_defect,
    trace,
    transpose,
    unimodular,
)

SQ23 = math.sqrt(2.0 / 3.0)

#: Fixed component order of the identified parameter vector.
PARAM_NAMES = ("gamma", "beta", "c1", "c2", "kappa1", "kappa2")

#: |det - 1| allowed for the inelastic metric tensors after a step.
DET_TOL = 1.0e-10


@dataclass(frozen=True)
class HardeningParams:
    """Identified hardening parameters, in the fixed order of PARAM_NAMES.

    gamma  isotropic hardening modulus [MPa]
    beta   isotropic saturation parameter [-]
    c1, c2 kinematic hardening moduli [MPa]
    kappa1, kappa2 kinematic saturation parameters [1/MPa]
    """

    gamma: float
    beta: float
    c1: float
    c2: float
    kappa1: float
    kappa2: float

    def __post_init__(self):
        for name in PARAM_NAMES:
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0.0:
                raise ValueError(f"hardening parameter {name} must be finite and >= 0, got {value}")

    def as_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in PARAM_NAMES], dtype=float)

    @classmethod
    def from_vector(cls, vec) -> "HardeningParams":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (6,):
            raise ValueError(f"expected a parameter vector of shape (6,), got {vec.shape}")
        return cls(*(float(v) for v in vec))


@dataclass(frozen=True)
class MaterialParams:
    """Full material record: pre-identified constants plus hardening.

    k     bulk modulus [MPa]
    mu    shear modulus [MPa]
    eta   viscosity [s]
    m     stress exponent [-]
    K     initial yield stress [MPa]
    k0    overstress normalizer [MPa], fixed at 1.0
    """

    k: float
    mu: float
    eta: float
    m: float
    K: float
    hardening: HardeningParams
    k0: float = 1.0

    def __post_init__(self):
        for name in ("k", "mu", "K", "k0", "eta"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"material parameter {name} must be > 0")
        if self.m < 1.0:
            raise ValueError("stress exponent m must be >= 1")

    def with_hardening(self, hardening: HardeningParams) -> "MaterialParams":
        return replace(self, hardening=hardening)


@dataclass
class InternalState:
    """Inelastic state: three unit-determinant metric tensors plus the
    accumulated arc length s and its dissipative part sd."""

    Ci: np.ndarray
    C1i: np.ndarray
    C2i: np.ndarray
    s: float
    sd: float

    @classmethod
    def initial(cls) -> "InternalState":
        return cls(np.eye(3), np.eye(3), np.eye(3), 0.0, 0.0)

    def validate(self) -> None:
        for name in ("Ci", "C1i", "C2i"):
            a = getattr(self, name)
            if symmetry_defect(a) > 1.0e-10:
                raise NonPositiveDefinite(f"{name} is not symmetric")
            if not bool(is_positive_definite(a)):
                raise NonPositiveDefinite(f"{name} is not positive definite")
            if abs(float(det(a)) - 1.0) > DET_TOL:
                raise StepFailure(f"det({name}) deviates from 1 beyond {DET_TOL}")
        if self.s < 0.0 or self.s - self.sd < -1.0e-12:
            raise ValueError("arc length must satisfy s >= 0 and s >= sd")

    def copy(self) -> "InternalState":
        return InternalState(self.Ci.copy(), self.C1i.copy(), self.C2i.copy(), self.s, self.sd)


@dataclass
class StressOutput:
    """Stress quantities evaluated at one (deformation, state) pair."""

    second_pk: np.ndarray
    cauchy: np.ndarray
    backstress_total: np.ndarray
    R: float
    overstress_f: float
    driving_force_F: float
    lambda_i: float


# ---------------------------------------------------------------------------
# potentials


def _require_spd(a: np.ndarray) -> None:
    # Products like C Ci^-1 are only similar to an SPD tensor, so admissibility
    # is checked on the symmetric part and the determinant.
    if float(det(a)) <= 0.0 or not bool(is_positive_definite(sym(a))):
        raise NonPositiveDefinite("argument must be (similar to) symmetric positive definite")


def elastic_energy(a: np.ndarray, params: MaterialParams) -> float:
    """Stored elastic energy per reference volume [MPa]."""
    a = np.asarray(a, dtype=float)
    _require_spd(a)
    lnj = 0.5 * math.log(float(det(a)))
    return 0.5 * params.k * lnj**2 + 0.5 * params.mu * (float(trace(unimodular(a))) - 3.0)


def kinematic_energy(a: np.ndarray, c: float) -> float:
    """Backstress potential (c/4)(tr unimodular(A) - 3) per reference volume."""
    a = np.asarray(a, dtype=float)
    _require_spd(a)
    return 0.25 * c * (float(trace(unimodular(a))) - 3.0)


def isotropic_energy(s_e: float, gamma: float) -> float:
    return 0.5 * gamma * s_e * s_e


# ---------------------------------------------------------------------------
# stress kernels (batched; leading axes broadcast)


def _pk2_kernel(c_inv: np.ndarray, a_el: np.ndarray, k: float, mu: float) -> np.ndarray:
    """Second Piola-Kirchhoff stress from C^-1 and A = C Ci^-1."""
    lnj = 0.5 * np.log(det(a_el))
    t = k * lnj[..., None, None] * c_inv + mu * np.matmul(c_inv, deviator(unimodular(a_el)))
    return sym(t)


def _backstress_kernel(ci_inv: np.ndarray, b: np.ndarray, c: float) -> np.ndarray:
    """Backstress from Ci^-1 and B = Ci Cai^-1."""
    x = 0.5 * c * np.matmul(ci_inv, deviator(unimodular(b)))
    return sym(x)


def second_pk_stress(C: np.ndarray, state: InternalState, params: MaterialParams) -> np.ndarray:
    C = np.asarray(C, dtype=float)
    return _pk2_kernel(inverse(C), np.matmul(C, inverse(state.Ci)), params.k, params.mu)


def backstresses(state: InternalState, params: MaterialParams):
    """Both backstresses and their sum, on the reference configuration."""
    ci_inv = inverse(state.Ci)
    x1 = _backstress_kernel(ci_inv, np.matmul(state.Ci, inverse(state.C1i)), params.hardening.c1)
    x2 = _backstress_kernel(ci_inv, np.matmul(state.Ci, inverse(state.C2i)), params.hardening.c2)
    return x1, x2, x1 + x2


def isotropic_hardening(state: InternalState, params: MaterialParams) -> float:
    return params.hardening.gamma * (state.s - state.sd)


def overstress_and_multiplier(C: np.ndarray, state: InternalState, params: MaterialParams):
    """Overstress f, driving force, and the Perzyna multiplier (1/eta)<f/k0>^m."""
    C = np.asarray(C, dtype=float)
    t = second_pk_stress(C, state, params)
    _, _, x = backstresses(state, params)
    drive = float(frobenius_norm(deviator(np.matmul(C, t) - np.matmul(state.Ci, x))))
    f = drive - SQ23 * (params.K + isotropic_hardening(state, params))
    lam = (max(f, 0.0) / params.k0) ** params.m / params.eta
    return f, drive, lam


def cauchy_stress(F: np.ndarray, state: InternalState, params: MaterialParams) -> np.ndarray:
    """Push-forward T = (det F)^-1 F T_pk2 F^T of the second PK stress."""
    F = np.asarray(F, dtype=float)
    j = float(det(F))
    if j <= 0.0:
        raise NonPositiveDeterminant("deformation gradient must have det F > 0")
    t = second_pk_stress(np.matmul(transpose(F), F), state, params)
    return sym(np.matmul(F, np.matmul(t, transpose(F))) / j)


def stress_state(F: np.ndarray, state: InternalState, params: MaterialParams) -> StressOutput:
    """Evaluate every stress-like quantity at one deformation/state pair."""
    F = np.asarray(F, dtype=float)
    j = float(det(F))
    if j <= 0.0:
        raise NonPositiveDeterminant("deformation gradient must have det F > 0")
    C = np.matmul(transpose(F), F)
    t = second_pk_stress(C, state, params)
    _, _, x = backstresses(state, params)
    r = isotropic_hardening(state, params)
    drive = float(frobenius_norm(deviator(np.matmul(C, t) - np.matmul(state.Ci, x))))
    f = drive - SQ23 * (params.K + r)
    lam = (max(f, 0.0) / params.k0) ** params.m / params.eta
    cauchy = sym(np.matmul(F, np.matmul(t, transpose(F))) / j)
    return StressOutput(t, cauchy, x, r, f, drive, lam)


# ---------------------------------------------------------------------------
# time integration


def _flow_multiplier(f_trial, h_eff, mat: MaterialParams, dt: float):
    """Implicit flow magnitude: solve x + (h_eff dt / eta)(x/k0)^m = f_trial
    for the relaxed overstress x, then lambda = (x/k0)^m / eta.

    The left-hand side is increasing and convex, so Newton from x = f_trial
    converges monotonically; entries with f_trial <= 0 stay at zero. Each
    entry is frozen as soon as it converges, which keeps results independent
    of how the batch is chunked.
    """
    ft = np.maximum(f_trial, 0.0)
    c = np.maximum(h_eff, 0.0) * (dt / mat.eta)
    x = ft.copy()
    tol = 1.0e-12 * np.maximum(ft, mat.k0)
    for _ in range(80):
        phi = x + c * (x / mat.k0) ** mat.m - ft
        done = np.abs(phi) <= tol
        if done.all():
            break
        dphi = 1.0 + c * (mat.m / mat.k0) * (x / mat.k0) ** (mat.m - 1.0)
        x = np.where(done, x, x - phi / dphi)
    else:
        raise StepFailure("implicit flow solve did not converge")
    if not np.all(np.isfinite(x)):
        raise StepFailure("implicit flow solve produced non-finite values")
    return (x / mat.k0) ** mat.m / mat.eta


def _project_metric(a: np.ndarray) -> np.ndarray:
    """Symmetrize and rescale to det = 1; StepFailure if det drifted to <= 0."""
    a = sym(a)
    d = det(a)
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
        raise StepFailure("inelastic metric lost positive determinant (reduce the time step)")
    out = a / np.cbrt(d)[..., None, None]
    if np.any(np.abs(det(out) - 1.0) > DET_TOL):
        raise StepFailure("unimodular projection failed to restore det = 1")
    return out


def _advance(state_arrays, C_new, mat: MaterialParams, hp, dt: float):
    """One integration step for the whole batch to end-of-step strain C_new.

    state_arrays = (Ci, C1i, C2i, s, sd) with leading batch axis;
    hp = (gamma, beta, c1, c2, kappa1, kappa2) as broadcastable arrays.
    Elastic entries pass through bit-identically.
    """
    Ci, C1i, C2i, s, sd = state_arrays
    gam, bet, c1, c2, kap1, kap2 = hp

    a_el = np.matmul(C_new, inverse(Ci))
    dev_a = deviator(unimodular(a_el))
    dev_b1 = deviator(unimodular(np.matmul(Ci, inverse(C1i))))
    dev_b2 = deviator(unimodular(np.matmul(Ci, inverse(C2i))))

    xi = (
        mat.mu * dev_a
        - 0.5 * c1[..., None, None] * dev_b1
        - 0.5 * c2[..., None, None] * dev_b2
    )
    drive = frobenius_norm(xi)
    s_e = s - sd
    f_trial = drive - SQ23 * (mat.K + gam * s_e)
    plastic = f_trial > 0.0
    if not plastic.any():
        return state_arrays

    # Relaxation modulus for the implicit flow solve: elastic slope plus the
    # hardening slopes with their saturation (recovery) corrections. Each
    # backstress contribution fades as it saturates; without the correction
    # the overstress carries an O(dt) bias in developed flow.
    safe_drive = np.where(plastic, drive, 1.0)
    n_dot_b1 = np.sum(xi * dev_b1, axis=(-2, -1)) / safe_drive
    n_dot_b2 = np.sum(xi * dev_b2, axis=(-2, -1)) / safe_drive
    h_eff = (
        2.0 * mat.mu
        + c1 * (1.0 - 0.5 * kap1 * c1 * n_dot_b1)
        + c2 * (1.0 - 0.5 * kap2 * c2 * n_dot_b2)
        + (2.0 / 3.0) * gam * (1.0 - bet * s_e)
    )
    lam = np.where(plastic, _flow_multiplier(f_trial, h_eff, mat, dt), 0.0)

    scale = 2.0 * dt * lam / safe_drive
    Ci_new = _project_metric(Ci + scale[..., None, None] * np.matmul(xi, Ci))
    C1i_new = _project_metric(C1i + (dt * lam * kap1 * c1)[..., None, None] * np.matmul(dev_b1, C1i))
    C2i_new = _project_metric(C2i + (dt * lam * kap2 * c2)[..., None, None] * np.matmul(dev_b2, C2i))
    ok = (
        is_positive_definite(Ci_new)
        & is_positive_definite(C1i_new)
        & is_positive_definite(C2i_new)
    )
    if not np.all(ok | ~plastic):
        raise StepFailure("inelastic metric lost positive definiteness (reduce the time step)")

    mask = plastic[..., None, None]
    ds = dt * SQ23 * lam
    return (
        np.where(mask, Ci_new, Ci),
        np.where(mask, C1i_new, C1i),
        np.where(mask, C2i_new, C2i),
        np.where(plastic, s + ds, s),
        np.where(plastic, sd + bet * ds * s_e, sd),
    )


def _hp_arrays(pvecs: np.ndarray):
    pvecs = np.asarray(pvecs, dtype=float)
    if pvecs.ndim != 2 or pvecs.shape[1] != 6:
        raise ValueError(f"expected parameter vectors of shape (M, 6), got {pvecs.shape}")
    return tuple(np.ascontiguousarray(pvecs[:, i]) for i in range(6))


def _cauchy_at(C_obs, Cinv_obs, F_obs, detF_obs, Ci, mat: MaterialParams):
    """Batched Cauchy stress at one observation point of the strain path."""
    a_el = np.matmul(C_obs, inverse(Ci))
    t = _pk2_kernel(Cinv_obs, a_el, mat.k, mat.mu)
    return sym(np.matmul(F_obs, np.matmul(t, transpose(F_obs))) / detF_obs)


def run_path(
    F_samples: np.ndarray,
    times: np.ndarray,
    material: MaterialParams,
    pvecs: np.ndarray,
    n_sub: int = 1,
    sink: Callable[[int, np.ndarray], None] | None = None,
):
    """Integrate a batch of parameter sets along one deformation path.

    F_samples: (T, 3, 3) deformation gradients at strictly increasing times
    (T,); the path is linear in F between samples. pvecs: (M, 6) hardening
    vectors in PARAM_NAMES order. For every sample index i the callback
    ``sink(i, cauchy)`` receives the (M, 3, 3) Cauchy stresses. Returns the
    final state arrays.
    """
    F_samples = np.asarray(F_samples, dtype=float)
    times = np.asarray(times, dtype=float)
    if F_samples.ndim != 3 or F_samples.shape[1:] != (3, 3):
        raise ValueError("F_samples must have shape (T, 3, 3)")
    if len(times) != len(F_samples) or len(times) < 1:
        raise ValueError("times and F_samples must have equal nonzero length")
    if len(times) > 1 and np.any(np.diff(times) <= 0.0):
        raise InvalidTimeGrid("sample times must be strictly increasing")
    if n_sub < 1:
        raise InvalidTimeGrid("n_sub must be >= 1")

    detF = det(F_samples)
    if np.any(detF <= 0.0):
        raise NonPositiveDeterminant("every sampled F must have det F > 0")
    C_obs = np.matmul(transpose(F_samples), F_samples)
    Cinv_obs = inverse(C_obs)

    hp = _hp_arrays(pvecs)
    m = pvecs.shape[0]
    ident = np.broadcast_to(I3, (m, 3, 3)).copy()
    state = (ident, ident.copy(), ident.copy(), np.zeros(m), np.zeros(m))

    if sink is not None:
        sink(0, _cauchy_at(C_obs[0], Cinv_obs[0], F_samples[0], detF[0], state[0], material))
    for i in range(1, len(times)):
        dt = (times[i] - times[i - 1]) / n_sub
        for j in range(1, n_sub + 1):
            if j < n_sub:
                w = j / n_sub
                f_sub = (1.0 - w) * F_samples[i - 1] + w * F_samples[i]
                c_sub = np.matmul(transpose(f_sub), f_sub)
            else:
                c_sub = C_obs[i]
            state = _advance(state, c_sub, material, hp, dt)
        if sink is not None:
            sink(i, _cauchy_at(C_obs[i], Cinv_obs[i], F_samples[i], detF[i], state[0], material))
    return state


def cauchy_response(
    F_samples: np.ndarray,
    times: np.ndarray,
    material: MaterialParams,
    pvecs: np.ndarray,
    n_sub: int = 1,
) -> np.ndarray:
    """(M, T, 3, 3) Cauchy stress histories at the sample points."""
    pvecs = np.asarray(pvecs, dtype=float)
    out = np.empty((pvecs.shape[0], len(times), 3, 3))

    def sink(i, cauchy):
        out[:, i] = cauchy

    run_path(F_samples, times, material, pvecs, n_sub=n_sub, sink=sink)
    return out


def evolve_state(
    C_of_t: Callable[[float], np.ndarray],
    state0: InternalState,
    params: MaterialParams,
    t0: float,
    t1: float,
    dt: float,
) -> list[InternalState]:
    """Advance the internal state along a right Cauchy-Green path C(t).

    Returns the trajectory of states at the uniform grid covering [t0, t1]
    (including the initial state). The grid step is (t1 - t0)/n with
    n = ceil((t1 - t0)/dt), so the endpoint is hit exactly.
    """
    if t1 <= t0:
        raise InvalidTimeGrid("t1 must be greater than t0")
    if dt <= 0.0:
        raise InvalidTimeGrid("dt must be positive")
    state0.validate()
    n = max(1, math.ceil((t1 - t0) / dt - 1.0e-12))
    grid = np.linspace(t0, t1, n + 1)

    hp = _hp_arrays(params.hardening.as_vector()[None, :])
    state = (
        state0.Ci[None, :, :].astype(float),
        state0.C1i[None, :, :].astype(float),
        state0.C2i[None, :, :].astype(float),
        np.array([state0.s], dtype=float),
        np.array([state0.sd], dtype=float),
    )
    trajectory = [state0.copy()]
    for i in range(1, len(grid)):
        c_new = np.asarray(C_of_t(float(grid[i])), dtype=float)
        state = _advance(state, c_new, params, hp, float(grid[i] - grid[i - 1]))
        trajectory.append(
            InternalState(state[0][0].copy(), state[1][0].copy(), state[2][0].copy(),
                          float(state[3][0]), float(state[4][0]))
        )
    return trajectory
