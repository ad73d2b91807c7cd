"""Weighted least-squares identification of the hardening parameters.

The error functional is Resid^T W Resid with a symmetric positive definite
weighting matrix W; minimizing it is the same as minimizing the plain
l2-norm of the whitened residual W^(1/2) Resid, which is what the
Levenberg-Marquardt loop drives. The solver works on unit-column-scaled
parameters internally so the very different magnitudes of the six
hardening parameters never meet the damping parameter directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .constitutive import HardeningParams, MaterialParams, cauchy_response
from .errors import (
    DataError,
    DimensionMismatch,
    FactorizationFailure,
    NonFiniteResidual,
)
from .loading import StrainProgram

#: substeps per sample interval of the strain program (fixed so that data
#: generation and identification always share one grid)
N_SUB_RESPONSE = 2


@dataclass
class ExperimentData:
    """N scalar observations (shear stresses, MPa) over a strain abscissa."""

    observations: np.ndarray
    abscissae: np.ndarray
    metadata: str = "synthetic"

    def __post_init__(self):
        self.observations = np.asarray(self.observations, dtype=float)
        self.abscissae = np.asarray(self.abscissae, dtype=float)
        if self.observations.ndim != 1 or self.abscissae.shape != self.observations.shape:
            raise DataError("observations and abscissae must be equal-length vectors")
        if not (np.all(np.isfinite(self.observations)) and np.all(np.isfinite(self.abscissae))):
            raise DataError("experimental data must be finite")
        if len(self.observations) <= len(HardeningParams.__dataclass_fields__):
            raise DataError(
                f"need more observations than parameters (N > 6), got N = {len(self.observations)}"
            )

    @property
    def n(self) -> int:
        return len(self.observations)


class WeightingScheme:
    """Symmetric positive definite weighting of the residual.

    Identity and diagonal kinds store no full matrix; the dense matrix is
    only materialized on request. The square root W^(1/2) of a full matrix
    is the symmetric eigendecomposition root by default; a Cholesky factor
    can be requested instead (any factor M with M^T M = W defines the same
    functional, which the tests pin down).
    """

    def __init__(self, kind: str, diag: np.ndarray | None = None,
                 full: np.ndarray | None = None, root: str = "sym"):
        self.kind = kind
        self._diag = None
        self._full = None
        self._root = None
        if diag is not None:
            d = np.asarray(diag, dtype=float)
            if d.ndim != 1:
                raise FactorizationFailure("diagonal weights must form a vector")
            if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
                raise FactorizationFailure("diagonal weighting must be strictly positive")
            self._diag = d
        if full is not None:
            w = np.asarray(full, dtype=float)
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise FactorizationFailure("weighting matrix must be square")
            scale = np.max(np.abs(w))
            if scale == 0.0 or np.max(np.abs(w - w.T)) > 1.0e-10 * scale:
                raise FactorizationFailure("weighting matrix must be symmetric")
            w = 0.5 * (w + w.T)
            vals, vecs = np.linalg.eigh(w)
            if vals.min() <= 0.0:
                raise FactorizationFailure("weighting matrix is not positive definite")
            if root == "sym":
                self._root = (vecs * np.sqrt(vals)) @ vecs.T
            elif root == "cholesky":
                self._root = np.linalg.cholesky(w).T
            else:
                raise ValueError(f"unknown root method {root!r}")
            self._full = w

    @classmethod
    def identity(cls, n: int | None = None) -> "WeightingScheme":
        scheme = cls("identity")
        scheme._n = n
        return scheme

    @classmethod
    def diagonal(cls, diag, kind: str = "diag_inverse_cov") -> "WeightingScheme":
        return cls(kind, diag=diag)

    @classmethod
    def full(cls, matrix, kind: str = "full_inverse_cov", root: str = "sym") -> "WeightingScheme":
        return cls(kind, full=matrix, root=root)

    @classmethod
    def custom(cls, matrix, root: str = "sym") -> "WeightingScheme":
        return cls("custom", full=matrix, root=root)

    @property
    def n(self) -> int | None:
        if self._diag is not None:
            return len(self._diag)
        if self._full is not None:
            return len(self._full)
        return getattr(self, "_n", None)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.n is not None and x.shape[0] != self.n:
            raise DimensionMismatch(f"expected leading dimension {self.n}, got {x.shape[0]}")
        return x

    def matrix(self, n: int | None = None) -> np.ndarray:
        """Materialize W as a dense array."""
        if self._full is not None:
            return self._full.copy()
        if self._diag is not None:
            return np.diag(self._diag)
        size = n if n is not None else self.n
        if size is None:
            raise DimensionMismatch("identity scheme needs an explicit size to materialize")
        return np.eye(size)

    def quadratic(self, resid: np.ndarray) -> float:
        """Resid^T W Resid."""
        r = self._check(resid)
        if self._full is not None:
            return float(r @ (self._full @ r))
        if self._diag is not None:
            return float(r @ (self._diag * r))
        return float(r @ r)

    def whiten(self, x: np.ndarray) -> np.ndarray:
        """W^(1/2) x for a vector or column-stacked matrix."""
        x = self._check(x)
        if self._root is not None:
            return self._root @ x
        if self._diag is not None:
            s = np.sqrt(self._diag)
            return s * x if x.ndim == 1 else s[:, None] * x
        return x.copy()

    def apply(self, x: np.ndarray) -> np.ndarray:
        """W x for a vector or column-stacked matrix."""
        x = self._check(x)
        if self._full is not None:
            return self._full @ x
        if self._diag is not None:
            return self._diag * x if x.ndim == 1 else self._diag[:, None] * x
        return x.copy()


def error_functional(resid: np.ndarray, scheme: WeightingScheme) -> float:
    """Phi = Resid^T W Resid (>= 0, zero only for a zero residual)."""
    return scheme.quadratic(resid)


def whiten(resid: np.ndarray, scheme: WeightingScheme) -> np.ndarray:
    """Whitened residual; its squared l2-norm equals the error functional."""
    return scheme.whiten(resid)


def model_response(p, fixed: MaterialParams, program: StrainProgram,
                   n_sub: int = N_SUB_RESPONSE) -> np.ndarray:
    """Cauchy shear stress at every sample point of the program."""
    vec = p.as_vector() if isinstance(p, HardeningParams) else np.asarray(p, dtype=float)
    return model_response_batch(vec[None, :], fixed, program, n_sub=n_sub)[0]


def model_response_batch(pvecs: np.ndarray, fixed: MaterialParams, program: StrainProgram,
                         n_sub: int = N_SUB_RESPONSE) -> np.ndarray:
    """(M, N) shear-stress responses for a batch of parameter vectors."""
    f = program.deformation_gradients()
    out = cauchy_response(f, program.times(), fixed, pvecs, n_sub=n_sub)
    return out[:, :, 0, 1]


def fd_step_sizes(pvec: np.ndarray, rel_step: float = 1.0e-6, abs_floor: float = 1.0e-8) -> np.ndarray:
    """Central-difference steps: relative with an absolute floor for
    parameters sitting at or near zero."""
    return np.maximum(rel_step * np.abs(pvec), abs_floor)


def _fd_jacobian(pvec: np.ndarray, response_batch: Callable[[np.ndarray], np.ndarray],
                 rel_step: float, abs_floor: float) -> np.ndarray:
    k = len(pvec)
    h = fd_step_sizes(pvec, rel_step, abs_floor)
    probes = np.tile(pvec, (2 * k, 1))
    for i in range(k):
        probes[2 * i, i] += h[i]
        probes[2 * i + 1, i] -= h[i]
    values = response_batch(probes)
    jac = np.empty((values.shape[1], k))
    for i in range(k):
        jac[:, i] = (values[2 * i] - values[2 * i + 1]) / (2.0 * h[i])
    return jac


def jacobian_fd(p, fixed: MaterialParams, program: StrainProgram,
                rel_step: float = 1.0e-6, abs_floor: float = 1.0e-8,
                n_sub: int = N_SUB_RESPONSE) -> np.ndarray:
    """(N, 6) central-difference sensitivity of the model response, columns
    in the fixed parameter order."""
    vec = p.as_vector() if isinstance(p, HardeningParams) else np.asarray(p, dtype=float)
    return _fd_jacobian(
        vec, lambda probes: model_response_batch(probes, fixed, program, n_sub=n_sub),
        rel_step, abs_floor,
    )


@dataclass
class LMOptions:
    """Termination and damping knobs for the Levenberg-Marquardt loop.

    tol_g applies to the whitened gradient measured on unit-column-scaled
    parameters (so it is meaningful across mixed parameter units), tol_f to
    the relative decrease of the error functional on accepted steps.
    """

    tol_g: float = 1.0e-8
    tol_f: float = 1.0e-12
    max_iter: int = 200
    lambda0: float = 1.0e-3
    lambda_factor: float = 10.0
    lambda_max: float = 1.0e12
    rel_step: float = 1.0e-6
    abs_floor: float = 1.0e-8


@dataclass
class FitResult:
    params: HardeningParams
    phi: float
    iterations: int
    jacobian: np.ndarray
    converged: bool
    history: list = field(default_factory=list)


@dataclass
class RawFitResult:
    """Solver output before any domain wrapping (generic least squares)."""

    x: np.ndarray
    phi: float
    iterations: int
    jacobian: np.ndarray
    converged: bool
    history: list


def fit_least_squares(
    start: np.ndarray,
    observations: np.ndarray,
    response_batch: Callable[[np.ndarray], np.ndarray],
    scheme: WeightingScheme,
    opts: LMOptions | None = None,
    jacobian_fn: Callable[[np.ndarray], np.ndarray] | None = None,
    lower_bound: float | None = 0.0,
) -> RawFitResult:
    """Damped least squares on the whitened residual observations - response.

    response_batch maps (M, k) parameter rows to (M, N) responses; the
    Jacobian defaults to central differences through the same function.
    The damping parameter grows by lambda_factor on rejected steps and
    shrinks on accepted ones, accepted steps never increase the functional,
    and candidate iterates are clipped to the lower bound before they are
    evaluated.
    """
    opts = opts or LMOptions()
    obs = np.asarray(observations, dtype=float)
    p = np.asarray(start, dtype=float).copy()
    if lower_bound is not None:
        p = np.maximum(p, lower_bound)

    def residual(vec: np.ndarray) -> np.ndarray:
        r = obs - response_batch(vec[None, :])[0]
        if not np.all(np.isfinite(r)):
            raise NonFiniteResidual("model response is not finite")
        return r

    def jac(vec: np.ndarray) -> np.ndarray:
        if jacobian_fn is not None:
            return np.asarray(jacobian_fn(vec), dtype=float)
        return _fd_jacobian(vec, response_batch, opts.rel_step, opts.abs_floor)

    if obs.ndim != 1:
        raise DimensionMismatch("observations must form a vector")
    r = residual(p)
    if len(r) != len(obs):
        raise DimensionMismatch("response length does not match observations")
    phi = scheme.quadratic(r)
    lam = opts.lambda0
    history = [(0, phi, lam, True)]
    converged = False
    iterations = 0

    for it in range(1, opts.max_iter + 1):
        iterations = it
        j = jac(p)
        jw = scheme.whiten(j)
        rw = scheme.whiten(r)
        grad = jw.T @ rw
        a = jw.T @ jw
        dcol = np.sqrt(np.diag(a))
        dcol[dcol == 0.0] = 1.0
        if np.max(np.abs(grad / dcol)) < opts.tol_g:
            converged = True
            break
        a_scaled = a / np.outer(dcol, dcol)
        g_scaled = grad / dcol

        accepted = False
        while lam <= opts.lambda_max:
            try:
                q = np.linalg.solve(a_scaled + lam * np.eye(len(p)), g_scaled)
            except np.linalg.LinAlgError:
                lam *= opts.lambda_factor
                continue
            candidate = p + q / dcol
            if lower_bound is not None:
                candidate = np.maximum(candidate, lower_bound)
            r_new = residual(candidate)
            phi_new = scheme.quadratic(r_new)
            if phi_new < phi:
                rel_drop = (phi - phi_new) / max(phi, np.finfo(float).tiny)
                p, r, phi = candidate, r_new, phi_new
                lam = max(lam / opts.lambda_factor, 1.0e-14)
                history.append((it, phi, lam, True))
                accepted = True
                if rel_drop < opts.tol_f:
                    converged = True
                break
            lam *= opts.lambda_factor
            history.append((it, phi_new, lam, False))
        if not accepted:
            break
        if converged:
            break

    return RawFitResult(p, phi, iterations, jac(p), converged, history)


def levenberg_marquardt(
    start: HardeningParams,
    data: ExperimentData,
    scheme: WeightingScheme,
    fixed: MaterialParams,
    program: StrainProgram,
    opts: LMOptions | None = None,
) -> FitResult:
    """Identify the hardening parameters from measured shear stresses."""
    if data.n != program.n_points:
        raise DimensionMismatch(
            f"data has {data.n} observations but the program has {program.n_points} sample points"
        )
    raw = fit_least_squares(
        start.as_vector(),
        data.observations,
        lambda probes: model_response_batch(probes, fixed, program),
        scheme,
        opts=opts,
        lower_bound=0.0,
    )
    return FitResult(
        params=HardeningParams.from_vector(raw.x),
        phi=raw.phi,
        iterations=raw.iterations,
        jacobian=raw.jacobian,
        converged=raw.converged,
        history=raw.history,
    )
