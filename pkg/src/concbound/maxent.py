"""Maximum-entropy product-of-geometrics distribution on Z^n_{>=0} with E[AX] = b.

The primal maximizes sum_j h(z_j), h(z) = (z+1)ln(z+1) - z ln z, over {z >= 0, Az = b}.
We minimize its smooth dual

    G(lam) = <lam, b> - sum_j ln(1 - exp(-theta_j)),   theta = A^T lam,

on the open cone {theta > 0}; at the minimizer z_j = 1/(e^theta_j - 1) and
q_j = e^-theta_j are the geometric parameters.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .model import PolytopeSpec

log = logging.getLogger(__name__)

ARMIJO = 1e-4


class SolverError(RuntimeError):
    """The dual Newton iteration could not produce a solution."""


class DomainError(ValueError):
    """A dual point outside {theta > 0}."""


@dataclass
class SolveOptions:
    tol_solve: float = 1e-10
    max_iter: int = 200
    init_lambda: np.ndarray | None = None

    def __post_init__(self):
        if not self.tol_solve > 0:
            raise ValueError("tol_solve must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class MaxEntSolution:
    lam: np.ndarray
    theta: np.ndarray
    q: np.ndarray
    z: np.ndarray
    entropy: float
    residual: float
    iterations: int
    dual_value: float = math.nan
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def m(self) -> int:
        return self.lam.shape[0]

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def summary(self) -> dict:
        return {
            "entropy": self.entropy,
            "log10_eH": self.entropy / math.log(10.0),
            "dual_value": self.dual_value,
            "residual": self.residual,
            "iterations": self.iterations,
            "z_min": float(self.z.min()),
            "z_max": float(self.z.max()),
            "lambda": self.lam.tolist(),
            "z": self.z.tolist(),
        }


def entropy_geometric(z):
    """Entropy in nats of a geometric variable on {0,1,...} with mean z.

    Evaluated as ln(1+z) + z ln(1+1/z), which avoids the cancellation in
    (z+1)ln(z+1) - z ln z for large z. Accepts scalars or arrays.
    """
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(np.isnan(z_arr)):
        raise ValueError("entropy_geometric needs z >= 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(z_arr > 0, z_arr * np.log1p(1.0 / np.where(z_arr > 0, z_arr, 1.0)), 0.0)
    out = np.log1p(z_arr) + tail
    return float(out) if out.ndim == 0 else out


def entropy_inverse(h: float) -> float:
    """Mean z of the geometric variable with entropy h (nats)."""
    if not h >= 0:
        raise ValueError("entropy_inverse needs h >= 0")
    if h == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while entropy_geometric(hi) < h:
        lo, hi = hi, hi * 2.0
        if hi > 1e300:
            raise ValueError(f"entropy {h} out of range")
    # bisect to bracket collapse; entropy_geometric is strictly increasing
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if entropy_geometric(mid) < h:
            lo = mid
        else:
            hi = mid
    return lo if abs(entropy_geometric(lo) - h) <= abs(entropy_geometric(hi) - h) else hi


def omega(t):
    """Entropy of a geometric variable written in t = ln(1 + mean)."""
    t = np.asarray(t, dtype=float)
    out = -np.expm1(t) * np.log1p(-np.exp(-t)) + t
    return float(out) if out.ndim == 0 else out


def _theta(spec: PolytopeSpec, lam: np.ndarray) -> np.ndarray:
    return spec.A_float.T @ lam


def dual_value(spec: PolytopeSpec, lam: np.ndarray) -> float:
    theta = _theta(spec, lam)
    if np.any(theta <= 0):
        raise DomainError("lambda outside the dual domain (some <lambda, a_j> <= 0)")
    return float(lam @ spec.b_float - np.sum(np.log1p(-np.exp(-theta))))


def dual_value_grad_hess(spec: PolytopeSpec, lam) -> tuple[float, np.ndarray, np.ndarray]:
    """Value, gradient b - Az and Hessian sum_j z_j(z_j+1) a_j a_j^T of the dual."""
    lam = np.asarray(lam, dtype=float)
    A = spec.A_float
    theta = A.T @ lam
    if np.any(theta <= 0):
        bad = np.flatnonzero(theta <= 0)
        raise DomainError(f"lambda outside the dual domain at columns {bad.tolist()[:10]}")
    z = 1.0 / np.expm1(theta)
    value = float(lam @ spec.b_float - np.sum(np.log1p(-np.exp(-theta))))
    grad = spec.b_float - A @ z
    w = z * (z + 1.0)
    hess = (A * w) @ A.T
    return value, grad, hess


def _initial_lambda(spec: PolytopeSpec) -> np.ndarray:
    A = spec.A_float
    m, n = A.shape
    lam, *_ = np.linalg.lstsq(A.T, np.ones(n), rcond=None)
    if np.all(A.T @ lam > 0):
        return lam
    # row-sum direction works whenever A is nonnegative with no zero column
    lam = A @ np.ones(n)
    if np.all(A.T @ lam > 0):
        return lam / max(1.0, float(np.min(A.T @ lam)))
    # maximize t subject to A^T lam >= t, |lam_i| <= 1
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A.T, np.ones((n, 1))])
    bounds = [(-1.0, 1.0)] * m + [(None, 1.0)]
    res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=np.zeros(n), bounds=bounds, method="highs")
    if res.status == 0 and -res.fun > 1e-12:
        return res.x[:m]
    raise SolverError(
        "no admissible starting point with <lambda, a_j> > 0 for all j; "
        "pass SolveOptions(init_lambda=...) explicitly"
    )


def solve_maxent(spec: PolytopeSpec, opts: SolveOptions | None = None) -> MaxEntSolution:
    """Damped Newton minimization of the dual until ||Az - b|| / ||b|| <= tol_solve."""
    opts = opts or SolveOptions()
    A = spec.A_float
    b = spec.b_float
    bnorm = float(np.linalg.norm(b)) or 1.0
    if opts.init_lambda is not None:
        lam = np.asarray(opts.init_lambda, dtype=float).copy()
        if lam.shape != (spec.m,):
            raise ValueError(f"init_lambda must have shape ({spec.m},)")
        if np.any(A.T @ lam <= 0):
            raise SolverError("init_lambda is not admissible (some <lambda, a_j> <= 0)")
    else:
        lam = _initial_lambda(spec)

    history = []
    value, grad, hess = dual_value_grad_hess(spec, lam)
    for it in range(opts.max_iter + 1):
        resid = float(np.linalg.norm(grad)) / bnorm
        history.append(resid)
        if resid <= opts.tol_solve:
            break
        if it == opts.max_iter:
            raise SolverError(f"no convergence after {opts.max_iter} iterations (residual {resid:.3e})")
        try:
            factor = scipy.linalg.cho_factor(hess)
        except np.linalg.LinAlgError as exc:
            raise SolverError("Hessian is not positive definite (rank deficient A?)") from exc
        step = -scipy.linalg.cho_solve(factor, grad)
        slope = float(grad @ step)
        t = 1.0
        while True:
            trial = lam + t * step
            if np.all(A.T @ trial > 0):
                trial_value = dual_value(spec, trial)
                # slack for round-off once the decrease is at machine level
                if trial_value <= value + ARMIJO * t * slope + 1e-14 * (1.0 + abs(value)):
                    break
            t *= 0.5
            if t < 1e-30:
                raise SolverError("line search failed; theta_j is diverging (P may lie in a coordinate hyperplane)")
        lam = trial
        value, grad, hess = dual_value_grad_hess(spec, lam)
        if not np.all(np.isfinite(grad)):
            raise SolverError("non-finite gradient")

    theta = A.T @ lam
    z = 1.0 / np.expm1(theta)
    q = np.exp(-theta)
    entropy = float(np.sum(entropy_geometric(z)))
    log.debug("maxent converged in %d iterations, residual %.2e", it, resid)
    return MaxEntSolution(lam, theta, q, z, entropy, resid, it, value, history)


def entropy_total(sol: MaxEntSolution) -> float:
    return float(np.sum(entropy_geometric(sol.z)))
