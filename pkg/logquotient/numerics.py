"""Dense numerical kernels: matrix exponential, eigen and linear solves, RK4, damped Newton.

Every kernel is a pure function over small dense arrays. Input validation
raises ``ValidationError``; numerical breakdown raises ``NumericalError``
subclasses carrying the operation name.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, NumericalError, SingularMatrixError, ValidationError

logger = logging.getLogger(__name__)

# Singular values below RANK_RCOND * sigma_max count as zero.
RANK_RCOND = 1e-10

EIG_RESIDUAL_TOL = 1e-9

Objective = Callable[[np.ndarray], tuple[float, np.ndarray, np.ndarray]]


# ─── Input coercion ──────────────────────────────────────────

def as_matrix(value, name: str = "matrix", *, square: bool = False) -> np.ndarray:
    """Coerce to a finite 2-D float array."""
    try:
        M = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} is not a numeric matrix") from None
    if M.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got {M.ndim}-D")
    if square and M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    return M


def as_vector(value, name: str = "vector", size: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float array, optionally of a fixed length."""
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} is not a numeric vector") from None
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got {v.ndim}-D")
    if size is not None and v.size != size:
        raise ValidationError(f"{name} must have {size} entries, got {v.size}")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def as_grid(value, name: str = "time grid") -> np.ndarray:
    """Coerce to a nonempty, strictly increasing 1-D grid."""
    grid = as_vector(value, name)
    if grid.size == 0:
        raise ValidationError(f"{name} is empty")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return grid


def is_symmetric(A: np.ndarray) -> bool:
    scale = max(1.0, float(np.linalg.norm(A)))
    return bool(np.allclose(A, A.T, rtol=0.0, atol=1e-12 * scale))


# ─── Linear algebra ──────────────────────────────────────────

def expm(A) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Padé approximant."""
    M = as_matrix(A, "expm argument", square=True)
    return scipy.linalg.expm(M)


def eig(A, *, symmetric: bool | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (complex, sorted by real then imaginary part) and eigenvectors as columns.

    Symmetric input goes through ``eigh`` and returns real orthonormal vectors.
    """
    M = as_matrix(A, "eig argument", square=True)
    if symmetric is None:
        symmetric = is_symmetric(M)

    try:
        if symmetric:
            w, V = scipy.linalg.eigh(0.5 * (M + M.T))
            w = w.astype(complex)
        else:
            w, V = scipy.linalg.eig(M)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise ConvergenceError("eig", f"eigen decomposition failed: {e}") from e

    order = np.lexsort((w.imag, w.real))
    w, V = w[order], V[:, order]

    scale = max(1.0, float(np.linalg.norm(M)))
    residual = float(np.max(np.abs(M @ V - V * w), initial=0.0)) if w.size else 0.0
    if not np.isfinite(residual) or residual > EIG_RESIDUAL_TOL * scale:
        raise ConvergenceError("eig", f"eigenpair residual {residual:.3e} exceeds tolerance")
    return w, V


def solve(A, b, *, operation: str = "solve") -> np.ndarray:
    """Direct solve of A x = b; singular A raises with its condition number."""
    M = as_matrix(A, f"{operation} matrix", square=True)
    rhs = np.asarray(b, dtype=float)
    condition = float(np.linalg.cond(M)) if M.size else 1.0
    if not np.isfinite(condition) or condition * np.finfo(float).eps > 1.0:
        raise SingularMatrixError(operation, condition)
    try:
        return scipy.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(operation, condition) from None


def lstsq_min_norm(A, b) -> np.ndarray:
    """Minimum-norm least-squares solution (SVD based, rank cutoff ``RANK_RCOND``)."""
    M = as_matrix(A, "lstsq matrix")
    rhs = as_vector(b, "lstsq right-hand side", M.shape[0])
    x, *_ = scipy.linalg.lstsq(M, rhs, cond=RANK_RCOND, lapack_driver="gelsd")
    return x


def rank(A) -> int:
    M = np.asarray(A, dtype=float)
    if M.size == 0:
        return 0
    s = scipy.linalg.svdvals(M)
    if s.max() == 0.0:
        return 0
    return int(np.sum(s > RANK_RCOND * s.max()))


def null_space(A) -> np.ndarray:
    """Orthonormal basis of ker(A) as columns."""
    M = np.asarray(A, dtype=float)
    return scipy.linalg.null_space(M, rcond=RANK_RCOND)


def canonical_basis(N: np.ndarray) -> np.ndarray:
    """Re-express a basis so it is the identity on a pivot set of rows.

    Pivot rows come from column-pivoted QR of Nᵀ and are kept in ascending
    order. The result spans the same subspace and is independent of the
    rotation SVD happened to return.
    """
    k, m = N.shape
    if m == 0:
        return N.copy()
    _, pivots = scipy.linalg.qr(N.T, mode="r", pivoting=True)
    rows = np.sort(pivots[:m])
    B = N @ np.linalg.inv(N[rows, :])
    B[np.abs(B) < 1e-12 * max(1.0, float(np.max(np.abs(B))))] = 0.0
    B[rows, :] = np.eye(m)
    return B


# ─── Time stepping ───────────────────────────────────────────

def rk4(
    f: Callable[[float, np.ndarray], np.ndarray],
    x0,
    grid,
    dt_max: float,
) -> np.ndarray:
    """Classic fixed-step RK4 sampled on ``grid``.

    Each grid interval is split into the fewest equal sub-steps no longer
    than ``dt_max``. Returns an array of shape (len(grid), len(x0)).
    """
    times = as_grid(grid)
    if not dt_max > 0:
        raise ValidationError(f"dt_max must be positive, got {dt_max}")
    x = as_vector(x0, "initial state").copy()

    samples = np.empty((times.size, x.size))
    samples[0] = x
    for i in range(1, times.size):
        t0, t1 = float(times[i - 1]), float(times[i])
        n_steps = max(1, math.ceil((t1 - t0) / dt_max - 1e-9))
        h = (t1 - t0) / n_steps
        for j in range(n_steps):
            t = t0 + j * h
            k1 = f(t, x)
            k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
            k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
            k4 = f(t + h, x + h * k3)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise NumericalError("rk4", f"state became non-finite at t={t1:g}")
        samples[i] = x
    return samples


# ─── Damped Newton ───────────────────────────────────────────

@dataclass
class NewtonResult:
    """Outcome of a damped Newton minimization."""

    x: np.ndarray
    iterations: int
    converged: bool
    diverged: bool = False
    grad_norm: float = math.inf
    message: str = ""
    history: list[float] = field(default_factory=list)  # objective at accepted iterates


def newton_minimize(
    fun: Objective,
    x0,
    *,
    tol: float,
    max_iter: int = 200,
    armijo: float = 1e-4,
    backtrack: float = 0.5,
    min_step: float = 1e-12,
    divergence_radius: float = math.inf,
) -> NewtonResult:
    """Minimize a smooth strictly convex function with Newton steps and Armijo backtracking.

    ``fun`` returns (value, gradient, Hessian). A trial point whose value is
    not finite is rejected like any other failed Armijo test. Once the value
    only changes at round-off level a step is accepted when it reduces the
    gradient norm.
    """
    if not 0 < armijo < 1 or not 0 < backtrack < 1:
        raise ValidationError("armijo and backtrack factors must lie in (0, 1)")

    x = as_vector(x0, "Newton start").copy()
    with np.errstate(over="ignore", invalid="ignore"):
        value, grad, hess = fun(x)
    if not np.isfinite(value):
        raise NumericalError("newton_minimize", "objective is not finite at the start point")

    history = [float(value)]
    iterations = 0
    while True:
        grad_norm = float(np.linalg.norm(grad))
        logger.debug("newton iter=%d f=%.17g |g|=%.3e", iterations, value, grad_norm)
        if grad_norm <= tol:
            return NewtonResult(x, iterations, True, grad_norm=grad_norm,
                                message="gradient tolerance reached", history=history)
        if iterations >= max_iter:
            return NewtonResult(x, iterations, False, grad_norm=grad_norm,
                                message="iteration cap reached", history=history)

        try:
            step = scipy.linalg.solve(hess, -grad, assume_a="pos")
        except (np.linalg.LinAlgError, ValueError):
            return NewtonResult(x, iterations, False, diverged=True, grad_norm=grad_norm,
                                message="Hessian lost positive definiteness", history=history)
        if not np.all(np.isfinite(step)):
            return NewtonResult(x, iterations, False, diverged=True, grad_norm=grad_norm,
                                message="Newton direction is not finite", history=history)

        slope = float(grad @ step)
        if slope >= 0.0:
            step, slope = -grad, -grad_norm**2

        t = 1.0
        while True:
            trial = x + t * step
            with np.errstate(over="ignore", invalid="ignore"):
                f_t, g_t, h_t = fun(trial)
            if np.isfinite(f_t):
                if f_t <= value + armijo * t * slope:
                    break
                roundoff = 64.0 * np.finfo(float).eps * max(1.0, abs(value))
                if abs(f_t - value) <= roundoff and np.linalg.norm(g_t) < grad_norm:
                    break
            t *= backtrack
            if t < min_step:
                return NewtonResult(x, iterations, False, grad_norm=grad_norm,
                                    message="line search stalled", history=history)

        x, value, grad, hess = trial, f_t, g_t, h_t
        history.append(float(value))
        iterations += 1
        logger.debug("newton accepted step length %.3e", t)

        if np.linalg.norm(x) > divergence_radius:
            return NewtonResult(x, iterations, False, diverged=True,
                                grad_norm=float(np.linalg.norm(grad)),
                                message="iterates left the divergence radius", history=history)
