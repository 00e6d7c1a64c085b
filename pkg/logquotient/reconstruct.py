"""Concentrations from target log-quotients and conserved totals.

Start from any c0 > 0 with Sᵀ ln c0 = x*, then move multiplicatively
along ker(Sᵀ): c(α) = exp(Lα) ∘ c0 keeps every quotient fixed. The totals
are matched by minimizing the strictly convex

    f(α) = Σ_i c0_i·exp((Lα)_i) − y*ᵀα,

whose stationarity condition is Lᵀc(α) = y*.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics
from .dynamics import Trajectory
from .errors import (
    ConvergenceError,
    InfeasibleTotalsError,
    UnachievableQuotientError,
    ValidationError,
)
from .network import (
    ACHIEVABILITY_TOL,
    ConservationBasis,
    Network,
    conservation_basis,
    cycle_basis,
)

logger = logging.getLogger(__name__)

# Converged totals must satisfy ‖Lᵀc* − y*‖ ≤ TOTALS_RTOL·‖y*‖.
TOTALS_RTOL = 1e-8


@dataclass(frozen=True)
class SolverSettings:
    """Newton tolerances; ``Config`` supplies these from the environment."""

    tol: float = 1e-10  # relative to max(1, ‖y*‖)
    max_iter: int = 200
    divergence_factor: float = 1e3  # ‖α‖ limit relative to max(1, ‖u0‖∞)


@dataclass(frozen=True, eq=False)
class ReconstructionProblem:
    net: Network
    x_star: np.ndarray
    y_star: np.ndarray
    basis: ConservationBasis = field(init=False, repr=False)

    def __post_init__(self) -> None:
        basis = conservation_basis(self.net)
        x_star = numerics.as_vector(self.x_star, "target log-quotients x*", self.net.n_reactions)
        if basis.m == 0:
            y_star = np.zeros(0)
        else:
            y_star = numerics.as_vector(self.y_star, "target totals y*", basis.m)
        object.__setattr__(self, "x_star", x_star)
        object.__setattr__(self, "y_star", y_star)
        object.__setattr__(self, "basis", basis)


@dataclass
class ReconstructionResult:
    c_star: np.ndarray
    alpha_star: np.ndarray
    iterations: int
    residual_totals: float
    residual_quotients: float
    grad_norm: float = 0.0
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "c_star": self.c_star.tolist(),
            "alpha_star": self.alpha_star.tolist(),
            "iterations": self.iterations,
            "residual_totals": self.residual_totals,
            "residual_quotients": self.residual_quotients,
        }


def base_point(net: Network, x_star) -> np.ndarray:
    """c0 = exp(u0) with u0 the minimum-norm solution of Sᵀu = x*."""
    x_star = numerics.as_vector(x_star, "target log-quotients x*", net.n_reactions)
    u0 = numerics.lstsq_min_norm(net.S.T, x_star)
    residual = float(np.linalg.norm(net.S.T @ u0 - x_star))
    if residual > ACHIEVABILITY_TOL * max(1.0, float(np.linalg.norm(x_star))):
        raise UnachievableQuotientError(_describe_violation(net, x_star, residual), residual)
    return np.exp(u0)


def objective(
    net: Network,
    c0,
    y_star,
    alpha,
    *,
    basis: Optional[ConservationBasis] = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """(f, ∇f, ∇²f) at α; the Hessian is Lᵀ·Diag(exp(Lα)∘c0)·L."""
    L = (basis or conservation_basis(net)).L
    alpha = np.asarray(alpha, dtype=float)
    y_star = np.asarray(y_star, dtype=float)
    if alpha.shape != (L.shape[1],) or y_star.shape != (L.shape[1],):
        raise ValidationError(
            f"alpha and y* must have {L.shape[1]} entries, got {alpha.shape} and {y_star.shape}"
        )
    with np.errstate(over="ignore", invalid="ignore"):
        c = np.asarray(c0, dtype=float) * np.exp(L @ alpha)
        value = float(np.sum(c) - y_star @ alpha)
        grad = L.T @ c - y_star
        hess = (L.T * c) @ L
    return value, grad, hess


def reconstruct_concentrations(
    problem: ReconstructionProblem,
    *,
    c0=None,
    alpha0=None,
    settings: SolverSettings = SolverSettings(),
) -> ReconstructionResult:
    """Unique c* > 0 with Sᵀ ln c* = x* and Lᵀc* = y*.

    ``c0`` may be any positive base point consistent with x*; by default
    the minimum-norm one is used. ``alpha0`` warm-starts the Newton iteration.
    Raises ``InfeasibleTotalsError`` when the iterates diverge or the
    iteration cap is hit, the signature of totals outside Lᵀℝⁿ₊.
    """
    net, L = problem.net, problem.basis.L
    if c0 is None:
        c0 = base_point(net, problem.x_star)
    else:
        c0 = _check_base_point(net, c0, problem.x_star)
    u0 = np.log(c0)

    if problem.basis.m == 0:
        return _result(net, L, c0, np.zeros(0), 0, problem)

    start = np.zeros(problem.basis.m) if alpha0 is None else numerics.as_vector(
        alpha0, "alpha0", problem.basis.m
    )
    # ∇f = Lᵀc − y*, so the gradient bound also enforces the relative totals bound.
    # Zero or boundary totals never meet it and run into the cap or the radius.
    y_norm = float(np.linalg.norm(problem.y_star))
    tol = min(settings.tol * max(1.0, y_norm), TOTALS_RTOL * y_norm)
    radius = settings.divergence_factor * max(1.0, float(np.max(np.abs(u0))))

    def fun(alpha: np.ndarray) -> tuple[float, np.ndarray, np.ndarray]:
        return objective(net, c0, problem.y_star, alpha, basis=problem.basis)

    outcome = numerics.newton_minimize(
        fun, start, tol=tol, max_iter=settings.max_iter, divergence_radius=radius,
    )
    if not outcome.converged:
        logger.warning(
            "reconstruction stopped after %d iterations: %s (|g|=%.3e)",
            outcome.iterations, outcome.message, outcome.grad_norm,
        )
        if outcome.diverged or outcome.iterations >= settings.max_iter:
            raise InfeasibleTotalsError(
                "reconstruct_concentrations",
                f"infeasible totals y*={problem.y_star.tolist()}: {outcome.message} "
                f"after {outcome.iterations} iterations",
            )
        raise ConvergenceError("reconstruct_concentrations", outcome.message)

    result = _result(net, L, c0, outcome.x, outcome.iterations, problem)
    result.grad_norm = outcome.grad_norm
    result.history = outcome.history
    logger.debug(
        "reconstruction converged in %d iterations, totals residual %.3e",
        result.iterations, result.residual_totals,
    )
    return result


def two_species_split(Q, C_total):
    """[A] = C/(1+Q) and [B] = C·Q/(1+Q) for A ⇌ B with total C."""
    Q = np.asarray(Q, dtype=float)
    C_total = np.asarray(C_total, dtype=float)
    if np.any(Q <= 0):
        raise ValidationError("reaction quotient must be positive")
    if np.any(C_total <= 0):
        raise ValidationError("total concentration must be positive")
    return C_total / (1.0 + Q), C_total * Q / (1.0 + Q)


def concentrations_along(
    net: Network,
    trajectory: Trajectory,
    totals,
    *,
    settings: SolverSettings = SolverSettings(),
) -> np.ndarray:
    """c(t) for every sample of a quotient trajectory at fixed conserved totals."""
    if trajectory.r != net.n_reactions:
        raise ValidationError(
            f"trajectory has {trajectory.r} reactions, network has {net.n_reactions}"
        )
    log_q = np.log(trajectory.Q)
    out = np.empty((trajectory.times.size, net.n_species))
    alpha = None
    for i, x_star in enumerate(log_q):
        problem = ReconstructionProblem(net, x_star, totals)
        result = reconstruct_concentrations(problem, alpha0=alpha, settings=settings)
        out[i] = result.c_star
        alpha = result.alpha_star
    return out


# ─── Utility functions ───────────────────────────────────────

def _check_base_point(net: Network, c0, x_star: np.ndarray) -> np.ndarray:
    c0 = numerics.as_vector(c0, "base point c0", net.n_species)
    if np.any(c0 <= 0):
        raise ValidationError("base point c0 must be strictly positive")
    residual = float(np.linalg.norm(net.S.T @ np.log(c0) - x_star))
    if residual > ACHIEVABILITY_TOL * max(1.0, float(np.linalg.norm(x_star))):
        raise ValidationError(f"base point c0 does not reproduce x* (residual {residual:.3e})")
    return c0


def _result(
    net: Network,
    L: np.ndarray,
    c0: np.ndarray,
    alpha: np.ndarray,
    iterations: int,
    problem: ReconstructionProblem,
) -> ReconstructionResult:
    c_star = np.exp(np.log(c0) + L @ alpha)
    if not np.all(np.isfinite(c_star)) or np.any(c_star <= 0):
        raise InfeasibleTotalsError("reconstruct_concentrations", "concentrations left (0, ∞)")
    residual_totals = float(np.linalg.norm(L.T @ c_star - problem.y_star))
    residual_quotients = float(np.linalg.norm(net.S.T @ np.log(c_star) - problem.x_star))
    return ReconstructionResult(c_star, alpha, iterations, residual_totals, residual_quotients)


def _describe_violation(net: Network, x_star: np.ndarray, residual: float) -> str:
    cycles = cycle_basis(net)
    if cycles.shape[1] == 0:
        return f"x* is not in Im(Sᵀ) (projection residual {residual:.3e})"
    violations = cycles.T @ x_star
    worst = int(np.argmax(np.abs(violations)))
    nu = cycles[:, worst]
    terms = " + ".join(
        f"{'' if math.isclose(c, 1.0) else f'{c:g}·'}{name}"
        for name, c in zip(net.reactions, nu)
        if c != 0
    )
    return (
        f"x* is not in Im(Sᵀ): cycle constraint Σ ν·x = 0 over ({terms}) "
        f"is off by {violations[worst]:.6g} (projection residual {residual:.3e})"
    )
