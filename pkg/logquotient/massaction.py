"""Mass-action kinetics used as a reference for the log-linear model."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics
from .dynamics import Trajectory, default_dt_max
from .errors import NumericalError, ValidationError
from .network import Network, conservation_basis

logger = logging.getLogger(__name__)

CONSERVATION_TOL = 1e-8


# ─── A ⇌ B ───────────────────────────────────────────────────

@dataclass(frozen=True)
class MassActionAB:
    """A ⇌ B with forward rate k_f and reverse rate k_r (1/s)."""

    k_f: float
    k_r: float

    def __post_init__(self) -> None:
        if not (self.k_f > 0 and self.k_r > 0) or not math.isfinite(self.k_f + self.k_r):
            raise ValidationError(f"rate constants must be positive, got k_f={self.k_f}, k_r={self.k_r}")

    @classmethod
    def from_keq(cls, k_f: float, K_eq: float) -> MassActionAB:
        if not K_eq > 0:
            raise ValidationError(f"K_eq must be positive, got {K_eq}")
        return cls(k_f, k_f / K_eq)

    @property
    def K_eq(self) -> float:
        return self.k_f / self.k_r


def matched_rate(m: MassActionAB) -> float:
    """Log-linear rate k = k_r(1 + K_eq) with the same slope at equilibrium."""
    return m.k_r * (1.0 + m.K_eq)


def quotient_rate(m: MassActionAB, Q):
    """dQ/dt = k_r(1 + Q)(K_eq − Q)."""
    Q = np.asarray(Q, dtype=float)
    return m.k_r * (1.0 + Q) * (m.K_eq - Q)


def ab_quotient_exact(m: MassActionAB, Q0: float, t):
    """Closed-form Q(t).

    w = (Q − K_eq)/(Q + 1) decays as e^{−kt} with k = k_r(1 + K_eq),
    so Q = (K_eq + w)/(1 − w).
    """
    if not Q0 > 0:
        raise ValidationError(f"Q0 must be positive, got {Q0}")
    w = (Q0 - m.K_eq) / (Q0 + 1.0) * np.exp(-matched_rate(m) * np.asarray(t, dtype=float))
    Q = (m.K_eq + w) / (1.0 - w)
    return float(Q) if Q.ndim == 0 else Q


def simulate_ab_quotient(
    m: MassActionAB,
    Q0: float,
    times,
    *,
    dt_max: Optional[float] = None,
) -> Trajectory:
    """RK4 integration of the mass-action quotient equation."""
    if not Q0 > 0:
        raise ValidationError(f"Q0 must be positive, got {Q0}")
    grid = numerics.as_grid(times)
    Q = numerics.rk4(
        lambda t, q: quotient_rate(m, q),
        [Q0], grid, dt_max if dt_max is not None else default_dt_max(grid),
    )
    if np.any(Q <= 0):
        raise NumericalError("simulate_ab_quotient", "quotient left the positive axis")
    return Trajectory.from_log_deviation(grid, np.log(Q / m.K_eq), [m.K_eq])


def crossing_time(times, values, level: float) -> Optional[float]:
    """First time a sampled series reaches ``level``, linearly interpolated; None if never."""
    times = np.asarray(times, dtype=float)
    d = np.asarray(values, dtype=float) - level
    if d[0] == 0.0:
        return float(times[0])
    hits = np.nonzero(np.sign(d[1:]) != np.sign(d[0]))[0]
    if hits.size == 0:
        return None
    i = int(hits[0]) + 1
    frac = d[i - 1] / (d[i - 1] - d[i])
    return float(times[i - 1] + frac * (times[i] - times[i - 1]))


# ─── Generic networks ────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class MassActionRates:
    """Per-reaction forward and reverse rate constants."""

    k_forward: np.ndarray
    k_reverse: np.ndarray

    def __post_init__(self) -> None:
        kf = numerics.as_vector(self.k_forward, "forward rates")
        kr = numerics.as_vector(self.k_reverse, "reverse rates", kf.size)
        if np.any(kf <= 0) or np.any(kr <= 0):
            raise ValidationError("mass-action rate constants must be positive")
        object.__setattr__(self, "k_forward", kf)
        object.__setattr__(self, "k_reverse", kr)

    @classmethod
    def from_equilibrium(cls, K_eq, k_forward=1.0) -> MassActionRates:
        K_eq = numerics.as_vector(K_eq, "K_eq")
        if np.any(K_eq <= 0):
            raise ValidationError("equilibrium constants must be positive")
        kf = np.broadcast_to(np.asarray(k_forward, dtype=float), K_eq.shape).copy()
        return cls(kf, kf / K_eq)

    @property
    def K_eq(self) -> np.ndarray:
        return self.k_forward / self.k_reverse


@dataclass(frozen=True, eq=False)
class MassActionTrajectory:
    times: np.ndarray
    c: np.ndarray  # (samples, species)
    Q: np.ndarray  # (samples, reactions)
    conservation_drift: float  # max relative change of Lᵀc


def fluxes(net: Network, rates: MassActionRates, c) -> np.ndarray:
    """v_j = k_f,j·∏ c_i^{reactant_ij} − k_r,j·∏ c_i^{product_ij}."""
    c = np.asarray(c, dtype=float)[:, None]
    forward = np.prod(np.power(c, net.reactant_matrix), axis=0)
    backward = np.prod(np.power(c, net.product_matrix), axis=0)
    return rates.k_forward * forward - rates.k_reverse * backward


def simulate_mass_action_network(
    net: Network,
    rates: MassActionRates,
    c0,
    times,
    *,
    dt_max: Optional[float] = None,
) -> MassActionTrajectory:
    """RK4 on dc/dt = S·v(c) with reversible elementary fluxes."""
    if rates.k_forward.size != net.n_reactions:
        raise ValidationError(
            f"{rates.k_forward.size} rate pairs given for {net.n_reactions} reactions"
        )
    c0 = numerics.as_vector(c0, "initial concentrations", net.n_species)
    if np.any(c0 <= 0):
        raise ValidationError("initial concentrations must be strictly positive")
    grid = numerics.as_grid(times)

    S = net.S
    c = numerics.rk4(
        lambda t, conc: S @ fluxes(net, rates, conc),
        c0, grid, dt_max if dt_max is not None else default_dt_max(grid),
    )
    if np.any(c <= 0):
        raise NumericalError("simulate_mass_action_network", "a concentration reached zero")

    L = conservation_basis(net).L
    drift = 0.0
    if L.shape[1]:
        y0 = L.T @ c0
        drift = float(np.max(np.abs(c @ L - y0)) / max(float(np.max(np.abs(y0))), 1e-300))
        if drift > CONSERVATION_TOL:
            logger.warning("mass-action conservation drift %.3e exceeds %.0e", drift, CONSERVATION_TOL)

    Q = np.exp(np.log(c) @ S)
    return MassActionTrajectory(grid, c, Q, drift)
