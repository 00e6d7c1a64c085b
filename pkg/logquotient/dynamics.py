"""Log-linear quotient dynamics.

The state is the log-deviation x = ln(Q/K_eq) and evolves linearly,
dx/dt = -Kx + u(t). This module holds the closed forms, the RK4
simulation, eigenmode and steady-state analysis and the Gibbs views.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Mapping, NamedTuple, Optional

import numpy as np
import scipy.linalg

from . import numerics
from .errors import ConfigError, NumericalError, SingularMatrixError, ValidationError

logger = logging.getLogger(__name__)

GAS_CONSTANT = 8.314462618  # J/(mol·K)
STANDARD_TEMPERATURE = 298.15  # K

DEFAULT_SAMPLES = 500
DT_CAP = 1e-3  # s


# ─── System ──────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class LogLinearSystem:
    """Relaxation rate matrix K (1/s) and equilibrium constants K_eq."""

    K: np.ndarray
    K_eq: np.ndarray

    def __post_init__(self) -> None:
        K = numerics.as_matrix(self.K, "relaxation matrix K", square=True)
        K_eq = numerics.as_vector(self.K_eq, "K_eq", K.shape[0])
        if np.any(K_eq <= 0):
            raise ValidationError("equilibrium constants must be strictly positive")
        K.setflags(write=False)
        K_eq.setflags(write=False)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "K_eq", K_eq)

    @classmethod
    def scalar(cls, k: float, K_eq: float) -> LogLinearSystem:
        return cls(np.array([[float(k)]]), np.array([float(K_eq)]))

    @classmethod
    def diagonal(cls, rates, K_eq) -> LogLinearSystem:
        return cls(np.diag(numerics.as_vector(rates, "rates")), K_eq)

    @property
    def r(self) -> int:
        return int(self.K.shape[0])

    @property
    def is_stable(self) -> bool:
        """All eigenvalues of K have positive real part."""
        return spectral_abscissa(self) > 0.0

    def log_deviation(self, Q) -> np.ndarray:
        Q = numerics.as_vector(Q, "reaction quotients", self.r)
        if np.any(Q <= 0):
            raise ValidationError("reaction quotients must be strictly positive")
        return np.log(Q / self.K_eq)

    def quotients(self, x) -> np.ndarray:
        return self.K_eq * np.exp(np.asarray(x, dtype=float))


# ─── Control inputs ──────────────────────────────────────────

class ControlInput(ABC):
    """Drive vector u(t) in 1/s."""

    dim: int

    @abstractmethod
    def __call__(self, t: float) -> np.ndarray:
        ...

    @property
    def constant_value(self) -> Optional[np.ndarray]:
        """The drive when it does not depend on time, else None."""
        return None

    @abstractmethod
    def to_dict(self) -> dict:
        ...


@dataclass(frozen=True, eq=False)
class ConstantControl(ControlInput):
    u: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "u", numerics.as_vector(self.u, "control u"))

    @property
    def dim(self) -> int:
        return int(self.u.size)

    def __call__(self, t: float) -> np.ndarray:
        return self.u

    @property
    def constant_value(self) -> np.ndarray:
        return self.u

    def to_dict(self) -> dict:
        return {"type": "constant", "u": self.u.tolist()}


@dataclass(frozen=True, eq=False)
class SinusoidalControl(ControlInput):
    """u_i(t) = amplitude_i · sin(ω t + phase_i)."""

    amplitude: np.ndarray
    omega: float
    phase: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        amplitude = numerics.as_vector(self.amplitude, "control amplitude")
        phase = (
            np.zeros_like(amplitude)
            if self.phase is None
            else numerics.as_vector(self.phase, "control phase", amplitude.size)
        )
        if not math.isfinite(self.omega):
            raise ValidationError("control frequency must be finite")
        object.__setattr__(self, "amplitude", amplitude)
        object.__setattr__(self, "phase", phase)
        object.__setattr__(self, "omega", float(self.omega))

    @property
    def dim(self) -> int:
        return int(self.amplitude.size)

    def __call__(self, t: float) -> np.ndarray:
        return self.amplitude * np.sin(self.omega * t + self.phase)

    def to_dict(self) -> dict:
        return {
            "type": "sinusoidal",
            "amplitude": self.amplitude.tolist(),
            "omega": self.omega,
            "phase": self.phase.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ControlSegment:
    start: float
    end: float
    u: np.ndarray


@dataclass(frozen=True, eq=False)
class PiecewiseControl(ControlInput):
    """Constant drive on [start, end) segments, zero outside them."""

    segments: tuple[ControlSegment, ...]

    def __post_init__(self) -> None:
        segments = tuple(self.segments)
        if not segments:
            raise ValidationError("piecewise control needs at least one segment")
        cleaned = []
        for seg in segments:
            if not (math.isfinite(seg.start) and math.isfinite(seg.end)) or seg.end <= seg.start:
                raise ValidationError(f"invalid control segment [{seg.start}, {seg.end})")
            cleaned.append(ControlSegment(float(seg.start), float(seg.end),
                                          numerics.as_vector(seg.u, "segment drive")))
        dims = {seg.u.size for seg in cleaned}
        if len(dims) != 1:
            raise ValidationError("control segments have inconsistent dimensions")
        for prev, nxt in zip(cleaned, cleaned[1:]):
            if nxt.start < prev.end:
                raise ValidationError("control segments must be ordered and non-overlapping")
        object.__setattr__(self, "segments", tuple(cleaned))

    @property
    def dim(self) -> int:
        return int(self.segments[0].u.size)

    def __call__(self, t: float) -> np.ndarray:
        for seg in self.segments:
            if seg.start <= t < seg.end:
                return seg.u
        return np.zeros(self.dim)

    def to_dict(self) -> dict:
        return {
            "type": "piecewise",
            "segments": [
                {"start": s.start, "end": s.end, "u": s.u.tolist()} for s in self.segments
            ],
        }


def zero_control(r: int) -> ConstantControl:
    return ConstantControl(np.zeros(r))


def energy_drive(k_u, delta_E, R: float = GAS_CONSTANT, T: float = STANDARD_TEMPERATURE) -> ConstantControl:
    """Drive from an external energy gradient: u = k_u·ΔE/(RT)."""
    if not T > 0 or not R > 0:
        raise ValidationError("gas constant and temperature must be positive")
    k_u = numerics.as_vector(k_u, "coupling rates k_u")
    delta_E = numerics.as_vector(delta_E, "energy gradients ΔE", k_u.size)
    return ConstantControl(k_u * delta_E / (R * T))


def control_from_dict(data: Optional[Mapping[str, Any]], r: int) -> ControlInput:
    """Parse a control object from config; a missing control means zero drive."""
    if data is None:
        return zero_control(r)
    if not isinstance(data, Mapping):
        raise ConfigError("control must be a JSON object")
    kind = data.get("type", "constant")
    try:
        if kind == "constant":
            control: ControlInput = ConstantControl(data.get("u", np.zeros(r)))
        elif kind == "sinusoidal":
            control = SinusoidalControl(data["amplitude"], float(data["omega"]), data.get("phase"))
        elif kind == "piecewise":
            control = PiecewiseControl(tuple(
                ControlSegment(float(s["start"]), float(s["end"]), np.asarray(s["u"], dtype=float))
                for s in data["segments"]
            ))
        elif kind == "energy":
            control = energy_drive(
                data["k_u"], data["delta_E"],
                float(data.get("R", GAS_CONSTANT)), float(data.get("T", STANDARD_TEMPERATURE)),
            )
        else:
            raise ConfigError(f"unknown control type: {kind}")
    except KeyError as e:
        raise ConfigError(f"control.{e.args[0]} is required for {kind} control") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid {kind} control: {e}") from e
    if control.dim != r:
        raise ConfigError(f"control has {control.dim} channels, system has {r} reactions")
    return control


# ─── Trajectories ────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of x and Q = K_eq ∘ exp(x) on a strictly increasing grid."""

    times: np.ndarray
    x: np.ndarray
    Q: np.ndarray
    K_eq: np.ndarray

    @classmethod
    def from_log_deviation(cls, times, x, K_eq) -> Trajectory:
        times = numerics.as_grid(times)
        x = np.asarray(x, dtype=float).reshape(times.size, -1)
        K_eq = np.asarray(K_eq, dtype=float)
        if not np.all(np.isfinite(x)):
            raise NumericalError("trajectory", "log-deviation samples are not finite")
        with np.errstate(over="ignore", under="ignore"):
            Q = K_eq * np.exp(x)
        if not np.all(np.isfinite(Q)) or np.any(Q <= 0):
            raise NumericalError("trajectory", "reaction quotient underflowed or overflowed")
        return cls(times, x, Q, K_eq)

    @property
    def r(self) -> int:
        return int(self.x.shape[1])

    @property
    def final_x(self) -> np.ndarray:
        return self.x[-1]

    @property
    def final_Q(self) -> np.ndarray:
        return self.Q[-1]

    def gibbs(self, R: float = GAS_CONSTANT, T: float = STANDARD_TEMPERATURE) -> np.ndarray:
        return gibbs_deviation(self.x, R, T)


# ─── Scalar closed forms ─────────────────────────────────────

def _check_scalar_inputs(k: float, K_eq: float, Q0: float) -> None:
    if not k > 0:
        raise ValidationError(f"relaxation rate must be positive, got {k}")
    if not K_eq > 0:
        raise ValidationError(f"K_eq must be positive, got {K_eq}")
    if not Q0 > 0:
        raise ValidationError(f"Q0 must be positive, got {Q0}")


def single_solution(k: float, K_eq: float, Q0: float, t):
    """Q(t) = K_eq·(Q0/K_eq)^{exp(-kt)} for d ln Q/dt = -k ln(Q/K_eq)."""
    return single_controlled_solution(k, K_eq, Q0, 0.0, t)


def single_controlled_solution(k: float, K_eq: float, Q0: float, u: float, t):
    """Q(t) = K_eq·exp{[ln(Q0/K_eq) − u/k]·e^{−kt} + u/k} for constant drive u."""
    _check_scalar_inputs(k, K_eq, Q0)
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise ValidationError("time must be nonnegative")
    x0 = math.log(Q0 / K_eq)
    shift = u / k
    Q = K_eq * np.exp((x0 - shift) * np.exp(-k * times) + shift)
    return float(Q) if Q.ndim == 0 else Q


def relaxation_fraction(k: float, t):
    """Fraction of the initial log-distance to equilibrium covered after time t."""
    return 1.0 - np.exp(-k * np.asarray(t, dtype=float))


# ─── Vector solutions ────────────────────────────────────────

def analytic_solution(sys: LogLinearSystem, x0, times) -> Trajectory:
    """x(t) = e^{−K(t−t₀)}x0 via the matrix exponential; x0 is the state at the first grid time."""
    x0 = numerics.as_vector(x0, "x0", sys.r)
    grid = numerics.as_grid(times)
    x = np.empty((grid.size, sys.r))
    for i, t in enumerate(grid):
        x[i] = numerics.expm(-sys.K * (t - grid[0])) @ x0
    return Trajectory.from_log_deviation(grid, x, sys.K_eq)


def affine_solution(sys: LogLinearSystem, x0, u, times) -> Trajectory:
    """Constant-drive closed form x(t) = e^{−Kt}(x0 − K⁻¹u) + K⁻¹u."""
    x0 = numerics.as_vector(x0, "x0", sys.r)
    x_ss = numerics.solve(sys.K, numerics.as_vector(u, "u", sys.r), operation="affine_solution")
    grid = numerics.as_grid(times)
    x = np.empty((grid.size, sys.r))
    for i, t in enumerate(grid):
        x[i] = numerics.expm(-sys.K * (t - grid[0])) @ (x0 - x_ss) + x_ss
    return Trajectory.from_log_deviation(grid, x, sys.K_eq)


def default_dt_max(times: np.ndarray, cap: float = DT_CAP) -> float:
    span = float(times[-1] - times[0])
    return min(1e-3 * span, cap) if span > 0 else cap


def simulate(
    sys: LogLinearSystem,
    x0,
    control: Optional[ControlInput],
    times,
    *,
    dt_max: Optional[float] = None,
) -> Trajectory:
    """Integrate dx/dt = −Kx + u(t) with fixed-step RK4.

    The internal step defaults to 1e-3 of the horizon, capped at 1e-3 s.
    """
    x0 = numerics.as_vector(x0, "x0", sys.r)
    grid = numerics.as_grid(times)
    control = control or zero_control(sys.r)
    if control.dim != sys.r:
        raise ValidationError(f"control has {control.dim} channels, system has {sys.r} reactions")

    if not sys.is_stable:
        logger.warning(
            "simulating K with non-positive spectral abscissa %.4g; trajectories may grow",
            spectral_abscissa(sys),
        )
    if not _is_normal(sys.K):
        logger.debug("K is non-normal: transient growth may precede decay")

    K = sys.K

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        return -K @ x + control(t)

    step = dt_max if dt_max is not None else default_dt_max(grid)
    x = numerics.rk4(rhs, x0, grid, step)
    return Trajectory.from_log_deviation(grid, x, sys.K_eq)


def richardson_check(
    sys: LogLinearSystem,
    x0,
    control: Optional[ControlInput],
    times,
    *,
    dt_max: Optional[float] = None,
) -> float:
    """Largest relative change in Q samples when the RK4 step is halved."""
    grid = numerics.as_grid(times)
    step = dt_max if dt_max is not None else default_dt_max(grid)
    coarse = simulate(sys, x0, control, grid, dt_max=step)
    fine = simulate(sys, x0, control, grid, dt_max=step / 2)
    return float(np.max(np.abs(coarse.Q - fine.Q) / np.abs(fine.Q)))


# ─── Steady state and spectrum ───────────────────────────────

class SteadyState(NamedTuple):
    x: np.ndarray
    Q: np.ndarray


def steady_state(sys: LogLinearSystem, u) -> SteadyState:
    """x_ss = K⁻¹u and Q_ss = K_eq ∘ exp(x_ss)."""
    u = numerics.as_vector(u, "u", sys.r)
    x_ss = numerics.solve(sys.K, u, operation="steady_state")
    return SteadyState(x_ss, sys.quotients(x_ss))


@dataclass(frozen=True, eq=False)
class EigenmodeDecomposition:
    """Eigenvalues of K and the matching modes (columns).

    For symmetric K the modes are real and orthonormal, and mode
    coordinates are z = Vᵀx. Otherwise z = V⁻¹x.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    symmetric: bool

    def coordinates(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.symmetric:
            return x @ self.modes if x.ndim == 2 else self.modes.T @ x
        if x.ndim == 2:
            return np.linalg.solve(self.modes, x.T).T
        return np.linalg.solve(self.modes, x)

    def evolve(self, z0, t: float) -> np.ndarray:
        """Uncontrolled mode coordinates at time t: z_i(0)·e^{−λ_i t}."""
        decay = np.exp(-self.eigenvalues * t)
        return np.asarray(z0) * (decay.real if self.symmetric else decay)

    def state(self, z) -> np.ndarray:
        x = self.modes @ np.asarray(z)
        return x if self.symmetric else np.real_if_close(x, tol=1000)

    @property
    def timescales(self) -> np.ndarray:
        """1/Re λ per mode (inf for a zero real part)."""
        with np.errstate(divide="ignore"):
            return 1.0 / self.eigenvalues.real


class OscillationMode(NamedTuple):
    damping: float  # 1/s
    frequency: float  # rad/s
    period: float  # s


def eigenmodes(sys: LogLinearSystem) -> EigenmodeDecomposition:
    symmetric = numerics.is_symmetric(sys.K)
    w, V = numerics.eig(sys.K, symmetric=symmetric)
    return EigenmodeDecomposition(w, V, symmetric)


def spectral_abscissa(sys: LogLinearSystem) -> float:
    """Smallest real part of the spectrum of K; it sets the convergence rate."""
    w = scipy.linalg.eigvals(sys.K)
    return float(np.min(w.real))


def timescales(sys: LogLinearSystem) -> np.ndarray:
    return eigenmodes(sys).timescales


def oscillation_parameters(sys: LogLinearSystem) -> list[OscillationMode]:
    """(a, ω, 2π/ω) for each complex pair a ± ωi; empty for a real spectrum."""
    w = eigenmodes(sys).eigenvalues
    scale = max(1.0, float(np.max(np.abs(w))))
    modes = []
    for lam in w:
        if lam.imag > 1e-12 * scale:
            omega = float(lam.imag)
            modes.append(OscillationMode(float(lam.real), omega, 2.0 * math.pi / omega))
    return modes


def driven_amplitude(sys: LogLinearSystem, amplitude, omega: float, phase=None) -> np.ndarray:
    """Per-channel amplitude of the periodic response to u = amplitude·sin(ωt + phase).

    Solves (iωI + K)X = amplitude·e^{i·phase} and returns |X|.
    """
    amplitude = numerics.as_vector(amplitude, "drive amplitude", sys.r)
    phase = np.zeros(sys.r) if phase is None else numerics.as_vector(phase, "drive phase", sys.r)
    A = 1j * omega * np.eye(sys.r) + sys.K
    try:
        X = scipy.linalg.solve(A, amplitude * np.exp(1j * phase))
    except np.linalg.LinAlgError:
        raise SingularMatrixError("driven_amplitude", float(np.linalg.cond(A))) from None
    return np.abs(X)


# ─── Gibbs energy ────────────────────────────────────────────

def gibbs_deviation(x, R: float = GAS_CONSTANT, T: float = STANDARD_TEMPERATURE) -> np.ndarray:
    """ΔG = RT·ln(Q/K_eq) in J/mol."""
    if not T > 0:
        raise ValidationError(f"temperature must be positive, got {T}")
    return R * T * np.asarray(x, dtype=float)


def standard_gibbs(K_eq, R: float = GAS_CONSTANT, T: float = STANDARD_TEMPERATURE) -> np.ndarray:
    """ΔG° = −RT·ln K_eq."""
    if not T > 0:
        raise ValidationError(f"temperature must be positive, got {T}")
    K_eq = np.asarray(K_eq, dtype=float)
    if np.any(K_eq <= 0):
        raise ValidationError("equilibrium constants must be strictly positive")
    return -R * T * np.log(K_eq)


def equilibrium_constant(dG0, R: float = GAS_CONSTANT, T: float = STANDARD_TEMPERATURE) -> np.ndarray:
    if not T > 0:
        raise ValidationError(f"temperature must be positive, got {T}")
    return np.exp(-np.asarray(dG0, dtype=float) / (R * T))


def _is_normal(K: np.ndarray) -> bool:
    scale = max(1.0, float(np.linalg.norm(K)) ** 2)
    return bool(np.allclose(K @ K.T, K.T @ K, rtol=0.0, atol=1e-12 * scale))
