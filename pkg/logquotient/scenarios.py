"""Config-driven scenario presets and their derived outputs.

A scenario config has the layout ``{scenario, network, parameters, time, outputs}``.
Values missing from a config fall back to the embedded preset of the same name.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

import numpy as np

from . import numerics
from .dynamics import (
    ConstantControl,
    ControlInput,
    LogLinearSystem,
    SinusoidalControl,
    Trajectory,
    analytic_solution,
    driven_amplitude,
    eigenmodes,
    oscillation_parameters,
    richardson_check,
    simulate,
    single_controlled_solution,
    single_solution,
    steady_state,
    zero_control,
)
from .errors import ConfigError, ValidationError
from .massaction import MassActionAB, ab_quotient_exact, crossing_time, matched_rate, simulate_ab_quotient
from .network import Network, conservation_basis, load_network, network_from_dict
from .presets import scenario_preset
from .reconstruct import SolverSettings, concentrations_along, two_species_split
from .runs import Series, jsonable, trajectory_series

logger = logging.getLogger(__name__)

NEAR_EQUILIBRIUM_BAND = 0.02  # max relative deviation accepted near K_eq
CONVERGENCE_BAND = 1e-3

SCENARIO_OUTPUTS: dict[str, tuple[str, ...]] = {
    "mass_action_comparison": ("trajectories", "near_equilibrium", "concentrations"),
    "feedback": ("trajectories", "steady_state_curve", "concentrations"),
    "hexokinase": ("trajectories", "efficiency_curve", "concentrations"),
    "coupled_transport": ("trajectories", "modes", "concentrations"),
    "glycolysis": ("trajectories", "phase_portrait", "concentrations"),
}


@dataclass(frozen=True, eq=False)
class Scenario:
    name: str
    network: Network
    system: LogLinearSystem
    control: ControlInput
    x0: np.ndarray
    times: np.ndarray
    totals: np.ndarray
    parameters: dict
    outputs: tuple[str, ...]
    config: dict = field(repr=False)


@dataclass
class ScenarioResult:
    scenario: Scenario
    trajectory: Trajectory
    summary: dict
    series: dict[str, Series]


# ─── Configuration ───────────────────────────────────────────

def resolve_config(config: Mapping[str, Any]) -> dict:
    """Merge a scenario config over the preset it names."""
    if not isinstance(config, Mapping):
        raise ConfigError("scenario config must be a JSON object")
    name = config.get("scenario")
    if not isinstance(name, str):
        raise ConfigError("scenario config needs a 'scenario' name")
    merged = scenario_preset(name)
    for section in ("parameters", "time"):
        extra = config.get(section, {})
        if not isinstance(extra, Mapping):
            raise ConfigError(f"{section} must be a JSON object")
        merged[section].update(copy.deepcopy(dict(extra)))
    if "network" in config:
        merged["network"] = copy.deepcopy(config["network"])
    if "outputs" in config:
        outputs = config["outputs"]
        if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
            raise ConfigError("outputs must be an array of names")
        merged["outputs"] = list(outputs)
    return merged


def time_grid(t_end: float, samples: int) -> np.ndarray:
    """Evenly spaced grid on [0, t_end]; a zero horizon gives the single point t = 0."""
    if not math.isfinite(t_end) or t_end < 0:
        raise ConfigError(f"time.t_end must be a nonnegative number, got {t_end}")
    if samples < 1:
        raise ConfigError(f"time.samples must be >= 1, got {samples}")
    if t_end == 0 or samples == 1:
        return np.zeros(1)
    return np.linspace(0.0, t_end, samples)


def build_scenario(config: Mapping[str, Any]) -> Scenario:
    """Validate a scenario config into a ready-to-run Scenario."""
    merged = resolve_config(config)
    name = merged["scenario"]
    params = merged["parameters"]

    try:
        net_source = merged["network"]
        net = network_from_dict(net_source) if isinstance(net_source, Mapping) else load_network(net_source)
        times = time_grid(float(merged["time"]["t_end"]), int(merged["time"]["samples"]))
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{name}: invalid network or time section ({e})") from e

    unknown = set(merged["outputs"]) - set(SCENARIO_OUTPUTS[name])
    if unknown:
        raise ConfigError(
            f"{name}: unknown output(s) {', '.join(sorted(unknown))} "
            f"(available: {', '.join(SCENARIO_OUTPUTS[name])})"
        )

    try:
        system, control, x0 = _SYSTEM_BUILDERS[name](params)
    except ValidationError as e:
        raise ConfigError(f"{name}: {e}") from e

    if system.r != net.n_reactions:
        raise ConfigError(
            f"{name}: system has {system.r} reactions, network has {net.n_reactions}"
        )
    totals = _totals(net, params.get("C_total", 1.0), name)
    return Scenario(
        name, net, system, control, x0, times, totals, params,
        tuple(merged["outputs"]), merged,
    )


def _num(params: Mapping[str, Any], key: str, kind: Callable = float):
    try:
        value = kind(params[key])
    except KeyError:
        raise ConfigError(f"parameters.{key} is required") from None
    except (TypeError, ValueError):
        raise ConfigError(f"parameters.{key} must be a {kind.__name__}, got {params[key]!r}") from None
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"parameters.{key} must be finite")
    return value


def _numbers(params: Mapping[str, Any], key: str) -> np.ndarray:
    if key not in params:
        raise ConfigError(f"parameters.{key} is required")
    return numerics.as_vector(params[key], f"parameters.{key}")


def _totals(net: Network, value, name: str) -> np.ndarray:
    m = conservation_basis(net).m
    try:
        totals = np.broadcast_to(numerics.as_vector(value, "C_total"), (m,)).astype(float)
    except ValueError as e:
        raise ConfigError(f"{name}: C_total must be a number or {m} numbers ({e})") from e
    if np.any(totals <= 0):
        raise ConfigError(f"{name}: conserved totals must be positive, got {totals.tolist()}")
    return totals


def _log_deviation(Q0: float, K_eq: float) -> np.ndarray:
    if not Q0 > 0:
        raise ValidationError(f"Q0 must be positive, got {Q0}")
    return np.array([math.log(Q0 / K_eq)])


# ─── Systems per scenario ────────────────────────────────────

def _mass_action_system(p: Mapping[str, Any]):
    m = MassActionAB.from_keq(_num(p, "k_f"), _num(p, "K_eq"))
    Q0 = _numbers(p, "Q0")
    return LogLinearSystem.scalar(matched_rate(m), m.K_eq), zero_control(1), _log_deviation(Q0[0], m.K_eq)


def _feedback_system(p: Mapping[str, Any]):
    k, alpha = _num(p, "k"), _num(p, "alpha")
    if not k + alpha > 0:
        raise ValidationError(f"effective rate k + alpha must be positive, got {k + alpha}")
    K_eq = _num(p, "K_eq")
    control = ConstantControl([_num(p, "u")])
    return LogLinearSystem.scalar(k + alpha, K_eq), control, _log_deviation(_num(p, "Q0"), K_eq)


def _hexokinase_system(p: Mapping[str, Any]):
    ratio = _num(p, "ratio")
    if not ratio > 0:
        raise ValidationError(f"ATP/ADP ratio must be positive, got {ratio}")
    K_eq = _num(p, "K_eq")
    control = ConstantControl([_num(p, "k_atp") * math.log(ratio)])
    return LogLinearSystem.scalar(_num(p, "k"), K_eq), control, _log_deviation(_num(p, "Q0"), K_eq)


def _matrix_system(p: Mapping[str, Any]):
    system = LogLinearSystem(numerics.as_matrix(p.get("K"), "parameters.K", square=True), _numbers(p, "K_eq"))
    return system, numerics.as_vector(p.get("x0"), "parameters.x0", system.r)


def _transport_system(p: Mapping[str, Any]):
    system, x0 = _matrix_system(p)
    return system, zero_control(system.r), x0


def _glycolysis_system(p: Mapping[str, Any]):
    system, x0 = _matrix_system(p)
    u0 = _num(p, "u0")
    if u0 < 0:
        raise ValidationError(f"drive amplitude u0 must be nonnegative, got {u0}")
    if not bool(p.get("driven", True)):
        return system, zero_control(system.r), x0
    amplitude = np.zeros(system.r)
    amplitude[0] = u0
    return system, SinusoidalControl(amplitude, _num(p, "omega")), x0


_SYSTEM_BUILDERS: dict[str, Callable] = {
    "mass_action_comparison": _mass_action_system,
    "feedback": _feedback_system,
    "hexokinase": _hexokinase_system,
    "coupled_transport": _transport_system,
    "glycolysis": _glycolysis_system,
}


# ─── Runners ─────────────────────────────────────────────────

def run_scenario(
    config: Mapping[str, Any] | Scenario,
    *,
    settings: SolverSettings = SolverSettings(),
    dt_max: Optional[float] = None,
) -> ScenarioResult:
    scenario = config if isinstance(config, Scenario) else build_scenario(config)
    logger.info("running scenario %s on %d samples", scenario.name, scenario.times.size)
    result = _RUNNERS[scenario.name](scenario, settings, dt_max)
    result.series = {k: v for k, v in result.series.items() if k in scenario.outputs}
    result.summary = {"scenario": scenario.name, **jsonable(result.summary)}
    return result


def run_mass_action_comparison(
    scenario: Scenario, settings: SolverSettings = SolverSettings(), dt_max: Optional[float] = None,
) -> ScenarioResult:
    """Log-linear model at the matched rate against exact mass action for each Q0."""
    p, t = scenario.parameters, scenario.times
    m = MassActionAB.from_keq(_num(p, "k_f"), _num(p, "K_eq"))
    k, K_eq = matched_rate(m), m.K_eq
    band = _num(p, "near_band")
    C = float(scenario.totals[0])

    trajectory = simulate(scenario.system, scenario.x0, scenario.control, t, dt_max=dt_max)

    runs, columns, traj_cols, conc_cols = [], ["t"], [t], [t]
    for Q0 in _numbers(p, "Q0"):
        loglinear = single_solution(k, K_eq, Q0, t)
        mass = simulate_ab_quotient(m, Q0, t, dt_max=dt_max).Q[:, 0]
        level = math.sqrt(Q0 * K_eq)
        ll_cross = _crossing(Q0, K_eq, t, loglinear, level)
        ma_cross = _crossing(Q0, K_eq, t, mass, level)
        runs.append({
            "Q0": Q0,
            "final_loglinear": loglinear[-1],
            "final_massaction": mass[-1],
            "converged": bool(
                abs(loglinear[-1] - K_eq) <= CONVERGENCE_BAND * K_eq
                and abs(mass[-1] - K_eq) <= CONVERGENCE_BAND * K_eq
            ),
            "max_rel_deviation": float(np.max(np.abs(loglinear - mass) / mass)),
            "level": level,
            "crossing_loglinear": ll_cross,
            "crossing_massaction": ma_cross,
            "first_to_level": _first(ll_cross, ma_cross),
        })
        columns += [f"Q_loglinear[Q0={Q0:g}]", f"Q_massaction[Q0={Q0:g}]"]
        traj_cols += [loglinear, mass]
        A, B = two_species_split(loglinear, C)
        conc_cols += [A, B]

    near_cols, near_names, near_dev = [t], ["t"], 0.0
    for Q0 in (K_eq * (1.0 - band), K_eq * (1.0 + band)):
        loglinear = single_solution(k, K_eq, Q0, t)
        mass = ab_quotient_exact(m, Q0, t)
        near_dev = max(near_dev, float(np.max(np.abs(loglinear - mass) / mass)))
        near_names += [f"Q_loglinear[Q0={Q0:g}]", f"Q_massaction[Q0={Q0:g}]"]
        near_cols += [loglinear, mass]

    summary = {
        "k_f": m.k_f,
        "k_r": m.k_r,
        "K_eq": K_eq,
        "matched_rate": k,
        "runs": runs,
        "near_equilibrium": {
            "band": band,
            "max_rel_deviation": near_dev,
            "within_band": near_dev <= NEAR_EQUILIBRIUM_BAND,
        },
        "richardson_max_rel_change": richardson_check(
            scenario.system, scenario.x0, scenario.control, t, dt_max=dt_max
        ),
    }
    conc_names = ["t"] + [f"{s}[Q0={q:g}]" for q in _numbers(p, "Q0") for s in scenario.network.species]
    series = {
        "trajectories": Series(columns, np.column_stack(traj_cols)),
        "near_equilibrium": Series(near_names, np.column_stack(near_cols)),
        "concentrations": Series(conc_names, np.column_stack(conc_cols)),
    }
    return ScenarioResult(scenario, trajectory, summary, series)


def run_feedback(
    scenario: Scenario, settings: SolverSettings = SolverSettings(), dt_max: Optional[float] = None,
) -> ScenarioResult:
    """Scalar drive with feedback strength α: effective rate k + α."""
    p, t = scenario.parameters, scenario.times
    k, K_eq, u, Q0 = _num(p, "k"), _num(p, "K_eq"), _num(p, "u"), _num(p, "Q0")
    C = float(scenario.totals[0])
    alphas = _numbers(p, "alphas") if "alphas" in p else np.array([_num(p, "alpha")])
    if np.any(k + alphas <= 0):
        raise ConfigError("feedback: every k + alpha must be positive")

    trajectory = simulate(scenario.system, scenario.x0, scenario.control, t, dt_max=dt_max)

    sweep = p.get("drive_sweep", {"start": 0.0, "stop": 5.0, "num": 51})
    drives = np.linspace(_num(sweep, "start"), _num(sweep, "stop"), _num(sweep, "num", int))

    q_cols, b_cols, curve_cols, per_alpha = [t], [t], [drives], []
    for alpha in alphas:
        rate = k + alpha
        Q = single_controlled_solution(rate, K_eq, Q0, u, t)
        _, B = two_species_split(Q, C)
        Q_ss = K_eq * math.exp(u / rate)
        per_alpha.append({
            "alpha": alpha,
            "Q_ss": Q_ss,
            "B_ss": C * Q_ss / (1.0 + Q_ss),
            "B_final": B[-1],
            "sensitivity": Q_ss / rate,  # dQ_ss/du
        })
        q_cols.append(Q)
        b_cols.append(B)
        curve_cols.append(K_eq * np.exp(drives / rate))

    q_ss = np.array([row["Q_ss"] for row in per_alpha])
    _, B_primary = two_species_split(trajectory.Q[:, 0], C)
    summary = {
        "k": k,
        "K_eq": K_eq,
        "u": u,
        "alpha": _num(p, "alpha"),
        "C_total": C,
        "Q_ss": steady_state(scenario.system, scenario.control.constant_value).Q[0],
        "B_final": B_primary[-1],
        "alphas": per_alpha,
        "Q_ss_decreasing_in_alpha": bool(u > 0 and np.all(np.diff(q_ss[np.argsort(alphas)]) < 0)),
    }
    labels = [f"[alpha={a:g}]" for a in alphas]
    series = {
        "trajectories": Series(["t"] + [f"Q{lab}" for lab in labels], np.column_stack(q_cols)),
        "concentrations": Series(["t"] + [f"B{lab}" for lab in labels], np.column_stack(b_cols)),
        "steady_state_curve": Series(["u"] + [f"Q_ss{lab}" for lab in labels], np.column_stack(curve_cols)),
    }
    return ScenarioResult(scenario, trajectory, summary, series)


def run_hexokinase(
    scenario: Scenario, settings: SolverSettings = SolverSettings(), dt_max: Optional[float] = None,
) -> ScenarioResult:
    """Glucose ⇌ G6P driven by k_ATP·ln(ATP/ADP)."""
    p, t = scenario.parameters, scenario.times
    k, K_eq, k_atp, Q0 = _num(p, "k"), _num(p, "K_eq"), _num(p, "k_atp"), _num(p, "Q0")
    C = float(scenario.totals[0])

    trajectory = simulate(scenario.system, scenario.x0, scenario.control, t, dt_max=dt_max)
    Q_ss = float(steady_state(scenario.system, scenario.control.constant_value).Q[0])

    ratios = _numbers(p, "ratios") if "ratios" in p else np.array([_num(p, "ratio")])
    if np.any(ratios <= 0):
        raise ConfigError("hexokinase: ATP/ADP ratios must be positive")
    per_ratio, q_cols = [], [t]
    for ratio in ratios:
        u = k_atp * math.log(ratio)
        q_cols.append(single_controlled_solution(k, K_eq, Q0, u, t))
        q = K_eq * math.exp(u / k)
        per_ratio.append({
            "ratio": ratio,
            "Q_ss": q,
            "efficiency": q / (1.0 + q),
            "direction": _direction(q, K_eq),
        })

    sweep = p.get("ratio_sweep", {"log10_start": -2.0, "log10_stop": 2.0, "num": 81})
    sweep_ratios = np.logspace(
        _num(sweep, "log10_start"), _num(sweep, "log10_stop"), _num(sweep, "num", int)
    )
    sweep_q = K_eq * np.exp(k_atp * np.log(sweep_ratios) / k)
    efficiency = sweep_q / (1.0 + sweep_q)

    glucose, g6p = two_species_split(trajectory.Q[:, 0], C)
    summary = {
        "k": k,
        "K_eq": K_eq,
        "k_atp": k_atp,
        "ratio": _num(p, "ratio"),
        "Q_ss": Q_ss,
        "efficiency": Q_ss / (1.0 + Q_ss),
        "direction": _direction(Q_ss, K_eq),
        "ratios": per_ratio,
        "efficiency_monotone": bool(np.all(np.diff(efficiency) > 0)),
    }
    series = {
        "trajectories": Series(["t"] + [f"Q[ratio={r:g}]" for r in ratios], np.column_stack(q_cols)),
        "efficiency_curve": Series(
            ["atp_adp_ratio", "Q_ss", "efficiency"], np.column_stack([sweep_ratios, sweep_q, efficiency])
        ),
        "concentrations": Series(
            ["t", *scenario.network.species], np.column_stack([t, glucose, g6p])
        ),
    }
    return ScenarioResult(scenario, trajectory, summary, series)


def run_coupled_transport(
    scenario: Scenario, settings: SolverSettings = SolverSettings(), dt_max: Optional[float] = None,
) -> ScenarioResult:
    """Two coupled transporters with symmetric K; reports modes and Q₂ overshoot."""
    t = scenario.times
    trajectory = simulate(scenario.system, scenario.x0, scenario.control, t, dt_max=dt_max)
    decomposition = eigenmodes(scenario.system)
    z = np.real(decomposition.coordinates(trajectory.x))

    scan = scan_overshoot_x0(scenario.system, t)
    summary = {
        "eigenvalues": decomposition.eigenvalues,
        "modes": decomposition.modes,
        "timescales": decomposition.timescales,
        "x0": scenario.x0,
        "overshoot": detect_overshoot(trajectory.x[:, 1]),
        "x1_monotone": _is_monotone(trajectory.x[:, 0]),
        "final_x": trajectory.final_x,
        "first_overshoot_x0": scan,
    }
    conc = concentrations_along(scenario.network, trajectory, scenario.totals, settings=settings)
    series = {
        "trajectories": trajectory_series(trajectory),
        "modes": Series(["t"] + [f"z_{i + 1}" for i in range(z.shape[1])], np.column_stack([t, z])),
        "concentrations": Series(["t", *scenario.network.species], np.column_stack([t, conc])),
    }
    return ScenarioResult(scenario, trajectory, summary, series)


def run_glycolysis(
    scenario: Scenario, settings: SolverSettings = SolverSettings(), dt_max: Optional[float] = None,
) -> ScenarioResult:
    """Damped oscillator K with an optional sinusoidal drive on the first channel."""
    p, t = scenario.parameters, scenario.times
    system = scenario.system
    u0, omega = _num(p, "u0"), _num(p, "omega")
    driven = bool(p.get("driven", True))

    undriven = simulate(system, scenario.x0, zero_control(system.r), t, dt_max=dt_max)
    forced = simulate(system, scenario.x0, scenario.control, t, dt_max=dt_max) if driven else undriven
    trajectory = forced if driven else undriven

    amplitude = np.zeros(system.r)
    amplitude[0] = u0
    response = driven_amplitude(system, amplitude, omega)
    window = t >= t[-1] - _num(p, "amplitude_periods", int) * 2.0 * math.pi / omega
    simulated = 0.5 * (forced.x[window].max(axis=0) - forced.x[window].min(axis=0))

    x0_norm = float(np.linalg.norm(scenario.x0))
    summary = {
        "eigenvalues": eigenmodes(system).eigenvalues,
        "oscillations": [m._asdict() for m in oscillation_parameters(system)],
        "u0": u0,
        "omega": omega,
        "driven": driven,
        "undriven_final_norm": float(np.linalg.norm(undriven.final_x)),
        "spiral_converged": bool(
            np.linalg.norm(undriven.final_x) <= CONVERGENCE_BAND * max(x0_norm, 1e-300)
        ),
        "amplitude_simulated": simulated if driven else np.zeros(system.r),
        "amplitude_linear_response": response if driven else np.zeros(system.r),
    }
    conc = concentrations_along(scenario.network, trajectory, scenario.totals, settings=settings)
    series = {
        "trajectories": trajectory_series(trajectory),
        "phase_portrait": Series(
            ["t", "x_1_undriven", "x_2_undriven", "x_1_driven", "x_2_driven"],
            np.column_stack([t, undriven.x[:, :2], forced.x[:, :2]]),
        ),
        "concentrations": Series(["t", *scenario.network.species], np.column_stack([t, conc])),
    }
    return ScenarioResult(scenario, trajectory, summary, series)


_RUNNERS: dict[str, Callable[..., ScenarioResult]] = {
    "mass_action_comparison": run_mass_action_comparison,
    "feedback": run_feedback,
    "hexokinase": run_hexokinase,
    "coupled_transport": run_coupled_transport,
    "glycolysis": run_glycolysis,
}


# ─── Overshoot ───────────────────────────────────────────────

def detect_overshoot(values, rel_tol: float = 1e-9) -> bool:
    """True iff the series changes sign and then decays back toward zero."""
    values = np.asarray(values, dtype=float)
    scale = float(np.max(np.abs(values), initial=0.0))
    if scale == 0.0:
        return False
    significant = values[np.abs(values) > rel_tol * scale]
    if significant.size == 0:
        return False
    flips = np.nonzero(np.sign(significant) != np.sign(significant[0]))[0]
    if flips.size == 0:
        return False
    after = np.abs(significant[flips[0]:])
    peak = int(np.argmax(after))
    return bool(peak < after.size - 1 and after[-1] < after[peak])


def scan_overshoot_x0(
    system: LogLinearSystem,
    times,
    candidates: Optional[list] = None,
) -> Optional[np.ndarray]:
    """First initial state whose x₂ overshoots zero while x₁ stays monotone.

    Default candidates fix x₁ = 1 and step x₂ from −1 to 1 by 0.25, skipping 0.
    """
    if candidates is None:
        candidates = [np.array([1.0, x2]) for x2 in np.arange(-4, 5) * 0.25 if x2 != 0.0]
    for x0 in candidates:
        trajectory = analytic_solution(system, x0, times)
        if detect_overshoot(trajectory.x[:, 1]) and _is_monotone(trajectory.x[:, 0]):
            return np.asarray(x0, dtype=float)
    return None


# ─── Utility functions ───────────────────────────────────────

def _is_monotone(values) -> bool:
    d = np.diff(np.asarray(values, dtype=float))
    return bool(np.all(d <= 0) or np.all(d >= 0))


def _crossing(Q0: float, K_eq: float, t: np.ndarray, values: np.ndarray, level: float) -> Optional[float]:
    if Q0 == K_eq:
        return None
    return crossing_time(t, values, level)


def _first(ll: Optional[float], ma: Optional[float]) -> Optional[str]:
    if ll is None or ma is None or ll == ma:
        return None
    return "loglinear" if ll < ma else "massaction"


def _direction(Q: float, K_eq: float) -> str:
    if math.isclose(Q, K_eq, rel_tol=1e-12):
        return "equilibrium"
    return "forward" if Q > K_eq else "backward"
