"""Embedded default configs: reaction networks and scenario presets."""

from __future__ import annotations

import copy
import json
from pathlib import Path

from .errors import ConfigError


def _reaction(name: str, **stoich: float) -> dict:
    return {"name": name, "stoich": stoich}


NETWORK_PRESETS: dict[str, dict] = {
    "ab": {
        "species": ["A", "B"],
        "reactions": [_reaction("R1", A=-1, B=1)],
    },
    "abcd": {
        "species": ["A", "B", "C", "D"],
        "reactions": [_reaction("R1", A=-1, B=-1, C=1, D=1)],
    },
    "chain3": {
        "species": ["A", "B", "C"],
        "reactions": [_reaction("R1", A=-1, B=1), _reaction("R2", B=-1, C=1)],
    },
    "three_cycle": {
        "species": ["A", "B", "C"],
        "reactions": [
            _reaction("R1", A=-1, B=1),
            _reaction("R2", B=-1, C=1),
            _reaction("R3", C=-1, A=1),
        ],
    },
    "hexokinase": {
        "species": ["Glucose", "G6P"],
        "reactions": [_reaction("HK", Glucose=-1, G6P=1)],
    },
    "transport": {
        # Q1 = [Na_in]/[Na_out], Q2 = [H_out]/[H_in]
        "species": ["Na_out", "Na_in", "H_in", "H_out"],
        "reactions": [
            _reaction("Na_transport", Na_out=-1, Na_in=1),
            _reaction("H_pump", H_in=-1, H_out=1),
        ],
    },
    "glycolysis": {
        "species": ["F6P", "FBP", "Products"],
        "reactions": [
            _reaction("PFK", F6P=-1, FBP=1),
            _reaction("FBP_out", FBP=-1, Products=1),
        ],
    },
}


# Scenario layout: {scenario, network, parameters, time: {t_end, samples}, outputs}.
# Values the source model leaves open are marked as defaults chosen here.
SCENARIO_PRESETS: dict[str, dict] = {
    "mass_action_comparison": {
        "scenario": "mass_action_comparison",
        "network": "ab",
        "parameters": {
            "k_f": 1.0,
            "K_eq": 2.0,
            "Q0": [0.5, 1.0, 4.0, 8.0],
            "near_band": 0.1,
            "C_total": 1.0,
        },
        "time": {"t_end": 10.0, "samples": 500},
        "outputs": ["trajectories", "near_equilibrium", "concentrations"],
    },
    "feedback": {
        "scenario": "feedback",
        "network": "ab",
        # k, K_eq and C_total are not given by the source model; unit defaults.
        "parameters": {
            "k": 1.0,
            "K_eq": 1.0,
            "C_total": 1.0,
            "u": 3.0,
            "alpha": 0.0,
            "alphas": [0.0, 0.5, 1.0, 2.0, 4.0],
            "Q0": 1.0,
            "drive_sweep": {"start": 0.0, "stop": 5.0, "num": 51},
        },
        "time": {"t_end": 10.0, "samples": 500},
        "outputs": ["trajectories", "steady_state_curve", "concentrations"],
    },
    "hexokinase": {
        "scenario": "hexokinase",
        "network": "hexokinase",
        # k = 1 follows from Q_ss = 50 at ATP/ADP = 10 with k_ATP = 2.
        "parameters": {
            "k": 1.0,
            "K_eq": 0.5,
            "k_atp": 2.0,
            "ratio": 10.0,
            "ratios": [0.1, 1.0, 10.0],
            "Q0": 0.5,
            "C_total": 1.0,
            "ratio_sweep": {"log10_start": -2.0, "log10_stop": 2.0, "num": 81},
        },
        "time": {"t_end": 10.0, "samples": 500},
        "outputs": ["trajectories", "efficiency_curve", "concentrations"],
    },
    "coupled_transport": {
        "scenario": "coupled_transport",
        "network": "transport",
        # x0 is the first point of the overshoot scan grid (x1 = 1, x2 from -1 in steps of 0.25).
        "parameters": {
            "K": [[1.0, 0.5], [0.5, 2.0]],
            "K_eq": [1.0, 1.0],
            "x0": [1.0, 0.25],
            "C_total": [1.0, 1.0],
        },
        "time": {"t_end": 10.0, "samples": 500},
        "outputs": ["trajectories", "modes", "concentrations"],
    },
    "glycolysis": {
        "scenario": "glycolysis",
        "network": "glycolysis",
        # K_eq = 1 so that x and ln Q coincide; x0 and u0 are defaults chosen here.
        "parameters": {
            "K": [[0.5, -2.0], [2.0, 0.5]],
            "K_eq": [1.0, 1.0],
            "x0": [0.5, 0.0],
            "u0": 0.5,
            "omega": 2.0,
            "driven": True,
            "C_total": 1.0,
            "amplitude_periods": 2,
        },
        "time": {"t_end": 40.0, "samples": 2001},
        "outputs": ["trajectories", "phase_portrait", "concentrations"],
    },
}


def scenario_names() -> list[str]:
    return sorted(SCENARIO_PRESETS)


def scenario_preset(name: str) -> dict:
    """Deep copy of a scenario preset."""
    if name not in SCENARIO_PRESETS:
        raise ConfigError(f"unknown scenario: {name} (available: {', '.join(scenario_names())})")
    return copy.deepcopy(SCENARIO_PRESETS[name])


def load_config_file(path: str | Path) -> dict:
    """Read a JSON config file into a dict."""
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"config file not found: {config_path}")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{config_path}: invalid JSON ({e})") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{config_path}: top level must be a JSON object")
    return data
