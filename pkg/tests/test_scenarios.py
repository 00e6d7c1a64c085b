"""Scenario presets end to end: configs, summaries, series and the overshoot scan."""

from __future__ import annotations

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from logquotient.dynamics import LogLinearSystem, analytic_solution, simulate
from logquotient.errors import ConfigError
from logquotient.presets import SCENARIO_PRESETS, scenario_names
from logquotient.scenarios import (
    SCENARIO_OUTPUTS,
    build_scenario,
    detect_overshoot,
    resolve_config,
    run_scenario,
    scan_overshoot_x0,
    time_grid,
)

SHORT = {"t_end": 5.0, "samples": 51}


def _reals(values):
    return [v["real"] for v in values]


@pytest.fixture(scope="module")
def glycolysis():
    return run_scenario({"scenario": "glycolysis"})


# ─── Configuration ───────────────────────────────────────────

def test_every_preset_builds():
    assert scenario_names() == sorted(SCENARIO_OUTPUTS)
    for name in scenario_names():
        scenario = build_scenario({"scenario": name})
        assert scenario.system.r == scenario.network.n_reactions
        assert scenario.times[0] == 0.0
        assert scenario.outputs == SCENARIO_OUTPUTS[name]


def test_resolve_config_overrides_preset():
    merged = resolve_config({"scenario": "hexokinase", "parameters": {"ratio": 2.0}, "time": {"samples": 11}})
    assert merged["parameters"]["ratio"] == 2.0
    assert merged["parameters"]["K_eq"] == SCENARIO_PRESETS["hexokinase"]["parameters"]["K_eq"]
    assert merged["time"] == {"t_end": 10.0, "samples": 11}
    assert SCENARIO_PRESETS["hexokinase"]["parameters"]["ratio"] == 10.0


def test_time_grid():
    assert_allclose(time_grid(0.0, 500), [0.0])
    assert_allclose(time_grid(2.0, 1), [0.0])
    assert_allclose(time_grid(1.0, 5), [0.0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ConfigError):
        time_grid(-1.0, 5)
    with pytest.raises(ConfigError):
        time_grid(1.0, 0)


@pytest.mark.parametrize("config", [
    {"scenario": "nope"},
    {},
    {"scenario": "hexokinase", "outputs": ["bogus"]},
    {"scenario": "hexokinase", "parameters": {"C_total": -1.0}},
    {"scenario": "hexokinase", "parameters": {"ratio": -1.0}},
    {"scenario": "hexokinase", "parameters": {"k": "fast"}},
    {"scenario": "hexokinase", "parameters": [1, 2]},
    {"scenario": "hexokinase", "time": {"t_end": -1.0}},
    {"scenario": "hexokinase", "time": {"samples": "many"}},
    {"scenario": "feedback", "parameters": {"alpha": -2.0}},
    {"scenario": "coupled_transport", "network": "ab"},
    {"scenario": "coupled_transport", "parameters": {"C_total": [1.0, 1.0, 1.0]}},
    {"scenario": "glycolysis", "parameters": {"u0": -1.0}},
])
def test_invalid_configs(config):
    with pytest.raises(ConfigError):
        build_scenario(config)


# ─── Hexokinase ──────────────────────────────────────────────

def test_hexokinase_trapping():
    result = run_scenario({"scenario": "hexokinase"})
    summary = result.summary
    assert summary["scenario"] == "hexokinase"
    assert summary["Q_ss"] == pytest.approx(50.0, rel=1e-9)
    assert summary["efficiency"] == pytest.approx(50.0 / 51.0, rel=1e-9)
    assert summary["direction"] == "forward"
    assert [row["direction"] for row in summary["ratios"]] == ["backward", "equilibrium", "forward"]
    assert summary["efficiency_monotone"]
    assert result.trajectory.final_Q[0] == pytest.approx(50.0, rel=1e-3)
    assert set(result.series) == {"trajectories", "efficiency_curve", "concentrations"}


def test_hexokinase_ratio_override():
    summary = run_scenario({"scenario": "hexokinase", "parameters": {"ratio": 1.0}, "time": SHORT}).summary
    assert summary["Q_ss"] == pytest.approx(0.5)
    assert summary["direction"] == "equilibrium"


def test_zero_horizon_gives_single_sample():
    result = run_scenario({"scenario": "hexokinase", "time": {"t_end": 0.0}})
    assert result.trajectory.times.size == 1
    assert result.trajectory.final_Q[0] == pytest.approx(0.5)


# ─── Feedback ────────────────────────────────────────────────

def test_feedback_lowers_steady_state():
    summary = run_scenario({"scenario": "feedback", "time": SHORT}).summary
    assert summary["Q_ss_decreasing_in_alpha"]
    for row in summary["alphas"]:
        assert row["Q_ss"] == pytest.approx(math.exp(3.0 / (1.0 + row["alpha"])), rel=1e-12)
        assert row["sensitivity"] == pytest.approx(row["Q_ss"] / (1.0 + row["alpha"]))
    assert summary["Q_ss"] == pytest.approx(math.exp(3.0), rel=1e-12)


def test_feedback_alpha_changes_primary_system():
    summary = run_scenario({"scenario": "feedback", "parameters": {"alpha": 2.0}, "time": SHORT}).summary
    assert summary["Q_ss"] == pytest.approx(math.e, rel=1e-12)


# ─── Coupled transport ───────────────────────────────────────

def test_coupled_transport_modes_and_overshoot():
    result = run_scenario({"scenario": "coupled_transport", "time": {"samples": 101}})
    summary = result.summary
    assert_allclose(_reals(summary["eigenvalues"]), [1.5 - math.sqrt(0.5), 1.5 + math.sqrt(0.5)], rtol=1e-9)
    assert summary["overshoot"]
    assert summary["x1_monotone"]
    assert summary["first_overshoot_x0"] == [1.0, 0.25]
    conc = result.series["concentrations"].data
    assert_allclose(conc[:, 1] + conc[:, 2], 1.0, rtol=1e-9)
    assert_allclose(conc[:, 3] + conc[:, 4], 1.0, rtol=1e-9)


def test_overshoot_scan_without_coupling():
    sys = LogLinearSystem.diagonal([1.0, 2.0], [1.0, 1.0])
    assert scan_overshoot_x0(sys, np.linspace(0.0, 10.0, 101)) is None


def test_detect_overshoot():
    assert not detect_overshoot([1.0, 0.5, 0.25, 0.1])
    assert detect_overshoot([0.25, 0.0, -0.1, -0.05, -0.01])
    assert not detect_overshoot([0.0, 0.0])
    assert not detect_overshoot([0.3, 0.1, -0.1, -0.2, -0.3])


def test_detect_overshoot_ignores_roundoff_sign_flips():
    values = [1.0, 0.1, -1e-12, -1e-13]
    assert not detect_overshoot(values)
    assert detect_overshoot(values, rel_tol=0.0)


# ─── Glycolysis ──────────────────────────────────────────────

def test_glycolysis_spectrum(glycolysis):
    summary = glycolysis.summary
    (mode,) = summary["oscillations"]
    assert mode["period"] == pytest.approx(math.pi, rel=1e-9)
    assert mode["damping"] == pytest.approx(0.5, rel=1e-9)
    assert summary["spiral_converged"]


def test_glycolysis_amplitude_matches_linear_response(glycolysis):
    summary = glycolysis.summary
    assert_allclose(summary["amplitude_simulated"], summary["amplitude_linear_response"], rtol=1e-2)


def test_glycolysis_amplitude_doubles(glycolysis):
    doubled = run_scenario({"scenario": "glycolysis", "parameters": {"u0": 1.0}})
    ratio = np.asarray(doubled.summary["amplitude_simulated"]) / np.asarray(glycolysis.summary["amplitude_simulated"])
    assert_allclose(ratio, 2.0, rtol=1e-2)


def test_glycolysis_undriven():
    summary = run_scenario({"scenario": "glycolysis", "parameters": {"driven": False}, "time": SHORT}).summary
    assert not summary["driven"]
    assert summary["amplitude_simulated"] == [0.0, 0.0]


# ─── Mass-action comparison ──────────────────────────────────

def test_mass_action_comparison():
    summary = run_scenario({"scenario": "mass_action_comparison"}).summary
    assert summary["matched_rate"] == 1.5
    assert summary["near_equilibrium"]["within_band"]
    assert summary["richardson_max_rel_change"] < 1e-9

    runs = {row["Q0"]: row for row in summary["runs"]}
    assert all(row["converged"] for row in runs.values())
    from_eight = runs[8.0]
    assert from_eight["level"] == pytest.approx(4.0)
    assert from_eight["crossing_massaction"] == pytest.approx(math.log(5.0 / 3.0) / 1.5, abs=1e-3)
    assert from_eight["crossing_loglinear"] == pytest.approx(math.log(2.0) / 1.5, abs=1e-3)
    expected = "loglinear" if from_eight["crossing_loglinear"] < from_eight["crossing_massaction"] else "massaction"
    assert from_eight["first_to_level"] == expected


# ─── Shared properties ───────────────────────────────────────

@pytest.mark.parametrize("name", sorted(SCENARIO_PRESETS))
def test_closed_form_matches_simulation(name):
    scenario = build_scenario({"scenario": name, "time": {"t_end": 10.0, "samples": 101}})
    x0 = np.where(scenario.x0 == 0.0, 0.3, scenario.x0)
    exact = analytic_solution(scenario.system, x0, scenario.times)
    numeric = simulate(scenario.system, x0, None, scenario.times)
    assert_allclose(numeric.Q, exact.Q, rtol=1e-6)


@pytest.mark.parametrize("name", sorted(SCENARIO_PRESETS))
def test_totals_do_not_change_quotients(name):
    base_total = np.asarray(SCENARIO_PRESETS[name]["parameters"]["C_total"], dtype=float)
    small = run_scenario({"scenario": name, "time": SHORT})
    large = run_scenario({
        "scenario": name,
        "time": SHORT,
        "parameters": {"C_total": (10.0 * base_total).tolist()},
    })
    assert_allclose(large.trajectory.Q, small.trajectory.Q, rtol=1e-10)
    assert_allclose(large.series["trajectories"].data, small.series["trajectories"].data, rtol=1e-10)
    small_conc = small.series["concentrations"].data
    large_conc = large.series["concentrations"].data
    assert_allclose(large_conc[:, 1:], 10.0 * small_conc[:, 1:], rtol=1e-8)


def test_outputs_filter_series():
    result = run_scenario({"scenario": "hexokinase", "time": SHORT, "outputs": ["trajectories"]})
    assert set(result.series) == {"trajectories"}
