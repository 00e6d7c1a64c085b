"""Concentration reconstruction from log-quotients and conserved totals."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from logquotient.dynamics import LogLinearSystem, analytic_solution
from logquotient.errors import InfeasibleTotalsError, UnachievableQuotientError, ValidationError
from logquotient.network import build_network, conservation_basis
from logquotient.reconstruct import (
    ReconstructionProblem,
    base_point,
    concentrations_along,
    objective,
    reconstruct_concentrations,
    two_species_split,
)

CONSISTENT_CYCLE_X = [math.log(2.0), math.log(3.0), -math.log(6.0)]


@pytest.mark.parametrize("Q, C", [(2.0, 3.0), (0.01, 1.0), (50.0, 1.0), (1.0, 10.0)])
def test_ab_matches_closed_form(ab, Q, C):
    result = reconstruct_concentrations(ReconstructionProblem(ab, [math.log(Q)], [C]))
    A, B = two_species_split(Q, C)
    assert_allclose(result.c_star, [A, B], rtol=1e-10)


def test_two_species_split_validation():
    with pytest.raises(ValidationError):
        two_species_split(0.0, 1.0)
    with pytest.raises(ValidationError):
        two_species_split(1.0, -1.0)


def test_three_cycle_reconstruction(three_cycle):
    result = reconstruct_concentrations(ReconstructionProblem(three_cycle, CONSISTENT_CYCLE_X, [6.0]))
    c = result.c_star
    assert c.sum() == pytest.approx(6.0, rel=1e-10)
    assert_allclose(three_cycle.log_quotients(c), CONSISTENT_CYCLE_X, atol=1e-10)
    assert result.residual_totals < 1e-9
    assert result.residual_quotients < 1e-9


def test_random_roundtrip(random_instances):
    for net, c in random_instances:
        L = conservation_basis(net).L
        problem = ReconstructionProblem(net, net.S.T @ np.log(c), L.T @ c)
        result = reconstruct_concentrations(problem)
        assert_allclose(result.c_star, c, rtol=1e-8)
        assert result.iterations <= 30


def test_result_does_not_depend_on_base_point(ab):
    problem = ReconstructionProblem(ab, [math.log(2.0)], [3.0])
    default = reconstruct_concentrations(problem)
    shifted = reconstruct_concentrations(problem, c0=[5.0, 10.0])
    assert_allclose(shifted.c_star, default.c_star, rtol=1e-10)


def test_inconsistent_base_point_rejected(ab):
    problem = ReconstructionProblem(ab, [math.log(2.0)], [3.0])
    with pytest.raises(ValidationError):
        reconstruct_concentrations(problem, c0=[1.0, 1.0])


def test_unachievable_names_the_cycle(three_cycle):
    x = [math.log(2.0), math.log(3.0), 0.0]
    with pytest.raises(UnachievableQuotientError, match="R1") as exc:
        base_point(three_cycle, x)
    assert exc.value.residual > 0


def test_infeasible_totals_diverge(ab, caplog):
    problem = ReconstructionProblem(ab, [math.log(2.0)], [-1.0])
    with caplog.at_level(logging.WARNING, logger="logquotient.reconstruct"):
        with pytest.raises(InfeasibleTotalsError):
            reconstruct_concentrations(problem)
    assert "reconstruction stopped" in caplog.text


def test_zero_totals_are_infeasible(ab):
    problem = ReconstructionProblem(ab, [math.log(2.0)], [0.0])
    with pytest.raises(InfeasibleTotalsError):
        reconstruct_concentrations(problem)


@pytest.mark.parametrize("C", [1e-12, 1e-6, 1e6])
def test_totals_match_at_any_scale(ab, C):
    result = reconstruct_concentrations(ReconstructionProblem(ab, [math.log(2.0)], [C]))
    assert result.c_star.sum() == pytest.approx(C, rel=1e-8)
    assert_allclose(result.c_star, two_species_split(2.0, C), rtol=1e-8)


def test_newton_history_decreases(transport):
    problem = ReconstructionProblem(transport, [0.5, -0.2], [3.0, 0.4])
    history = reconstruct_concentrations(problem).history
    assert len(history) > 2
    for before, after in zip(history, history[1:]):
        # steps at the round-off floor may leave f unchanged
        assert after < before or after - before <= 64 * np.finfo(float).eps * max(1.0, abs(before))


def test_kernel_moves_keep_quotients(random_instances, rng):
    for net, c in random_instances:
        x_star = net.S.T @ np.log(c)
        L = conservation_basis(net).L
        u0 = np.log(base_point(net, x_star))
        for _ in range(3):
            alpha = rng.normal(0.0, 2.0, size=L.shape[1])
            assert_allclose(net.S.T @ (u0 + L @ alpha), x_star, rtol=0, atol=1e-10)


def test_no_conservation_law_uses_base_point():
    net = build_network(["A"], [("source", {"A": 1})])
    result = reconstruct_concentrations(ReconstructionProblem(net, [math.log(2.0)], []))
    assert result.iterations == 0
    assert result.c_star[0] == pytest.approx(2.0)


def test_problem_checks_sizes(three_cycle):
    with pytest.raises(ValidationError):
        ReconstructionProblem(three_cycle, [0.0, 0.0], [1.0])
    with pytest.raises(ValidationError):
        ReconstructionProblem(three_cycle, [0.0, 0.0, 0.0], [1.0, 2.0])


def test_objective_derivatives_match_finite_differences(transport, rng):
    c0 = np.exp(rng.normal(size=4))
    y = np.array([2.0, 0.7])
    alpha = np.array([0.3, -0.4])
    f, g, H = objective(transport, c0, y, alpha)

    h = 1e-6
    g_fd = np.empty(2)
    H_fd = np.empty((2, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        f_plus, g_plus, _ = objective(transport, c0, y, alpha + e)
        f_minus, g_minus, _ = objective(transport, c0, y, alpha - e)
        g_fd[i] = (f_plus - f_minus) / (2 * h)
        H_fd[:, i] = (g_plus - g_minus) / (2 * h)
    assert_allclose(g, g_fd, rtol=1e-6, atol=1e-8)
    assert_allclose(H, H_fd, rtol=1e-5, atol=1e-8)


def test_objective_rejects_wrong_shapes(ab):
    with pytest.raises(ValidationError):
        objective(ab, [1.0, 1.0], [1.0], [0.0, 0.0])


def test_concentrations_along_trajectory(ab):
    sys = LogLinearSystem.scalar(1.5, 2.0)
    trajectory = analytic_solution(sys, [math.log(4.0)], np.linspace(0.0, 3.0, 31))
    c = concentrations_along(ab, trajectory, [2.0])
    A, B = two_species_split(trajectory.Q[:, 0], 2.0)
    assert_allclose(c, np.column_stack([A, B]), rtol=1e-9)


def test_concentrations_scale_with_totals(transport):
    sys = LogLinearSystem([[1.0, 0.5], [0.5, 2.0]], [1.0, 1.0])
    trajectory = analytic_solution(sys, [1.0, 0.25], np.linspace(0.0, 5.0, 26))
    small = concentrations_along(transport, trajectory, [1.0, 1.0])
    large = concentrations_along(transport, trajectory, [10.0, 10.0])
    assert_allclose(large, 10.0 * small, rtol=1e-9)
    assert_allclose(transport.S.T @ np.log(large).T, trajectory.x.T, atol=1e-9)


def test_concentrations_along_rejects_mismatch(three_cycle):
    sys = LogLinearSystem.scalar(1.0, 1.0)
    trajectory = analytic_solution(sys, [0.0], [0.0, 1.0])
    with pytest.raises(ValidationError):
        concentrations_along(three_cycle, trajectory, [1.0])
