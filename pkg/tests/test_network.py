"""Stoichiometry, conservation and cycle bases, achievability and Wegscheider checks."""

from __future__ import annotations

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from logquotient.errors import ConfigError, ValidationError
from logquotient.network import (
    Network,
    build_network,
    check_quotient_achievable,
    conservation_basis,
    cycle_basis,
    load_network,
    network_from_dict,
    wegscheider_check,
)
from logquotient.presets import NETWORK_PRESETS

from .conftest import CONFIGS


def test_ab_stoichiometry(ab):
    assert ab.species == ("A", "B")
    assert_allclose(ab.S, [[-1.0], [1.0]])
    assert ab.summary() == "R1: A <=> B"
    assert ab.stoichiometry("R1") == {"A": -1.0, "B": 1.0}


def test_quotients_follow_mass_action_law():
    net = load_network("abcd")
    assert net.quotients([1.0, 2.0, 3.0, 4.0])[0] == pytest.approx(6.0, rel=1e-14)
    assert_allclose(net.reactant_matrix[:, 0], [1, 1, 0, 0])
    assert_allclose(net.product_matrix[:, 0], [0, 0, 1, 1])


def test_log_quotients_reject_nonpositive(ab):
    with pytest.raises(ValidationError):
        ab.log_quotients([1.0, 0.0])


def test_ab_conserved_total(ab):
    basis = conservation_basis(ab)
    assert basis.m == 1
    assert_allclose(basis.L, [[1.0], [1.0]], atol=1e-12)
    assert basis.totals([1.0, 2.0])[0] == pytest.approx(3.0)


def test_three_cycle_bases(three_cycle):
    assert_allclose(cycle_basis(three_cycle), [[1.0], [1.0], [1.0]], atol=1e-12)
    assert_allclose(conservation_basis(three_cycle).L, [[1.0], [1.0], [1.0]], atol=1e-12)


def test_transport_conserves_each_pair(transport):
    L = conservation_basis(transport).L
    assert_allclose(L, [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.0, 1.0]], atol=1e-12)


@pytest.mark.parametrize("name", sorted(NETWORK_PRESETS))
def test_bases_are_kernels(name):
    net = load_network(name)
    L = conservation_basis(net).L
    cycles = cycle_basis(net)
    assert_allclose(net.S.T @ L, 0.0, atol=1e-12)
    assert_allclose(net.S @ cycles, 0.0, atol=1e-12)
    assert L.shape[1] + net.rank == net.n_species


def test_wegscheider_three_cycle(three_cycle):
    passing = wegscheider_check(three_cycle, [2.0, 3.0, 1.0 / 6.0])
    assert passing.consistent
    assert passing.max_violation < 1e-12

    failing = wegscheider_check(three_cycle, [2.0, 3.0, 1.0])
    assert not failing.consistent
    assert failing.max_violation == pytest.approx(math.log(6.0), abs=1e-9)


def test_wegscheider_without_cycles(ab):
    report = wegscheider_check(ab, [5.0])
    assert report.consistent
    assert report.violations.size == 0


def test_wegscheider_rejects_nonpositive(three_cycle):
    with pytest.raises(ValidationError):
        wegscheider_check(three_cycle, [1.0, -1.0, 1.0])


def test_achievability(three_cycle):
    good = check_quotient_achievable(three_cycle, [math.log(2), math.log(3), -math.log(6)])
    assert good.achievable
    bad = check_quotient_achievable(three_cycle, [math.log(2), math.log(3), 0.0])
    assert not bad.achievable
    assert bad.residual > 0.1


def test_wegscheider_ignores_shifts_in_image(three_cycle, rng):
    for K_eq in ([2.0, 3.0, 1.0 / 6.0], [2.0, 3.0, 1.0]):
        base = wegscheider_check(three_cycle, K_eq)
        shifted = wegscheider_check(three_cycle, np.array(K_eq) * np.exp(three_cycle.S.T @ rng.normal(size=3)))
        assert shifted.consistent == base.consistent
        assert_allclose(shifted.violations, base.violations, atol=1e-12)


def test_quotients_of_positive_states_are_achievable(random_instances):
    for net, c in random_instances:
        report = check_quotient_achievable(net, net.S.T @ np.log(c))
        assert report.achievable, net.summary()


def test_build_network_validation():
    with pytest.raises(ValidationError, match="duplicate species"):
        build_network(["A", "A"], [("R1", {"A": -1})])
    with pytest.raises(ValidationError, match="unknown species"):
        build_network(["A", "B"], [("R1", {"A": -1, "C": 1})])
    with pytest.raises(ValidationError, match="all-zero"):
        build_network(["A", "B"], [("R1", {"A": 0})])
    with pytest.raises(ValidationError, match="duplicate reaction"):
        build_network(["A", "B"], [("R1", {"A": -1, "B": 1}), ("R1", {"B": -1, "A": 1})])


def test_network_shape_mismatch():
    with pytest.raises(ValidationError):
        Network(("A", "B"), ("R1",), np.zeros((3, 1)))


def test_network_from_dict_errors():
    with pytest.raises(ConfigError):
        network_from_dict({"species": "AB", "reactions": []})
    with pytest.raises(ConfigError):
        network_from_dict({"species": ["A"], "reactions": [{"name": "R1", "stoich": {"Z": 1}}]})


def test_to_dict_rebuilds_same_network(three_cycle):
    rebuilt = network_from_dict(three_cycle.to_dict())
    assert rebuilt.species == three_cycle.species
    assert_allclose(rebuilt.S, three_cycle.S)


def test_load_network_file_and_errors(tmp_path, three_cycle):
    net = load_network(CONFIGS / "networks" / "three_cycle.json")
    assert_allclose(net.S, three_cycle.S)

    with pytest.raises(ConfigError, match="not found"):
        load_network(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_network(broken)
    good = tmp_path / "net.json"
    good.write_text(json.dumps(NETWORK_PRESETS["chain3"]), encoding="utf-8")
    assert load_network(good).n_reactions == 2
