"""Shared fixtures: seeded generators, preset networks and random instances."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from logquotient.network import Network, build_network, load_network

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def ab() -> Network:
    return load_network("ab")


@pytest.fixture
def three_cycle() -> Network:
    return load_network("three_cycle")


@pytest.fixture
def transport() -> Network:
    return load_network("transport")


def random_network(rng: np.random.Generator, n: int, r: int) -> Network:
    """Random S with entries in {-1, 0, 1} and no empty reaction column."""
    species = [f"S{i}" for i in range(n)]
    reactions = []
    for j in range(r):
        column = np.zeros(n)
        while not np.any(column):
            column = rng.integers(-1, 2, size=n).astype(float)
        reactions.append((f"R{j}", {species[i]: column[i] for i in range(n) if column[i]}))
    return build_network(species, reactions)


@pytest.fixture
def random_instances(rng: np.random.Generator) -> list[tuple[Network, np.ndarray]]:
    """100 (network, positive c) pairs with n <= 8 species and r <= 6 reactions."""
    instances = []
    for _ in range(100):
        n = int(rng.integers(2, 9))
        r = int(rng.integers(1, 7))
        instances.append((random_network(rng, n, r), np.exp(rng.normal(0.0, 1.0, size=n))))
    return instances
