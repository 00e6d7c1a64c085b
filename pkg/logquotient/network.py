"""Reaction networks: stoichiometry, conservation structure and thermodynamic consistency."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, NamedTuple, Union

import numpy as np

from . import numerics
from .errors import ConfigError, ValidationError
from .presets import NETWORK_PRESETS

ACHIEVABILITY_TOL = 1e-9
WEGSCHEIDER_TOL = 1e-9

ReactionSpec = Union[tuple[str, Mapping[str, float]], Mapping[str, Any]]


@dataclass(frozen=True, eq=False)
class Network:
    """Species, reactions and the stoichiometric matrix S (rows species, columns reactions).

    Products carry positive coefficients and reactants negative ones, so
    Q_j(c) = ∏ c_i^{s_ij}.
    """

    species: tuple[str, ...]
    reactions: tuple[str, ...]
    S: np.ndarray

    def __post_init__(self) -> None:
        species = tuple(self.species)
        reactions = tuple(self.reactions)
        if not species:
            raise ValidationError("network needs at least one species")
        if not reactions:
            raise ValidationError("network needs at least one reaction")
        _require_unique(species, "species")
        _require_unique(reactions, "reaction")

        S = numerics.as_matrix(self.S, "stoichiometric matrix")
        if S.shape != (len(species), len(reactions)):
            raise ValidationError(
                f"stoichiometric matrix has shape {S.shape}, "
                f"expected ({len(species)}, {len(reactions)})"
            )
        empty = [reactions[j] for j in range(S.shape[1]) if not np.any(S[:, j])]
        if empty:
            raise ValidationError(f"reaction(s) with all-zero stoichiometry: {', '.join(empty)}")

        S.setflags(write=False)
        object.__setattr__(self, "species", species)
        object.__setattr__(self, "reactions", reactions)
        object.__setattr__(self, "S", S)

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def n_reactions(self) -> int:
        return len(self.reactions)

    @property
    def reactant_matrix(self) -> np.ndarray:
        """Nonnegative reactant coefficients (the negative part of S)."""
        return np.maximum(-self.S, 0.0)

    @property
    def product_matrix(self) -> np.ndarray:
        """Nonnegative product coefficients (the positive part of S)."""
        return np.maximum(self.S, 0.0)

    @property
    def rank(self) -> int:
        """Number of independent reactions, rank(S)."""
        return numerics.rank(self.S)

    def log_quotients(self, c) -> np.ndarray:
        """ln Q(c) = Sᵀ ln c for positive concentrations."""
        conc = numerics.as_vector(c, "concentrations", self.n_species)
        if np.any(conc <= 0):
            raise ValidationError("concentrations must be strictly positive")
        return self.S.T @ np.log(conc)

    def quotients(self, c) -> np.ndarray:
        return np.exp(self.log_quotients(c))

    def stoichiometry(self, reaction: str) -> dict[str, float]:
        j = self.reactions.index(reaction)
        return {s: float(self.S[i, j]) for i, s in enumerate(self.species) if self.S[i, j]}

    def to_dict(self) -> dict:
        return {
            "species": list(self.species),
            "reactions": [
                {"name": name, "stoich": self.stoichiometry(name)} for name in self.reactions
            ],
        }

    def summary(self) -> str:
        """One line per reaction in ``aA + bB <=> cC`` form."""
        lines = []
        for j, name in enumerate(self.reactions):
            lhs = _side(self.species, -self.S[:, j])
            rhs = _side(self.species, self.S[:, j])
            lines.append(f"{name}: {lhs} <=> {rhs}")
        return "\n".join(lines)


@dataclass(frozen=True, eq=False)
class ConservationBasis:
    """Columns of L span ker(Sᵀ); y = Lᵀc are the conserved totals."""

    L: np.ndarray

    @property
    def m(self) -> int:
        return int(self.L.shape[1])

    def totals(self, c) -> np.ndarray:
        return self.L.T @ np.asarray(c, dtype=float)


class Achievability(NamedTuple):
    achievable: bool
    residual: float


class WegscheiderReport(NamedTuple):
    consistent: bool
    max_violation: float
    violations: np.ndarray  # |νᵀ ln K_eq| per cycle vector


# ─── Construction ────────────────────────────────────────────

def build_network(species: Iterable[str], reactions: Iterable[ReactionSpec]) -> Network:
    """Assemble S from per-reaction species→coefficient maps.

    Each reaction is ``(name, {species: coeff})`` or ``{"name": ..., "stoich": {...}}``.
    """
    species = tuple(species)
    _require_unique(species, "species")
    index = {name: i for i, name in enumerate(species)}

    names: list[str] = []
    columns: list[np.ndarray] = []
    for spec in reactions:
        if isinstance(spec, Mapping):
            name, stoich = spec.get("name"), spec.get("stoich")
        else:
            name, stoich = spec
        if not isinstance(name, str) or not isinstance(stoich, Mapping):
            raise ValidationError(f"reaction spec needs a name and a stoichiometry map: {spec!r}")
        column = np.zeros(len(species))
        for sp, coeff in stoich.items():
            if sp not in index:
                raise ValidationError(f"reaction {name} references unknown species {sp}")
            value = float(coeff)
            if not math.isfinite(value):
                raise ValidationError(f"reaction {name} has non-finite coefficient for {sp}")
            column[index[sp]] += value
        names.append(name)
        columns.append(column)

    S = np.column_stack(columns) if columns else np.zeros((len(species), 0))
    return Network(species, tuple(names), S)


def network_from_dict(data: Mapping[str, Any]) -> Network:
    """Build a network from the JSON layout ``{species: [...], reactions: [{name, stoich}]}``."""
    if not isinstance(data, Mapping):
        raise ConfigError("network definition must be a JSON object")
    species = data.get("species")
    reactions = data.get("reactions")
    if not isinstance(species, list) or not all(isinstance(s, str) for s in species):
        raise ConfigError("network.species must be an array of strings")
    if not isinstance(reactions, list):
        raise ConfigError("network.reactions must be an array")
    try:
        return build_network(species, reactions)
    except ValidationError as e:
        raise ConfigError(f"invalid network: {e}") from e
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid network: {e}") from e


def load_network(source: str | Path) -> Network:
    """Load a network JSON file, or an embedded preset by name."""
    key = str(source)
    if key in NETWORK_PRESETS:
        return network_from_dict(NETWORK_PRESETS[key])
    path = Path(source)
    if not path.exists():
        raise ConfigError(
            f"network file not found: {path} (presets: {', '.join(sorted(NETWORK_PRESETS))})"
        )
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    return network_from_dict(data)


# ─── Structure ───────────────────────────────────────────────

def conservation_basis(net: Network) -> ConservationBasis:
    """Basis L of ker(Sᵀ), reduced so each column is the identity on one pivot species."""
    L = numerics.canonical_basis(numerics.null_space(net.S.T))
    L.setflags(write=False)
    return ConservationBasis(L)


def cycle_basis(net: Network) -> np.ndarray:
    """Basis of ker(S): reaction cycles ν with Sν = 0, in the same reduced form."""
    return numerics.canonical_basis(numerics.null_space(net.S))


def check_quotient_achievable(net: Network, x, tol: float = ACHIEVABILITY_TOL) -> Achievability:
    """Whether log-quotients x lie in Im(Sᵀ), judged by the least-squares projection residual."""
    x = numerics.as_vector(x, "log-quotients", net.n_reactions)
    u = numerics.lstsq_min_norm(net.S.T, x)
    residual = float(np.linalg.norm(net.S.T @ u - x))
    return Achievability(residual <= tol * max(1.0, float(np.linalg.norm(x))), residual)


def wegscheider_check(net: Network, K_eq, tol: float = WEGSCHEIDER_TOL) -> WegscheiderReport:
    """Cycle condition: νᵀ ln K_eq = 0 for every ν in ker(S)."""
    K_eq = numerics.as_vector(K_eq, "K_eq", net.n_reactions)
    if np.any(K_eq <= 0):
        raise ValidationError("equilibrium constants must be positive")
    log_k = np.log(K_eq)

    cycles = cycle_basis(net)
    if cycles.shape[1] == 0:
        return WegscheiderReport(True, 0.0, np.zeros(0))

    violations = np.abs(cycles.T @ log_k)
    scale = max(1.0, float(np.linalg.norm(log_k)))
    limits = tol * np.linalg.norm(cycles, axis=0) * scale
    return WegscheiderReport(
        bool(np.all(violations <= limits)), float(violations.max()), violations
    )


# ─── Utility functions ───────────────────────────────────────

def _require_unique(names: tuple[str, ...], kind: str) -> None:
    seen: set[str] = set()
    for name in names:
        if name in seen:
            raise ValidationError(f"duplicate {kind} name: {name}")
        seen.add(name)


def _side(species: tuple[str, ...], coeffs: np.ndarray) -> str:
    terms = []
    for name, c in zip(species, coeffs):
        if c > 0:
            terms.append(name if c == 1 else f"{c:g} {name}")
    return " + ".join(terms) or "∅"
