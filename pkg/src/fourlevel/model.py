"""Configurations, physical parameters and coupling graphs.

Two 4-level atomic schemes are supported, each coupled dipolarly to two
field modes (hbar = 1, all energies dimensionless):

* ``Kind.LAMBDA``: mode 1 drives 1-3 and 2-3, mode 2 drives 3-4.
* ``Kind.N``: mode 1 drives 1-3 and 2-4, mode 2 drives 2-3.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, NamedTuple

import numpy as np


class ConfigError(ValueError):
    """Raised when a configuration violates a model invariant.

    ``field`` names the offending config entry.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class OrderingViolation(ConfigError):
    pass


class BadCouplingKeys(ConfigError):
    pass


class NonPositiveFrequency(ConfigError):
    pass


class NegativeCoupling(ConfigError):
    pass


class Kind(enum.Enum):
    LAMBDA = "lambda"
    N = "n"


class CouplingEdge(NamedTuple):
    i: int
    j: int
    mode: int

    @property
    def pair(self) -> tuple[int, int]:
        return (self.i, self.j)


_EDGES = {
    Kind.LAMBDA: (CouplingEdge(1, 3, 1), CouplingEdge(2, 3, 1), CouplingEdge(3, 4, 2)),
    Kind.N: (CouplingEdge(1, 3, 1), CouplingEdge(2, 3, 2), CouplingEdge(2, 4, 1)),
}


class Region(enum.Enum):
    """Variational phase regions. Declaration order doubles as the
    tie-breaking priority: later members win exact ties."""

    NORMAL = "S_norm"
    LAMBDA = "S_Lambda"
    S13 = "S_13"
    S23 = "S_23"
    S24 = "S_24"
    S34 = "S_34"


REGIONS = {
    Kind.LAMBDA: (Region.NORMAL, Region.LAMBDA, Region.S23, Region.S34),
    Kind.N: (Region.NORMAL, Region.S13, Region.S23, Region.S24),
}


def coupling_edges(kind: Kind) -> list[CouplingEdge]:
    """Coupled level pairs ``(i, j)`` with ``i < j`` and the mode driving them."""
    return list(_EDGES[Kind(kind)])


def regions(kind: Kind) -> tuple[Region, ...]:
    return REGIONS[Kind(kind)]


# Occupation vectors are ordered (nu1, nu2, n1, n2, n3, n4).
OCCUPATION_NAMES = ("nu1", "nu2", "n1", "n2", "n3", "n4")


@dataclass(frozen=True)
class LinearForm:
    """Integer linear combination of the six occupation numbers."""

    name: str
    coefficients: tuple[int, int, int, int, int, int]

    def __call__(self, occupations) -> np.ndarray | int:
        occ = np.asarray(occupations)
        return occ @ np.asarray(self.coefficients)


def conserved_quantities(kind: Kind) -> list[LinearForm]:
    """Diagonal forms whose parities commute with the Hamiltonian.

    The last entry is always the total excitation number ``M``.
    """
    kind = Kind(kind)
    if kind is Kind.LAMBDA:
        return [
            LinearForm("K1", (-1, 0, 1, 1, 0, 0)),
            LinearForm("K2", (1, -1, 0, 0, 1, 0)),
            LinearForm("K3", (0, 1, 0, 0, 0, 1)),
            LinearForm("M", (1, 1, 0, 0, 1, 2)),
        ]
    return [LinearForm("M", (1, 1, 0, 0, 1, 1))]


def excitation_form(kind: Kind) -> LinearForm:
    return conserved_quantities(kind)[-1]


def parity_forms(kind: Kind) -> list[LinearForm]:
    """Forms whose parities label the symmetry sectors, in sector-label order."""
    forms = {f.name: f for f in conserved_quantities(kind)}
    if Kind(kind) is Kind.LAMBDA:
        return [forms["M"], forms["K3"]]
    return [forms["M"]]


@dataclass(frozen=True)
class ModelConfig:
    kind: Kind
    Omega: tuple[float, float]
    omega: tuple[float, float, float, float]
    mu: Mapping[tuple[int, int], float]
    Na: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mu", MappingProxyType(dict(self.mu)))

    def __reduce__(self):
        # mappingproxy does not pickle; rebuild through validation instead
        return validate, (self.kind, self.Omega, self.omega, dict(self.mu), self.Na)

    def coupling(self, i: int, j: int) -> float:
        return self.mu[(i, j)]

    def edges(self) -> list[tuple[CouplingEdge, float]]:
        """Coupling edges paired with their dipolar strengths."""
        return [(e, self.mu[e.pair]) for e in coupling_edges(self.kind)]

    def replace(self, **changes) -> "ModelConfig":
        data = dict(kind=self.kind, Omega=self.Omega, omega=self.omega, mu=dict(self.mu), Na=self.Na)
        data.update(changes)
        return validate(**data)

    def with_param(self, path: str, value: float) -> "ModelConfig":
        """Return a copy with one dotted parameter (``mu.24``, ``omega.3``,
        ``Omega.1``, ``Na``) set to ``value``. Indices are 1-based."""
        name, _, index = path.partition(".")
        if name == "Na" and not index:
            return self.replace(Na=int(value))
        if name == "mu":
            key = parse_pair(index)
            if key not in self.mu:
                raise BadCouplingKeys(f"unknown coupling {path!r} for {self.kind.value}", field=path)
            mu = dict(self.mu)
            mu[key] = float(value)
            return self.replace(mu=mu)
        if name in ("omega", "Omega") and index.isdigit():
            values = list(getattr(self, name))
            k = int(index) - 1
            if not 0 <= k < len(values):
                raise ConfigError(f"index out of range in {path!r}", field=path)
            values[k] = float(value)
            return self.replace(**{name: tuple(values)})
        raise ConfigError(f"unknown parameter path {path!r}", field=path)

    def get_param(self, path: str) -> float:
        name, _, index = path.partition(".")
        if name == "Na" and not index:
            return self.Na
        if name == "mu":
            key = parse_pair(index)
            if key not in self.mu:
                raise BadCouplingKeys(f"unknown coupling {path!r} for {self.kind.value}", field=path)
            return self.mu[key]
        if name in ("omega", "Omega") and index.isdigit():
            values = getattr(self, name)
            if not 1 <= int(index) <= len(values):
                raise ConfigError(f"index out of range in {path!r}", field=path)
            return values[int(index) - 1]
        raise ConfigError(f"unknown parameter path {path!r}", field=path)

    @property
    def equal_detuning(self) -> bool:
        return self.omega[0] == self.omega[1]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "Omega": list(self.Omega),
            "omega": list(self.omega),
            "mu": {f"{i}{j}": v for (i, j), v in self.mu.items()},
            "Na": self.Na,
        }


def parse_pair(key) -> tuple[int, int]:
    if isinstance(key, tuple):
        return tuple(int(k) for k in key)
    key = str(key)
    if len(key) != 2 or not key.isdigit():
        raise BadCouplingKeys(f"coupling key {key!r} must be two level digits, e.g. '13'", field=f"mu.{key}")
    return int(key[0]), int(key[1])


def validate(kind, Omega, omega, mu, Na=1) -> ModelConfig:
    """Check all invariants and return an immutable :class:`ModelConfig`."""
    try:
        kind = Kind(kind.lower() if isinstance(kind, str) else kind)
    except ValueError:
        raise ConfigError(f"kind must be 'lambda' or 'n', got {kind!r}", field="kind") from None

    Omega = tuple(float(x) for x in Omega)
    omega = tuple(float(x) for x in omega)
    if len(Omega) != 2:
        raise ConfigError("Omega needs exactly 2 mode frequencies", field="Omega")
    if len(omega) != 4:
        raise ConfigError("omega needs exactly 4 level frequencies", field="omega")
    if not all(np.isfinite(Omega)) or not all(np.isfinite(omega)):
        raise ConfigError("frequencies must be finite", field="omega")
    for s, w in enumerate(Omega, 1):
        if w <= 0:
            raise NonPositiveFrequency(f"Omega.{s} = {w} must be > 0", field=f"Omega.{s}")
    for k in range(3):
        if omega[k] > omega[k + 1]:
            raise OrderingViolation(
                f"level frequencies must satisfy omega.1 <= ... <= omega.4, got {omega}", field=f"omega.{k + 2}"
            )

    mu = {parse_pair(k): float(v) for k, v in dict(mu).items()}
    expected = {e.pair for e in coupling_edges(kind)}
    if set(mu) != expected:
        extra = sorted(set(mu) - expected)
        missing = sorted(expected - set(mu))
        raise BadCouplingKeys(
            f"{kind.value} couplings must be {sorted(expected)}; extra {extra}, missing {missing}", field="mu"
        )
    for (i, j), v in mu.items():
        if not np.isfinite(v):
            raise ConfigError(f"mu.{i}{j} must be finite", field=f"mu.{i}{j}")
        if v < 0:
            raise NegativeCoupling(f"mu.{i}{j} = {v} must be >= 0", field=f"mu.{i}{j}")

    if isinstance(Na, bool) or int(Na) != Na or Na < 1:
        raise ConfigError(f"Na must be a positive integer, got {Na!r}", field="Na")

    ordered = {e.pair: mu[e.pair] for e in coupling_edges(kind)}
    return ModelConfig(kind, Omega, omega, ordered, int(Na))


# Frequencies used for the phase diagrams of the two schemes.
LAMBDA_FREQUENCIES = dict(Omega=(1.0, 0.25), omega=(0.0, 0.0, 1.1, 1.3))
N_FREQUENCIES = dict(Omega=(1.0, 0.25), omega=(0.0, 0.8, 1.0, 1.9))


def lambda_config(mu13=0.0, mu23=0.0, mu34=0.0, Na=1, **freqs) -> ModelConfig:
    params = {**LAMBDA_FREQUENCIES, **freqs}
    return validate(Kind.LAMBDA, mu={(1, 3): mu13, (2, 3): mu23, (3, 4): mu34}, Na=Na, **params)


def n_config(mu13=0.0, mu23=0.0, mu24=0.0, Na=1, **freqs) -> ModelConfig:
    params = {**N_FREQUENCIES, **freqs}
    return validate(Kind.N, mu={(1, 3): mu13, (2, 3): mu23, (2, 4): mu24}, Na=Na, **params)
