"""Exact ground states in the truncated Fock x symmetric-atom basis.

Basis states are integer rows ``(nu1, nu2, n1, n2, n3, n4)``. The basis is
truncated by the total excitation number ``M`` and split into parity
sectors of the conserved forms, so each sector is diagonalized separately.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln

from .model import Kind, ModelConfig, coupling_edges, excitation_form, parity_forms
from .variational import ObservableSet, VariationalPoint

DENSE_LIMIT = 400


class EmptySector(ValueError):
    pass


class InconsistentBasis(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class BasisState(NamedTuple):
    nu1: int
    nu2: int
    n1: int
    n2: int
    n3: int
    n4: int


class Sector(NamedTuple):
    """Parities (0 even, 1 odd) of the sector-labelling forms."""

    parities: tuple[int, ...]

    @property
    def label(self) -> str:
        return "".join("eo"[p] for p in self.parities)

    @classmethod
    def parse(cls, label: str) -> "Sector":
        if not label or set(label) - set("eo"):
            raise ValueError(f"bad sector label {label!r}")
        return cls(tuple("eo".index(ch) for ch in label))


def sectors(kind: Kind) -> list[Sector]:
    """All sectors of a configuration in fixed order (ee, eo, oe, oo / e, o)."""
    n = len(parity_forms(kind))
    return [Sector(p) for p in itertools.product((0, 1), repeat=n)]


def sector_of(kind: Kind, states) -> np.ndarray:
    """Parities of each basis row, shape ``(n, len(forms))``."""
    states = np.atleast_2d(states)
    return np.stack([f(states) % 2 for f in parity_forms(kind)], axis=1)


def _atom_configurations(Na: int) -> np.ndarray:
    rows = [
        (n1, n2, n3, Na - n1 - n2 - n3)
        for n1 in range(Na + 1)
        for n2 in range(Na + 1 - n1)
        for n3 in range(Na + 1 - n1 - n2)
    ]
    return np.array(rows, dtype=np.int64)


def enumerate_basis(config: ModelConfig, sector: Sector | str | None, M_max: int) -> np.ndarray:
    """Basis rows with ``M <= M_max`` in ``sector`` (``None`` for all sectors).

    Rows are ordered by ``(M, nu2, n4, n3, n2)``, so the basis for a smaller
    ``M_max`` is a prefix of the one for a larger ``M_max``.
    """
    if M_max < 0:
        raise ValueError("M_max must be >= 0")
    form = excitation_form(config.kind)
    atoms = _atom_configurations(config.Na)
    matter_M = atoms @ np.asarray(form.coefficients[2:])
    chunks = []
    for n, m0 in zip(atoms, matter_M):
        room = M_max - m0
        if room < 0:
            continue
        nu1, nu2 = np.meshgrid(np.arange(room + 1), np.arange(room + 1), indexing="ij")
        keep = nu1 + nu2 <= room
        k = int(keep.sum())
        chunks.append(np.column_stack([nu1[keep], nu2[keep], np.broadcast_to(n, (k, 4))]))
    states = np.concatenate(chunks).astype(np.int64)
    if sector is not None:
        if isinstance(sector, str):
            sector = Sector.parse(sector)
        if sector not in sectors(config.kind):
            raise ValueError(f"sector {sector.label!r} does not exist for the {config.kind.value} configuration")
        mask = np.all(sector_of(config.kind, states) == np.asarray(sector.parities), axis=1)
        states = states[mask]
    if len(states) == 0:
        raise EmptySector(f"sector {getattr(sector, 'label', sector)} is empty at M_max={M_max}")
    M = form(states)
    order = np.lexsort((states[:, 3], states[:, 4], states[:, 5], states[:, 1], M))
    return states[order]


def _encode(states: np.ndarray, radix: int) -> np.ndarray:
    key = np.zeros(len(states), dtype=np.int64)
    for col in range(states.shape[1]):
        key = key * radix + states[:, col]
    return key


def build_matrix(config: ModelConfig, basis: np.ndarray) -> sp.csr_matrix:
    """Real symmetric Hamiltonian restricted to ``basis``.

    Off-diagonal couplings are generated once per connected pair (from the
    state holding the excited atom) and mirrored, so the result equals its
    transpose exactly. Couplings leading outside the basis are dropped,
    which is the truncation.
    """
    basis = np.asarray(basis, dtype=np.int64)
    if basis.ndim != 2 or basis.shape[1] != 6 or np.any(basis < 0):
        raise InconsistentBasis("basis must be rows of 6 nonnegative occupations")
    if np.any(basis[:, 2:].sum(axis=1) != config.Na):
        raise InconsistentBasis(f"every basis state must hold Na={config.Na} atoms")
    radix = int(basis.max()) + 2
    keys = _encode(basis, radix)
    order = np.argsort(keys)
    sorted_keys = keys[order]
    if np.any(np.diff(sorted_keys) == 0):
        raise InconsistentBasis("basis contains duplicate states")

    dim = len(basis)
    diag = basis[:, :2] @ np.asarray(config.Omega) + basis[:, 2:] @ np.asarray(config.omega)
    rows, cols, vals = [], [], []
    scale = 1.0 / math.sqrt(config.Na)
    for edge, mu in config.edges():
        if mu == 0:
            continue
        lo, hi, nu = edge.i + 1, edge.j + 1, edge.mode - 1
        src = np.flatnonzero(basis[:, hi] > 0)
        atom = np.sqrt(basis[src, hi] * (basis[src, lo] + 1.0))
        for dnu in (1, -1):
            ok = basis[src, nu] + dnu >= 0
            u = src[ok]
            target = basis[u].copy()
            target[:, hi] -= 1
            target[:, lo] += 1
            target[:, nu] += dnu
            photon = np.sqrt(np.maximum(basis[u, nu], target[:, nu]).astype(float))
            tkeys = _encode(target, radix)
            pos = np.searchsorted(sorted_keys, tkeys)
            pos = np.minimum(pos, dim - 1)
            found = sorted_keys[pos] == tkeys
            v = order[pos[found]]
            u = u[found]
            rows.append(np.minimum(u, v))
            cols.append(np.maximum(u, v))
            vals.append(-mu * scale * atom[ok][found] * photon[found])
    if rows:
        r, c, x = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    else:
        r = c = np.zeros(0, dtype=np.int64)
        x = np.zeros(0)
    upper = sp.coo_matrix((x, (r, c)), shape=(dim, dim)).tocsr()
    return (upper + upper.T + sp.diags(diag)).tocsr()


def _solve_block(block, method: str, v0):
    dim = block.shape[0]
    if method == "auto":
        method = "dense" if dim <= DENSE_LIMIT else "sparse"
    if method == "dense" or dim < 3:
        w, v = la.eigh(block.toarray(), subset_by_index=[0, 0])
        return float(w[0]), v[:, 0]
    # a positive start overlaps the Perron-like ground state of a connected block
    start = np.random.default_rng(0).uniform(0.5, 1.5, dim)
    if v0 is not None and np.linalg.norm(v0) > 1e-6:
        start = np.abs(v0) + 1e-8 * start
    try:
        w, v = spla.eigsh(block, k=1, which="SA", tol=0, v0=start, maxiter=20 * dim)
    except spla.ArpackNoConvergence as exc:
        raise NoConvergence(str(exc)) from exc
    return float(w[0]), v[:, 0]


def lowest_eigenpair(matrix, tol: float = 1e-10, method: str = "auto", v0=None):
    """Smallest eigenvalue and unit eigenvector of a real symmetric matrix.

    The matrix is first split into its connected blocks, since hidden
    conservation laws make Lanczos blind to blocks its start vector misses.
    Each block is solved with ``method``: ``"dense"``, ``"sparse"``
    (Lanczos) or ``"auto"``, which picks dense up to ``DENSE_LIMIT`` rows.
    """
    matrix = sp.csr_matrix(matrix, dtype=float)
    dim = matrix.shape[0]
    if dim < 1:
        raise ValueError("empty matrix")
    if method not in ("auto", "dense", "sparse"):
        raise ValueError(f"unknown method {method!r}")
    n_blocks, labels = connected_components(matrix, directed=False)
    order = np.argsort(labels, kind="stable")
    cuts = np.flatnonzero(np.diff(labels[order])) + 1
    energy, vector = math.inf, None
    for members in np.split(order, cuts):
        if members.size == 1:
            e, v = float(matrix[members[0], members[0]]), np.ones(1)
        else:
            block = matrix[members][:, members]
            e, v = _solve_block(block, method, None if v0 is None else np.asarray(v0, float)[members])
        if e < energy - 1e-14 * max(1.0, abs(e)):
            energy = e
            vector = np.zeros(dim)
            vector[members] = v
    vector = vector / np.linalg.norm(vector)
    # fix the overall sign so results are reproducible
    lead = np.argmax(np.abs(vector))
    if vector[lead] < 0:
        vector = -vector
    residual = np.linalg.norm(matrix @ vector - energy * vector)
    if residual >= tol * max(1.0, abs(energy)):
        raise NoConvergence(f"residual {residual:.3e} above tolerance")
    return energy, vector


@dataclass
class SpectralResult:
    energy: float
    vector: np.ndarray
    basis: np.ndarray
    sector: Sector
    M_max: int
    converged: bool = True
    tie: bool = False
    sector_energies: dict = field(default_factory=dict)
    Na: int = 1
    sector_vectors: dict = field(default_factory=dict, repr=False)

    @property
    def energy_per_particle(self) -> float:
        return self.energy / self.Na


def ground_state(config: ModelConfig, M_max: int, tol: float = 1e-10, previous: SpectralResult | None = None):
    """Lowest state over all parity sectors at truncation ``M_max``."""
    best = None
    energies = {}
    warm = previous.sector_vectors if previous is not None else {}
    vectors = {}
    for sector in sectors(config.kind):
        try:
            basis = enumerate_basis(config, sector, M_max)
        except EmptySector:
            continue
        v0 = None
        if sector.label in warm:
            old = warm[sector.label]
            v0 = np.zeros(len(basis))
            v0[: len(old)] = old
        energy, vector = lowest_eigenpair(build_matrix(config, basis), tol, v0=v0)
        energies[sector.label] = energy
        vectors[sector.label] = vector
        if best is None or energy < best[0] - 1e-12:
            best = (energy, vector, basis, sector)
    energy, vector, basis, sector = best
    tie = sum(abs(e - energy) <= 1e-12 for e in energies.values()) > 1
    return SpectralResult(energy, vector, basis, sector, M_max, True, tie, energies, config.Na, vectors)


def converge(
    config: ModelConfig,
    tol: float = 1e-10,
    M_start: int = 10,
    M_step: int = 10,
    M_cap: int = 120,
) -> SpectralResult:
    """Raise ``M_max`` until the ground energy moves by less than ``tol``.

    Returns the result at the first ``M_max`` that is stable under one more
    step. At ``M_cap`` the largest-truncation result is returned with
    ``converged=False``.
    """
    current = ground_state(config, M_start, tol=1e-9)
    while current.M_max + M_step <= M_cap:
        nxt = ground_state(config, current.M_max + M_step, tol=1e-9, previous=current)
        if nxt.energy > current.energy + 1e-12 * max(1.0, abs(current.energy)):
            raise RuntimeError(
                f"ground energy increased with M_max: {current.energy!r} -> {nxt.energy!r}"
            )
        if abs(nxt.energy - current.energy) < tol:
            return current
        current = nxt
    current.converged = False
    return current


def quantum_observables(config: ModelConfig, result: SpectralResult) -> ObservableSet:
    """Per-particle photon numbers and level populations of an eigenstate."""
    weights = np.abs(result.vector) ** 2
    means = weights @ result.basis / config.Na
    return ObservableSet(result.energy / config.Na, *(float(x) for x in means))


def coherent_state(config: ModelConfig, point: VariationalPoint, M_max: int):
    """Variational trial state expanded in the full truncated basis.

    Returns ``(basis, amplitudes)``; amplitudes are complex and not
    renormalized, so the missing norm measures the truncation loss.
    """
    basis = enumerate_basis(config, None, M_max)
    Na = config.Na
    g = point.moduli()
    gamma2 = float(g @ g)
    # level phases from the relative ones, walking the coupling tree from level 1
    phase = {1: 0.0}
    pending = list(zip(coupling_edges(config.kind), point.phi))
    while pending:
        edge, phi = pending.pop(0)
        if edge.i in phase:
            phase[edge.j] = phase[edge.i] + phi
        elif edge.j in phase:
            phase[edge.i] = phase[edge.j] - phi
        else:
            pending.append((edge, phi))
    phase = np.array([phase[k] for k in (1, 2, 3, 4)])
    nus, ns = basis[:, :2], basis[:, 2:]
    r = np.asarray(point.r)
    theta = np.asarray(point.theta)
    log_field = -0.5 * Na * (r**2).sum() + (
        nus * np.log(np.sqrt(Na) * np.where(r > 0, r, 1.0))
    ).sum(axis=1) - 0.5 * gammaln(nus + 1).sum(axis=1)
    field_zero = ((r == 0) & (nus > 0)).any(axis=1)
    log_matter = 0.5 * (gammaln(Na + 1) - gammaln(ns + 1).sum(axis=1)) + (
        ns * np.log(np.where(g > 0, g, 1.0))
    ).sum(axis=1) - 0.5 * Na * math.log(gamma2)
    matter_zero = ((g == 0) & (ns > 0)).any(axis=1)
    amp = np.exp(log_field + log_matter)
    amp[field_zero | matter_zero] = 0.0
    amp = amp * np.exp(1j * (nus @ theta + ns @ phase))
    return basis, amp


def coherent_energy(config: ModelConfig, point: VariationalPoint, M_max: int = 60) -> float:
    """Per-particle ``<H>`` of the trial state from the full Hamiltonian matrix."""
    basis, amp = coherent_state(config, point, M_max)
    H = build_matrix(config, basis)
    value = np.vdot(amp, H @ amp).real / np.vdot(amp, amp).real
    return value / config.Na
