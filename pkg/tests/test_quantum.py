import itertools
import math

import numpy as np
import pytest
import scipy.linalg as la
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from fourlevel.model import Kind, Region, coupling_edges, lambda_config, n_config
from fourlevel.quantum import (
    EmptySector,
    InconsistentBasis,
    Sector,
    build_matrix,
    converge,
    enumerate_basis,
    ground_state,
    lowest_eigenpair,
    quantum_observables,
    sector_of,
    sectors,
)
from fourlevel.variational import classify


def make(kind, mu, Na=1):
    return lambda_config(*mu, Na=Na) if kind == "lambda" else n_config(*mu, Na=Na)


def excitations(kind, s):
    nu1, nu2, n1, n2, n3, n4 = s
    return nu1 + nu2 + n3 + (2 * n4 if kind == "lambda" else n4)


def brute_basis(kind, Na, M_max):
    """Every state with Na atoms and at most M_max excitations, no symmetry used."""
    out = []
    for n in itertools.product(range(Na + 1), repeat=4):
        if sum(n) != Na:
            continue
        for nu1 in range(M_max + 1):
            for nu2 in range(M_max + 1):
                s = (nu1, nu2, *n)
                if excitations(kind, s) <= M_max:
                    out.append(s)
    return out


def loop_matrix(config, basis):
    """Hamiltonian built one exchange at a time, counter-rotating terms included."""
    index = {tuple(map(int, s)): k for k, s in enumerate(basis)}
    H = np.zeros((len(basis), len(basis)))
    Om, om = config.Omega, config.omega
    for k, s in enumerate(basis):
        s = list(map(int, s))
        H[k, k] = Om[0] * s[0] + Om[1] * s[1] + sum(w * n for w, n in zip(om, s[2:]))
        for e in coupling_edges(config.kind):
            # promote one atom from level i to j while absorbing or emitting a photon
            ni, nj = s[1 + e.i], s[1 + e.j]
            if ni == 0:
                continue
            for dnu in (-1, 1):
                nu = s[e.mode - 1]
                if nu + dnu < 0:
                    continue
                t = list(s)
                t[e.mode - 1] += dnu
                t[1 + e.i] -= 1
                t[1 + e.j] += 1
                if tuple(t) in index:
                    photon = math.sqrt(max(nu, nu + dnu))
                    amp = -config.mu[e.pair] / math.sqrt(config.Na) * math.sqrt(ni * (nj + 1)) * photon
                    H[index[tuple(t)], k] += amp
                    H[k, index[tuple(t)]] += amp
    return H


# --- basis ------------------------------------------------------------------


def test_lambda_ee_basis_example():
    basis = enumerate_basis(lambda_config(0.1, 0.1, 0.1), "ee", 2)
    expected = [(0, 0, 1, 0, 0, 0), (0, 0, 0, 1, 0, 0), (2, 0, 1, 0, 0, 0), (2, 0, 0, 1, 0, 0),
                (1, 0, 0, 0, 1, 0), (0, 2, 1, 0, 0, 0), (0, 2, 0, 1, 0, 0)]
    assert [tuple(s) for s in basis] == expected


def test_vacuum_only_bases():
    assert [tuple(s) for s in enumerate_basis(lambda_config(0, 0, 0), "ee", 0)] == [(0, 0, 1, 0, 0, 0), (0, 0, 0, 1, 0, 0)]
    assert [tuple(s) for s in enumerate_basis(n_config(0, 0, 0), "e", 1)] == [(0, 0, 1, 0, 0, 0), (0, 0, 0, 1, 0, 0)]


def test_empty_sector():
    with pytest.raises(EmptySector):
        enumerate_basis(lambda_config(0, 0, 0), "oe", 0)
    with pytest.raises(ValueError):
        enumerate_basis(lambda_config(0, 0, 0), "e", 3)


@pytest.mark.parametrize("kind, Na, M_max", [("lambda", 1, 7), ("lambda", 3, 5), ("n", 1, 8), ("n", 2, 6)])
def test_sector_bases_partition_the_brute_force_basis(kind, Na, M_max):
    cfg = make(kind, (0.1, 0.1, 0.1), Na)
    full = brute_basis(kind, Na, M_max)
    parts = []
    for sector in sectors(cfg.kind):
        try:
            b = enumerate_basis(cfg, sector, M_max)
        except EmptySector:
            continue
        assert (sector_of(cfg.kind, b) == sector.parities).all()
        parts += [tuple(s) for s in b]
    assert len(parts) == len(set(parts)) and set(parts) == set(full)
    assert sorted(map(tuple, enumerate_basis(cfg, None, M_max))) == sorted(full)


def test_smaller_truncations_are_prefixes():
    cfg = lambda_config(0.3, 0.3, 0.3, Na=2)
    for sector in sectors(cfg.kind):
        small, big = enumerate_basis(cfg, sector, 6), enumerate_basis(cfg, sector, 9)
        np.testing.assert_array_equal(big[: len(small)], small)


# --- matrix -----------------------------------------------------------------


def test_single_exchange_element():
    cfg = lambda_config(0.37, 0.5, 0.2)
    basis = np.array([(1, 0, 1, 0, 0, 0), (0, 0, 0, 0, 1, 0)])
    H = build_matrix(cfg, basis).toarray()
    assert H[1, 0] == pytest.approx(-0.37) and H[0, 1] == pytest.approx(-0.37)
    assert H[0, 0] == pytest.approx(1.0) and H[1, 1] == pytest.approx(1.1)


def test_uncoupled_matrix_is_diagonal():
    for cfg in (lambda_config(0, 0, 0, Na=2), n_config(0, 0, 0, Na=2)):
        H = build_matrix(cfg, enumerate_basis(cfg, None, 6))
        assert sp.triu(H, 1).nnz == 0 and sp.tril(H, -1).nnz == 0


def test_foreign_states_rejected():
    cfg = lambda_config(0.1, 0.1, 0.1, Na=2)
    with pytest.raises(InconsistentBasis):
        build_matrix(cfg, np.array([(0, 0, 1, 0, 0, 0)]))


@pytest.mark.parametrize("kind", ["lambda", "n"])
@pytest.mark.parametrize("Na", [1, 2, 3])
def test_matrix_matches_operator_oracle(kind, Na):
    cfg = make(kind, (0.31, 0.57, 0.83), Na).replace(Omega=(1.0, 0.7), omega=(0.05, 0.2, 1.1, 1.7))
    basis = enumerate_basis(cfg, None, 7)
    np.testing.assert_allclose(build_matrix(cfg, basis).toarray(), loop_matrix(cfg, basis), atol=1e-14)


@pytest.mark.parametrize("kind", ["lambda", "n"])
def test_exact_block_structure(kind):
    cfg = make(kind, (0.7, 1.1, 0.9), 2)
    basis = enumerate_basis(cfg, None, 12)
    H = build_matrix(cfg, basis).tocoo()
    labels = sector_of(cfg.kind, basis)
    assert np.all(labels[H.row] == labels[H.col])
    assert abs(H - H.T).max() == 0.0


# --- eigensolver ------------------------------------------------------------


def test_eigenpair_examples():
    e, v = lowest_eigenpair(sp.diags([0.0, 0.8, 1.0]).tocsr())
    assert e == 0.0 and np.allclose(v, [1, 0, 0])
    e, v = lowest_eigenpair(np.array([[0.0, -0.5], [-0.5, 1.0]]))
    assert e == pytest.approx((1 - math.sqrt(2)) / 2, abs=1e-14)
    assert e == pytest.approx(-0.2071068, abs=1e-7)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 500), st.integers(0, 2**32 - 1))
def test_dense_and_sparse_agree(dim, seed):
    rng = np.random.default_rng(seed)
    A = sp.random(dim, dim, density=min(1.0, 6 / dim), random_state=rng)
    A = (A + A.T + sp.diags(rng.uniform(0, 3, dim))).tocsr()
    ed, vd = lowest_eigenpair(A, method="dense")
    es, vs = lowest_eigenpair(A, method="sparse")
    assert abs(ed - es) < 1e-9
    full = la.eigvalsh(A.toarray())
    assert abs(ed - full[0]) < 1e-9
    if full[1] - full[0] > 1e-6:
        assert abs(abs(vd @ vs) - 1) < 1e-8


# --- ground state -----------------------------------------------------------


@pytest.mark.parametrize("kind", ["lambda", "n"])
def test_ground_state_is_lowest_over_full_basis(kind):
    cfg = make(kind, (0.6, 0.9, 0.8), 2)
    res = ground_state(cfg, 10)
    full = la.eigvalsh(loop_matrix(cfg, brute_basis(kind, 2, 10)))
    assert res.energy == pytest.approx(full[0], abs=1e-10)
    assert res.energy == min(res.sector_energies.values())
    assert np.linalg.norm(res.vector) == pytest.approx(1.0)
    assert (sector_of(cfg.kind, res.basis) == sector_of(cfg.kind, res.basis[:1])[0]).all()


def test_uncoupled_ground_state():
    for cfg in (lambda_config(0, 0, 0), n_config(0, 0, 0)):
        res = converge(cfg)
        assert res.converged and res.M_max == 10
        assert res.energy == cfg.omega[0]
        obs = quantum_observables(cfg, res)
        assert obs.nu1 == 0 and obs.nu2 == 0


def test_lambda_converge_example():
    cfg = lambda_config(0.25, 1.0, 0.25)
    res = converge(cfg, tol=1e-8)
    assert res.converged
    further = ground_state(cfg, res.M_max + 10)
    assert abs(further.energy - res.energy) < 1e-8
    assert res.energy <= classify(cfg).energy + 1e-9


def test_n_converge_example():
    cfg = n_config(0.65, 0.25, 1.5)
    res = converge(cfg, tol=1e-8)
    assert res.converged and res.energy <= -0.93361
    assert res.sector == Sector.parse("e")


def test_n_even_sector_wins():
    res = converge(n_config(0.65, 0.25, 0.5))
    assert res.sector.label == "e"


def test_cap_reports_unconverged():
    res = converge(lambda_config(1.5, 1.5, 1.5), tol=1e-14, M_start=4, M_step=2, M_cap=8)
    assert not res.converged and res.M_max == 8


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(["lambda", "n"]), st.tuples(*[st.floats(0, 1.5)] * 3))
def test_truncation_monotone_and_closure(kind, mu):
    cfg = make(kind, mu)
    energies = [ground_state(cfg, M).energy for M in (2, 6, 10, 14)]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    res = ground_state(cfg, 14)
    obs = quantum_observables(cfg, res)
    assert abs(sum(obs.populations) - 1) < 1e-12
    assert obs.nu1 >= 0 and obs.nu2 >= 0


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(["lambda", "n"]), st.tuples(*[st.floats(0, 1.2)] * 3))
def test_quantum_energy_below_variational(kind, mu):
    cfg = make(kind, mu)
    res = converge(cfg, tol=1e-10)
    assert res.energy_per_particle <= classify(cfg).energy + 1e-9
