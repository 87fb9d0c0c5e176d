"""Coherent-state variational treatment.

The trial state is a product of Heisenberg-Weyl coherent states for the two
modes and a totally symmetric U(4) coherent state for the atoms. Matter
coordinates live in a projective chart: one level amplitude is pinned to 1
and the other three moduli are free. ``Chart.RHO1`` pins level 1; the
higher charts are needed for collective phases that leave the lower levels
empty (a limit at infinity in the level-1 chart).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import qmc

from .model import Kind, ModelConfig, Region, coupling_edges, regions
from .simplex import NoConvergence, minimize_batch

__all__ = [
    "Chart",
    "VariationalPoint",
    "ObservableSet",
    "RegionEnergy",
    "RegionReport",
    "RegionInvalid",
    "EqualDetuningRequired",
    "ChartMismatch",
    "NoConvergence",
    "energy_surface",
    "critical_fields",
    "analytic_critical_point",
    "region_energies",
    "classify",
    "observables",
    "point_observables",
    "minimize_numeric",
    "minimize_numeric_many",
    "surface_array",
    "gradient",
]

TIE_TOL = 1e-12
MODULUS_BOUND = 1e3
LABEL_THRESHOLD = 1e-6


class RegionInvalid(ValueError):
    pass


class EqualDetuningRequired(ValueError):
    pass


class ChartMismatch(ValueError):
    pass


class Chart(enum.IntEnum):
    """Index of the level whose coherent-state amplitude is pinned to 1."""

    RHO1 = 1
    RHO2 = 2
    RHO3 = 3

    @property
    def free_levels(self) -> tuple[int, ...]:
        return tuple(k for k in (1, 2, 3, 4) if k != self.value)


@dataclass(frozen=True)
class VariationalPoint:
    """A trial state on the ``theta``/``phi`` branch given by its phases.

    ``rho`` holds the moduli of the three unpinned levels in ascending level
    order, e.g. ``(rho2, rho3, rho4)`` in ``Chart.RHO1`` and
    ``(eta1, eta3, eta4)`` in ``Chart.RHO2``. ``phi`` holds one relative
    matter phase per coupling edge, in :func:`coupling_edges` order.
    """

    r: tuple[float, float] = (0.0, 0.0)
    rho: tuple[float, float, float] = (0.0, 0.0, 0.0)
    chart: Chart = Chart.RHO1
    theta: tuple[float, float] = (0.0, 0.0)
    phi: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def moduli(self) -> np.ndarray:
        """All four level moduli, pinned entry included."""
        g = np.ones(4)
        g[[k - 1 for k in Chart(self.chart).free_levels]] = self.rho
        return g

    def populations(self) -> np.ndarray:
        g2 = self.moduli() ** 2
        return g2 / g2.sum()

    def is_normal(self) -> bool:
        return self.chart == Chart.RHO1 and not any(self.rho) and not any(self.r)


NORMAL_POINT = VariationalPoint()


@dataclass(frozen=True)
class ObservableSet:
    """Per-particle expectation values."""

    energy: float
    nu1: float
    nu2: float
    A11: float
    A22: float
    A33: float
    A44: float

    @property
    def populations(self) -> tuple[float, float, float, float]:
        return (self.A11, self.A22, self.A33, self.A44)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("energy", "nu1", "nu2", "A11", "A22", "A33", "A44")}


class RegionEnergy(NamedTuple):
    energy: float
    valid: bool


@dataclass(frozen=True)
class RegionReport:
    label: Region
    energy: float
    point: VariationalPoint
    valid: bool = True
    tie: bool = False
    tied_labels: tuple[Region, ...] = ()
    energies: dict = field(default_factory=dict)
    method: str = "analytic"


# ---------------------------------------------------------------------------
# Energy surface


def _check_point(point: VariationalPoint) -> np.ndarray:
    try:
        chart = Chart(point.chart)
    except ValueError:
        raise ChartMismatch(f"unknown chart {point.chart!r}") from None
    values = np.asarray(point.rho, dtype=float)
    if values.shape != (3,) or len(point.r) != 2:
        raise ChartMismatch(f"chart {chart.name} needs 3 moduli and 2 field amplitudes")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(point.r))):
        raise ChartMismatch("moduli and field amplitudes must be finite in the chosen chart")
    if np.any(values < 0) or min(point.r) < 0:
        raise ChartMismatch("moduli and field amplitudes must be nonnegative")
    return point.moduli()


def energy_surface(config: ModelConfig, point: VariationalPoint) -> float:
    """Variational energy per particle of the coherent trial state."""
    g = _check_point(point)
    gamma2 = float(g @ g)
    r1, r2 = point.r
    energy = config.Omega[0] * r1**2 + config.Omega[1] * r2**2
    energy += float(np.dot(config.omega, g**2)) / gamma2
    for (edge, mu), phi in zip(config.edges(), point.phi):
        r = point.r[edge.mode - 1]
        theta = point.theta[edge.mode - 1]
        energy -= 4.0 / gamma2 * mu * g[edge.i - 1] * g[edge.j - 1] * r * math.cos(theta) * math.cos(phi)
    return energy


def critical_fields(config: ModelConfig, rho, chart: Chart = Chart.RHO1) -> tuple[float, float]:
    """Stationary field amplitudes for fixed matter moduli (zero-phase branch)."""
    g = VariationalPoint(rho=tuple(float(x) for x in rho), chart=Chart(chart)).moduli()
    gamma2 = float(g @ g)
    drive = [0.0, 0.0]
    for edge, mu in config.edges():
        drive[edge.mode - 1] += mu * g[edge.i - 1] * g[edge.j - 1]
    return (2 * drive[0] / (config.Omega[0] * gamma2), 2 * drive[1] / (config.Omega[1] * gamma2))


def point_observables(config: ModelConfig, point: VariationalPoint) -> ObservableSet:
    """Expectation values over an arbitrary trial state."""
    pops = point.populations()
    return ObservableSet(
        energy_surface(config, point),
        point.r[0] ** 2,
        point.r[1] ** 2,
        *(float(p) for p in pops),
    )


# ---------------------------------------------------------------------------
# Closed-form regions


class _TwoLevel(NamedTuple):
    lower: int
    upper: int
    mode: int
    mu: float
    gap: float
    Omega: float

    @property
    def exists(self) -> bool:
        return self.mu > 0 and 4 * self.mu**2 - self.gap * self.Omega >= 0

    @property
    def energy_shift(self) -> float:
        g = 4 * self.mu**2
        return -((g - self.gap * self.Omega) ** 2) / (16 * self.mu**2 * self.Omega)

    @property
    def ratio(self) -> float:
        """Squared modulus of the upper level relative to the lower one."""
        g = 4 * self.mu**2
        return (g - self.gap * self.Omega) / (g + self.gap * self.Omega)

    @property
    def field(self) -> float:
        m2 = self.mu**2
        return math.sqrt(max(16 * m2 * m2 - (self.gap * self.Omega) ** 2, 0.0)) / (4 * self.mu * self.Omega)

    @property
    def upper_population(self) -> float:
        return 0.5 - self.gap * self.Omega / (8 * self.mu**2)


_SUBSYSTEMS = {
    (Kind.LAMBDA, Region.LAMBDA): (1, 3, 1),
    (Kind.LAMBDA, Region.S23): (2, 3, 1),
    (Kind.LAMBDA, Region.S34): (3, 4, 2),
    (Kind.N, Region.S13): (1, 3, 1),
    (Kind.N, Region.S23): (2, 3, 2),
    (Kind.N, Region.S24): (2, 4, 1),
}


def _subsystem(config: ModelConfig, region: Region) -> _TwoLevel:
    lower, upper, mode = _SUBSYSTEMS[(config.kind, region)]
    if region is Region.LAMBDA:
        # levels 1 and 2 share level 3 and mode 1: the bright combination
        # acts as a single lower level with the summed coupling strength
        mu = math.hypot(config.mu[(1, 3)], config.mu[(2, 3)])
    else:
        mu = config.mu[(lower, upper)]
    gap = config.omega[upper - 1] - config.omega[lower - 1]
    return _TwoLevel(lower, upper, mode, mu, gap, config.Omega[mode - 1])


def _require_region(config: ModelConfig, region: Region):
    if region not in regions(config.kind):
        raise RegionInvalid(f"{region.value} is not a region of the {config.kind.value} configuration")
    if region is Region.LAMBDA and not config.equal_detuning:
        raise EqualDetuningRequired("closed forms for S_Lambda need omega.1 == omega.2")


def _region_valid(config: ModelConfig, region: Region) -> bool:
    if region is Region.NORMAL:
        return True
    sub = _subsystem(config, region)
    if config.kind is Kind.LAMBDA and region in (Region.LAMBDA, Region.S23):
        # S_23 is the mu13 = 0 wall of S_Lambda; off the wall its point is
        # not stationary (the level-1 direction still lowers the energy)
        if (config.mu[(1, 3)] > 0) != (region is Region.LAMBDA):
            return False
    return sub.exists


def analytic_critical_point(config: ModelConfig, region: Region) -> VariationalPoint:
    """Closed-form critical point of a region on the zero-phase branch."""
    region = Region(region)
    _require_region(config, region)
    if region is Region.NORMAL:
        return NORMAL_POINT
    if not _region_valid(config, region):
        raise RegionInvalid(f"{region.value} does not exist for these couplings")
    sub = _subsystem(config, region)
    r = [0.0, 0.0]
    r[sub.mode - 1] = sub.field
    if region is Region.LAMBDA:
        mu13, mu23 = config.mu[(1, 3)], config.mu[(2, 3)]
        if mu23 <= MODULUS_BOUND * mu13:
            rho3 = sub.mu / mu13 * math.sqrt(sub.ratio)
            return VariationalPoint(tuple(r), (mu23 / mu13, rho3, 0.0), Chart.RHO1)
        # level 1 nearly empty: pin level 2 so the moduli stay bounded
        rho3 = sub.mu / mu23 * math.sqrt(sub.ratio)
        return VariationalPoint(tuple(r), (mu13 / mu23, rho3, 0.0), Chart.RHO2)
    chart = Chart(sub.lower)
    rho = [0.0, 0.0, 0.0]
    rho[chart.free_levels.index(sub.upper)] = math.sqrt(sub.ratio)
    return VariationalPoint(tuple(r), tuple(rho), chart)


def region_energies(config: ModelConfig) -> dict[Region, RegionEnergy]:
    """Closed-form minimum energy per region; missing regions carry +inf."""
    if config.kind is Kind.LAMBDA and not config.equal_detuning:
        raise EqualDetuningRequired("closed forms for the lambda configuration need omega.1 == omega.2")
    out = {}
    for region in regions(config.kind):
        if region is Region.NORMAL:
            out[region] = RegionEnergy(config.omega[0], True)
        elif _region_valid(config, region):
            sub = _subsystem(config, region)
            out[region] = RegionEnergy(config.omega[sub.lower - 1] + sub.energy_shift, True)
        else:
            out[region] = RegionEnergy(math.inf, False)
    return out


def observables(config: ModelConfig, region: Region) -> ObservableSet:
    """Closed-form per-particle expectation values in a region."""
    region = Region(region)
    _require_region(config, region)
    if region is Region.NORMAL:
        return ObservableSet(config.omega[0], 0.0, 0.0, 1.0, 0.0, 0.0, 0.0)
    if not _region_valid(config, region):
        raise RegionInvalid(f"{region.value} does not exist for these couplings")
    sub = _subsystem(config, region)
    nu = [0.0, 0.0]
    nu[sub.mode - 1] = (16 * sub.mu**4 - (sub.gap * sub.Omega) ** 2) / (16 * sub.mu**2 * sub.Omega**2)
    pops = [0.0, 0.0, 0.0, 0.0]
    upper = sub.upper_population
    pops[sub.upper - 1] = upper
    if region is Region.LAMBDA:
        m2 = sub.mu**2
        lower_total = (4 * m2 + sub.gap * sub.Omega) / (8 * m2 * m2)
        pops[0] = config.mu[(1, 3)] ** 2 * lower_total
        pops[1] = config.mu[(2, 3)] ** 2 * lower_total
    else:
        pops[sub.lower - 1] = 0.5 + sub.gap * sub.Omega / (8 * sub.mu**2)
    energy = config.omega[sub.lower - 1] + sub.energy_shift
    return ObservableSet(energy, nu[0], nu[1], *pops)


def _pick(energies: dict[Region, float]):
    """Minimal region with ties resolved towards the later label."""
    best = min(energies.values())
    tied = tuple(r for r, e in energies.items() if e - best <= TIE_TOL)
    return tied[-1], best, tied


def classify(config: ModelConfig, numeric_fallback: bool = True) -> RegionReport:
    """Global variational minimum and its phase region.

    Lambda configurations without equal detuning have no closed forms; with
    ``numeric_fallback`` they are minimized numerically and labelled by the
    populated levels and modes.
    """
    try:
        table = region_energies(config)
    except EqualDetuningRequired:
        if not numeric_fallback:
            raise
        point, energy = minimize_numeric(config)
        label = _label_from_point(config, point)
        return RegionReport(label, energy, point, True, False, (label,), {}, "numeric")
    valid = {r: e.energy for r, e in table.items() if e.valid}
    label, energy, tied = _pick(valid)
    point = analytic_critical_point(config, label)
    return RegionReport(label, energy, point, True, len(tied) > 1, tied, dict(table))


def _label_from_point(config: ModelConfig, point: VariationalPoint) -> Region:
    pops = point.populations()
    on = pops > LABEL_THRESHOLD
    photons = np.square(point.r) > LABEL_THRESHOLD
    if config.kind is Kind.LAMBDA:
        if on[3] or photons[1]:
            return Region.S34
        if on[2] or photons[0]:
            return Region.LAMBDA if on[0] else Region.S23
        return Region.NORMAL
    if photons[1]:
        return Region.S23
    if on[3]:
        return Region.S24
    if on[2] or photons[0]:
        return Region.S13
    return Region.NORMAL


# ---------------------------------------------------------------------------
# Numeric oracle


class _Params(NamedTuple):
    Omega: np.ndarray  # (C, 2)
    omega: np.ndarray  # (C, 4)
    mu: np.ndarray     # (C, 3)
    lo: np.ndarray     # (C, 3) lower level index per edge, 0-based
    hi: np.ndarray     # (C, 3)
    mode: np.ndarray   # (C, 3) 0-based


def _params(configs) -> _Params:
    rows = []
    for c in configs:
        edges = coupling_edges(c.kind)
        rows.append((
            c.Omega,
            c.omega,
            [c.mu[e.pair] for e in edges],
            [e.i - 1 for e in edges],
            [e.j - 1 for e in edges],
            [e.mode - 1 for e in edges],
        ))
    cols = list(zip(*rows))
    return _Params(*(np.asarray(col, dtype=float if k < 3 else int) for k, col in enumerate(cols)))


_FREE = np.array([Chart(c).free_levels for c in (1, 2, 3)]) - 1  # (3 charts, 3)


def _surface_batch(x, chart, which, p: _Params) -> np.ndarray:
    """Zero-phase energy for rows ``x = (r1, r2, m_a, m_b, m_c)``."""
    n = x.shape[0]
    g = np.ones((n, 4))
    np.put_along_axis(g, _FREE[chart - 1], x[:, 2:], axis=1)
    g2 = g * g
    gamma2 = g2.sum(axis=1)
    r = x[:, :2]
    Om, om, mu = p.Omega[which], p.omega[which], p.mu[which]
    lo, hi, mode = p.lo[which], p.hi[which], p.mode[which]
    coupling = (
        mu
        * np.take_along_axis(g, lo, axis=1)
        * np.take_along_axis(g, hi, axis=1)
        * np.take_along_axis(r, mode, axis=1)
    ).sum(axis=1)
    return (Om * r * r).sum(axis=1) + ((om * g2).sum(axis=1) - 4.0 * coupling) / gamma2


def surface_array(config: ModelConfig, chart: Chart, x) -> np.ndarray:
    """Zero-phase energy at rows ``x = (r1, r2, m_a, m_b, m_c)`` in ``chart``.

    Signed moduli are accepted (a negative modulus is the pi phase branch),
    which keeps finite-difference stencils valid on the boundary.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    return _surface_batch(x, np.full(n, int(chart)), np.zeros(n, dtype=int), _params([config]))


def gradient(config: ModelConfig, point: VariationalPoint, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of the zero-phase surface at ``point``."""
    x = np.array([*point.r, *point.rho])
    shifts = step * np.eye(5)
    values = surface_array(config, point.chart, np.concatenate([x + shifts, x - shifts]))
    return (values[:5] - values[5:]) / (2 * step)


def default_seeds(config: ModelConfig, n_quasi: int = 16):
    """Seed points ``(chart, moduli)``: valid analytic rows plus a Sobol set per chart."""
    seeds = []
    try:
        table = region_energies(config)
        for region, entry in table.items():
            if entry.valid:
                pt = analytic_critical_point(config, region)
                seeds.append((Chart(pt.chart), tuple(pt.rho)))
    except EqualDetuningRequired:
        # S_Lambda has no closed form here but the two-level rows still do
        for region in regions(config.kind):
            if region in (Region.NORMAL, Region.LAMBDA) or not _region_valid(config, region):
                continue
            pt = analytic_critical_point(config, region)
            seeds.append((Chart(pt.chart), tuple(pt.rho)))
    quasi = 3.0 * qmc.Sobol(d=3, scramble=False).random(n_quasi)
    for chart in Chart:
        seeds.extend((chart, tuple(q)) for q in quasi)
    return seeds


def minimize_numeric_many(configs, seeds=None, tol: float = 1e-12, max_evals: int = 100_000):
    """Numeric zero-phase minimum for each config, vectorized across all runs.

    ``seeds`` is ``None`` (defaults per config) or one seed list per config,
    each entry a ``(chart, moduli)`` pair. Returns ``(point, energy)`` per
    config.
    """
    configs = list(configs)
    params = _params(configs)
    seed_lists = [default_seeds(c) for c in configs] if seeds is None else [list(s) for s in seeds]
    which, charts, x0 = [], [], []
    for k, (cfg, slist) in enumerate(zip(configs, seed_lists)):
        if not slist:
            raise ValueError("empty seed list")
        for chart, rho in slist:
            rho = tuple(float(v) for v in rho)
            if len(rho) != 3 or not all(math.isfinite(v) for v in rho):
                raise ValueError(f"seed moduli must be 3 finite numbers, got {rho}")
            which.append(k)
            charts.append(int(chart))
            x0.append((*critical_fields(cfg, rho, Chart(chart)), *rho))
    which = np.asarray(which)
    charts = np.asarray(charts)

    def fun(x, runs):
        return _surface_batch(x, charts[runs], which[runs], params)

    res = minimize_batch(
        fun, np.asarray(x0), lower=0.0, upper=MODULUS_BOUND, fatol=tol, xatol=1e-10, max_evals=max_evals
    )
    out = []
    for k in range(len(configs)):
        mine = np.flatnonzero(which == k)
        if not res.converged[mine].any():
            raise NoConvergence(f"no simplex run converged within {max_evals} evaluations")
        ok = mine[res.converged[mine]]
        best = ok[np.argmin(res.fun[ok])]
        x = res.x[best]
        point = VariationalPoint((float(x[0]), float(x[1])), tuple(float(v) for v in x[2:]), Chart(int(charts[best])))
        out.append((point, float(res.fun[best])))
    return out


def minimize_numeric(config: ModelConfig, seeds=None, tol: float = 1e-12, max_evals: int = 100_000):
    """Derivative-free minimum of the energy surface on the zero-phase branch.

    Every seed starts a Nelder-Mead search in its own chart with moduli
    boxed to ``[0, 1e3]``; the lowest converged result is returned as
    ``(point, energy)``.
    """
    return minimize_numeric_many([config], None if seeds is None else [seeds], tol, max_evals)[0]
