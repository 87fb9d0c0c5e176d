"""Parameter scans, region grids, separatrices and transition order."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
from scipy.optimize import bisect

from .model import ConfigError, ModelConfig, Region
from .quantum import converge, quantum_observables
from .variational import (
    ObservableSet,
    classify,
    observables,
    point_observables,
    region_energies,
)

ORDER_THRESHOLD = 1e-2


class NoBracket(ValueError):
    pass


@dataclass(frozen=True)
class ScanSpec:
    """What to vary and how to evaluate each point.

    ``paths``, ``ranges`` and ``steps`` run in parallel: one entry per
    varied parameter (dotted names such as ``mu.24``).
    """

    base: ModelConfig
    paths: tuple[str, ...]
    ranges: tuple[tuple[float, float], ...]
    steps: tuple[int, ...]
    method: str = "variational"
    tol: float = 1e-10
    M_cap: int = 120
    M_start: int = 10
    M_step: int = 10

    def __post_init__(self):
        if not (len(self.paths) == len(self.ranges) == len(self.steps)) or not self.paths:
            raise ConfigError("paths, ranges and steps must have equal, nonzero length", field="vary")
        for path, (lo, hi), n in zip(self.paths, self.ranges, self.steps):
            self.base.get_param(path)
            if not lo < hi:
                raise ConfigError(f"range for {path} needs lo < hi, got [{lo}, {hi}]", field=path)
            if n < 2:
                raise ConfigError(f"steps for {path} must be >= 2", field=path)
        if self.method not in ("variational", "quantum"):
            raise ConfigError(f"method must be 'variational' or 'quantum', got {self.method!r}", field="method")

    def axis(self, k: int = 0) -> np.ndarray:
        lo, hi = self.ranges[k]
        return np.linspace(lo, hi, self.steps[k])


@dataclass
class ScanRow:
    param: float
    region: Region | None
    obs: ObservableSet | None
    error: str | None = None
    sector: str | None = None
    M_max: int | None = None
    converged: bool = True


@dataclass
class GridRow:
    p: float
    q: float
    region: Region | None
    energy: float
    tied: tuple[Region, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class TransitionRecord:
    location: float
    left: Region
    right: Region
    order: str
    jump: float
    population_jump: float = 0.0
    details: dict = field(default_factory=dict)


def _variational_point(config: ModelConfig):
    report = classify(config)
    if report.method == "analytic":
        obs = observables(config, report.label)
    else:
        obs = point_observables(config, report.point)
    return report, obs


def _scan_point(spec: ScanSpec, value: float) -> ScanRow:
    try:
        config = spec.base.with_param(spec.paths[0], value)
        if spec.method == "variational":
            report, obs = _variational_point(config)
            return ScanRow(value, report.label, obs)
        result = converge(config, spec.tol, spec.M_start, spec.M_step, spec.M_cap)
        return ScanRow(
            value, None, quantum_observables(config, result), None, result.sector.label, result.M_max, result.converged
        )
    except Exception as exc:  # recorded per point; the scan carries on
        return ScanRow(value, None, None, f"{type(exc).__name__}: {exc}")


def _run(func, items, workers: int):
    if workers <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(func, items))


def scan_1d(spec: ScanSpec, workers: int = 1) -> list[ScanRow]:
    """One row per grid value of the first varied parameter, in order."""
    return _run(partial(_scan_point, spec), [float(v) for v in spec.axis(0)], workers)


def _grid_point(spec: ScanSpec, pq) -> GridRow:
    p, q = pq
    try:
        config = spec.base.with_param(spec.paths[0], p).with_param(spec.paths[1], q)
        if spec.method == "quantum":
            result = converge(config, spec.tol, spec.M_start, spec.M_step, spec.M_cap)
            return GridRow(p, q, None, result.energy_per_particle)
        report = classify(config)
        return GridRow(p, q, report.label, report.energy, report.tied_labels if report.tie else ())
    except Exception as exc:
        return GridRow(p, q, None, math.nan, (), f"{type(exc).__name__}: {exc}")


def grid_2d(spec: ScanSpec, workers: int = 1) -> list[GridRow]:
    """Region label and minimum energy on a row-major ``(p, q)`` grid."""
    if len(spec.paths) != 2:
        raise ConfigError("grid_2d needs exactly two varied parameters", field="vary")
    points = [(float(p), float(q)) for p in spec.axis(0) for q in spec.axis(1)]
    return _run(partial(_grid_point, spec), points, workers)


def _energy_gap(config: ModelConfig, pair, path: str, value: float) -> float:
    table = region_energies(config.with_param(path, value))
    a, b = (table[Region(r)].energy for r in pair)
    if math.isinf(a) and math.isinf(b):
        raise NoBracket(f"neither {pair[0]} nor {pair[1]} exists at {path}={value}")
    if math.isinf(a):
        return 1.0
    if math.isinf(b):
        return -1.0
    return a - b


def separatrix_root(config: ModelConfig, pair: Sequence[Region], path: str, bracket, xtol: float = 1e-10) -> float:
    """Parameter value in ``bracket`` where the two region energies cross.

    A missing region counts as infinitely high, so existence boundaries
    (e.g. normal to a second-order collective region) are found too.
    """
    lo, hi = bracket
    f_lo = _energy_gap(config, pair, path, lo)
    f_hi = _energy_gap(config, pair, path, hi)
    if f_lo == 0:
        return float(lo)
    if f_hi == 0:
        return float(hi)
    if (f_lo > 0) == (f_hi > 0):
        raise NoBracket(f"{pair[0]} - {pair[1]} does not change sign on [{lo}, {hi}]")
    return float(bisect(lambda x: _energy_gap(config, pair, path, x), lo, hi, xtol=xtol, maxiter=500))


def transition_order(
    config: ModelConfig,
    location: float,
    path: str,
    epsilon: float = 1e-4,
    threshold: float = ORDER_THRESHOLD,
) -> TransitionRecord:
    """First or second order from the jump of the total photon number across a boundary."""
    left_report, left = _variational_point(config.with_param(path, location - epsilon))
    right_report, right = _variational_point(config.with_param(path, location + epsilon))
    jump = abs((right.nu1 + right.nu2) - (left.nu1 + left.nu2))
    pop_jump = max(abs(a - b) for a, b in zip(left.populations, right.populations))
    return TransitionRecord(
        location,
        left_report.label,
        right_report.label,
        "first" if jump > threshold else "second",
        jump,
        pop_jump,
        {"left": left, "right": right},
    )
