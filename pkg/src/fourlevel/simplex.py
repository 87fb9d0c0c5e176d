"""Batched Nelder-Mead simplex minimization.

Runs many independent simplex searches in lock-step so the objective can be
evaluated as one vectorized call per step. Box bounds are enforced by
clipping trial points.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NoConvergence(RuntimeError):
    pass


@dataclass
class BatchResult:
    x: np.ndarray          # (B, d) best point per run
    fun: np.ndarray        # (B,) best value per run
    converged: np.ndarray  # (B,) bool
    nfev: np.ndarray       # (B,) evaluations spent per run


def _initial_simplex(x0, step, rel_step, lower, upper):
    B, d = x0.shape
    sim = np.repeat(x0[:, None, :], d + 1, axis=1)
    for k in range(d):
        h = step + rel_step * np.abs(x0[:, k])
        up = x0[:, k] + h
        # step inwards when the forward vertex would leave the box
        sim[:, k + 1, k] = np.where(up <= upper[k], up, x0[:, k] - h)
    return np.clip(sim, lower, upper)


def minimize_batch(
    fun,
    x0,
    lower=None,
    upper=None,
    xatol=1e-10,
    fatol=1e-14,
    max_evals=100_000,
    step=0.25,
    rel_step=0.05,
) -> BatchResult:
    """Minimize ``fun`` from every row of ``x0``.

    ``fun`` maps an ``(m, d)`` array of points together with an ``(m,)`` array
    of run indices to ``(m,)`` values; the run index lets the caller attach
    per-run parameters. Uses the dimension-adaptive coefficients of Gao and
    Han, which behave better than the classic ones beyond a few dimensions.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=float))
    B, d = x0.shape
    lower = np.full(d, -np.inf) if lower is None else np.broadcast_to(np.asarray(lower, float), (d,))
    upper = np.full(d, np.inf) if upper is None else np.broadcast_to(np.asarray(upper, float), (d,))

    alpha, gamma = 1.0, 1.0 + 2.0 / d
    rho, sigma = 0.75 - 1.0 / (2 * d), 1.0 - 1.0 / d

    sim = _initial_simplex(np.clip(x0, lower, upper), step, rel_step, lower, upper)
    runs = np.arange(B)
    fsim = fun(sim.reshape(-1, d), np.repeat(runs, d + 1)).reshape(B, d + 1)
    nfev = np.full(B, d + 1)
    converged = np.zeros(B, dtype=bool)

    idx = np.arange(B)
    while idx.size:
        s, f = sim[idx], fsim[idx]
        order = np.argsort(f, axis=1)
        s = np.take_along_axis(s, order[:, :, None], axis=1)
        f = np.take_along_axis(f, order, axis=1)

        xspread = np.max(np.abs(s[:, 1:] - s[:, :1]), axis=(1, 2))
        fspread = np.max(np.abs(f[:, 1:] - f[:, :1]), axis=1)
        done = (xspread <= xatol) | (fspread <= fatol)
        converged[idx[done]] = True
        stay = ~done & (nfev[idx] < max_evals)
        sim[idx], fsim[idx] = s, f
        idx, s, f = idx[stay], s[stay], f[stay]
        if idx.size == 0:
            break

        centroid = s[:, :-1].mean(axis=1)
        worst = s[:, -1]
        xr = np.clip(centroid + alpha * (centroid - worst), lower, upper)
        fr = fun(xr, idx)
        nfev[idx] += 1

        f0, fn1, fn = f[:, 0], f[:, -2], f[:, -1]
        expand = fr < f0
        outside = ~expand & (fr >= fn1) & (fr < fn)
        inside = ~expand & (fr >= fn)
        # second trial point: expansion, outside or inside contraction
        second = expand | outside | inside
        xs = np.where(
            expand[:, None],
            centroid + gamma * (xr - centroid),
            np.where(outside[:, None], centroid + rho * (xr - centroid), centroid - rho * (centroid - worst)),
        )
        xs = np.clip(xs, lower, upper)
        fs = np.full_like(fr, np.inf)
        if second.any():
            fs[second] = fun(xs[second], idx[second])
            nfev[idx[second]] += 1

        new_x, new_f = xr.copy(), fr.copy()
        take = (expand & (fs < fr)) | (outside & (fs <= fr)) | (inside & (fs < fn))
        new_x[take], new_f[take] = xs[take], fs[take]
        shrink = (outside | inside) & ~take

        keep = ~shrink
        s[keep, -1] = new_x[keep]
        f[keep, -1] = new_f[keep]
        if shrink.any():
            ss = s[shrink]
            ss[:, 1:] = np.clip(ss[:, :1] + sigma * (ss[:, 1:] - ss[:, :1]), lower, upper)
            sidx = idx[shrink]
            f[shrink, 1:] = fun(ss[:, 1:].reshape(-1, d), np.repeat(sidx, d)).reshape(-1, d)
            s[shrink] = ss
            nfev[sidx] += d
        sim[idx], fsim[idx] = s, f

    return BatchResult(sim[:, 0].copy(), fsim[:, 0].copy(), converged, nfev)
