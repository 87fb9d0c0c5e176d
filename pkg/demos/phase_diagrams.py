"""
Variational phase diagrams and transition order
===============================================

Region labels on a coarse grid, the boundaries found by bisection on the
closed-form energies, and the order of each transition read off the jump in
the total photon number.
"""
import numpy as np

from fourlevel import lambda_config, n_config
from fourlevel.model import Region as R
from fourlevel.phasediag import ScanSpec, grid_2d, separatrix_root, transition_order

SHORT = {R.NORMAL: ".", R.LAMBDA: "L", R.S13: "a", R.S23: "b", R.S24: "c", R.S34: "d"}


def show(spec):
    rows = grid_2d(spec)
    n, m = spec.steps
    grid = np.array([SHORT[r.region] for r in rows]).reshape(n, m)
    for line in grid.T[::-1]:
        print("".join(line))


print("lambda scheme, mu13 across, mu34 up (mu23 = 0.25)")
show(ScanSpec(lambda_config(0, 0.25, 0), ("mu.13", "mu.34"), ((0, 1.5), (0, 1.5)), (40, 20)))
print("N scheme, mu13 across, mu24 up (mu23 = 0.25)")
show(ScanSpec(n_config(0, 0.25, 0), ("mu.13", "mu.24"), ((0, 1.5), (0, 1.5)), (40, 20)))

cases = [
    (lambda_config(0.25, 0, 0), (R.NORMAL, R.LAMBDA), "mu.23", (0.1, 1.0)),
    (lambda_config(0, 0, 0), (R.NORMAL, R.S34), "mu.34", (0.2, 1.0)),
    (lambda_config(0.25, 0.5, 0), (R.LAMBDA, R.S34), "mu.34", (0.2, 2.0)),
    (n_config(0, 0.25, 0.5), (R.NORMAL, R.S13), "mu.13", (0.1, 0.9)),
    (n_config(0.65, 0.25, 0), (R.S13, R.S24), "mu.24", (0.9, 1.4)),
]
for cfg, pair, path, bracket in cases:
    root = separatrix_root(cfg, pair, path, bracket)
    rec = transition_order(cfg, root, path)
    print(f"{pair[0].value:>8s} -> {pair[1].value:<8s} at {path}={root:.8f}: {rec.order} order (jump {rec.jump:.3g})")
