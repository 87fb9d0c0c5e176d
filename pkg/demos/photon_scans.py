"""
Photon numbers and populations along coupling scans
===================================================

Quantum scans at one atom. In the lambda scheme mode 1 carries the photons
when mu23 is varied and mode 2 takes over once mu34 is strong. In the N
scheme the population moves from levels 1 and 3 to levels 2 and 4 near the
variational boundary.
"""
from fourlevel import lambda_config, n_config
from fourlevel.model import Region
from fourlevel.phasediag import ScanSpec, scan_1d, separatrix_root

spec = ScanSpec(lambda_config(0.25, 0, 0.25), ("mu.23",), ((0.0, 1.2),), (13,), method="quantum")
print("mu23    nu1      nu2")
for row in scan_1d(spec, workers=2):
    print(f"{row.param:.2f}  {row.obs.nu1:.5f}  {row.obs.nu2:.5f}")

spec = ScanSpec(lambda_config(0.25, 0.25, 0), ("mu.34",), ((0.0, 1.5),), (7,), method="quantum")
print("mu34    nu1      nu2")
for row in scan_1d(spec):
    print(f"{row.param:.2f}  {row.obs.nu1:.5f}  {row.obs.nu2:.5f}")

base = n_config(0.65, 0.25, 0)
print("variational S_13/S_24 boundary:", separatrix_root(base, (Region.S13, Region.S24), "mu.24", (0.9, 1.4)))
spec = ScanSpec(base, ("mu.24",), ((0.9, 1.4),), (11,), method="quantum")
print("mu24   A11+A33  A22+A44  sector")
for row in scan_1d(spec):
    o = row.obs
    print(f"{row.param:.2f}   {o.A11 + o.A33:.4f}   {o.A22 + o.A44:.4f}   {row.sector}")
