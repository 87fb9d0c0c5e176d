"""
Variational regions of the four-level atoms
===========================================

Closed-form minima of the coherent-state energy surface, checked against a
blind numerical minimization of the same surface.
"""
from fourlevel import lambda_config, n_config
from fourlevel.variational import classify, minimize_numeric, observables, region_energies

# lambda scheme: both lower levels talk to level 3 through mode 1
cfg = lambda_config(mu13=0.25, mu23=0.6, mu34=0.25)
for region, entry in region_energies(cfg).items():
    print(f"{region.value:9s} valid={entry.valid!s:5s} E={entry.energy:.7f}")

report = classify(cfg)
print("winner:", report.label.value, "at", report.point)
print(observables(cfg, report.label).as_dict())

# the numerical minimum agrees
_, e_num = minimize_numeric(cfg)
print(f"numeric minimum {e_num:.10f} vs closed form {report.energy:.10f}")

# N scheme: the closed-form regions do not always hold the minimum.
# Here all four levels and both modes are active and the surface goes lower.
cfg = n_config(mu13=0.543, mu23=0.433, mu24=1.080)
point, e_num = minimize_numeric(cfg)
print(f"N scheme: best region {classify(cfg).label.value} E={classify(cfg).energy:.6f}, "
      f"numeric E={e_num:.6f}, populations {point.populations().round(3)}")
