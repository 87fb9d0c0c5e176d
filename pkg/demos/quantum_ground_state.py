"""
Exact ground state by sector diagonalization
============================================

The Hamiltonian conserves the parities of a few linear forms in the
occupation numbers, so each parity sector is diagonalized on its own. The
truncation M_max on the total excitation number is raised until the ground
energy settles.
"""
from fourlevel import lambda_config, n_config
from fourlevel.quantum import converge, enumerate_basis, ground_state, quantum_observables
from fourlevel.variational import classify

cfg = lambda_config(mu13=0.25, mu23=0.6, mu34=0.25)
print(enumerate_basis(cfg, "ee", 2))

for M in (2, 6, 10, 20):
    res = ground_state(cfg, M)
    print(f"M_max={M:3d}  E_g={res.energy:.12f}  sector={res.sector.label}  {res.sector_energies}")

res = converge(cfg, tol=1e-10)
print("converged at M_max =", res.M_max, "E_g =", res.energy)
print("variational bound  ", classify(cfg).energy)
print(quantum_observables(cfg, res).as_dict())

# per-particle energy for a few atoms; the variational value is the large-Na limit
cfg = n_config(0.65, 0.25, 1.5)
for Na in (1, 2, 3):
    res = converge(cfg.replace(Na=Na), tol=1e-8)
    print(f"Na={Na}: E_g/Na={res.energy_per_particle:.6f} sector={res.sector.label} M_max={res.M_max}")
print("variational:", classify(cfg).energy)
