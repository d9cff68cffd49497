"""Hydrodynamic fields coupled to a distribution function.

With the additive Sackur-Tetrode energy the Euler part ignores f entirely;
adding velocity-space friction moves energy into entropy without changing
the total energy.
"""
import numpy as np

from mesothermo import (ExtendedState, PhaseGrid, energy_audit, entropy_production_density,
                        eta_family, maxwellian, pg_euler_part, sackur_tetrode_energy)

g = PhaseGrid(32, 48, 1.0, 6.0)
E, eta = sackur_tetrode_energy(g), eta_family("boltzmann")
k = 2 * np.pi
rho = 1 + 0.1 * np.sin(k * g.r)
x = ExtendedState(g, rho, 0.05 * np.cos(k * g.r), 6.3 * rho, maxwellian(g, 1.0, 0.2, 1.1))
y = ExtendedState(g, x.rho, x.u, x.s, 3.0 * x.f)

same = all(np.array_equal(a, b) for a, b in zip(pg_euler_part(x, E), pg_euler_part(y, E)))
print(f"Euler part identical after tripling f: {same}")
for lam in (0.1, 1.0, 10.0):
    a = energy_audit(x, E, eta, lam, epsilon=0.5)
    sig = entropy_production_density(x, E, lam)
    print(f"Lambda={lam:5.1f}  friction power={a['fp_part']:+.3e}  "
          f"T*entropy production={a['production_part']:+.3e}  net={a['rate_dissipative']:+.1e}  "
          f"min sigma_s={sig.min():.3e}")
