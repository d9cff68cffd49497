"""Dissipative kinetics: a drifting hot distribution relaxes to the Maxwellian.

The thermodynamic potential decreases at the rate given by the entropy
production, and the second moment approaches 1/E* like exp(-2 Lambda E* t).
"""
import math
import warnings

import numpy as np

from mesothermo import (BoundaryFluxWarning, Integrator, PhaseGrid, boltzmann_entropy, evolve,
                        fokker_planck_rhs, fp_dt_max, fp_entropy_production, kinetic_energy,
                        maxwellian, number, thermo_potential)

g = PhaseGrid(1, 256, 1.0, 8.0)
E = kinetic_energy(g)
mult = (1.0, 0.5 * math.log(2 * math.pi) - 1.0)
Phi = thermo_potential(boltzmann_entropy(g), E, number(g), *mult)
dt_max = fp_dt_max(g, 1.0, 1.0)

with warnings.catch_warnings():
    warnings.simplefilter("ignore", BoundaryFluxWarning)
    run = evolve(maxwellian(g, 1.0, 0.3, 2.0),
                 lambda f: fokker_planck_rhs(f, E, 1.0, mult, g),
                 Integrator("rk4", 0.8 * dt_max, dt_max), 6.0,
                 {"Phi": Phi.value, "sigma": lambda f: fp_entropy_production(f, E, 1.0, mult, g),
                  "m2": lambda f: 2 * E.value(f)}, stride=250)

d = run.diagnostics
excess0 = d.column("m2")[0] - 1.0
for t, p, s, m2 in zip(d.column("t"), d.column("Phi"), d.column("sigma"), d.column("m2")):
    print(f"t={t:5.2f}  Phi={p:+.10f}  sigma={s:.3e}  <v^2>-1={m2 - 1:+.3e}  "
          f"predicted={excess0 * np.exp(-2.0 * t):+.3e}")
