"""Static reduction: from a kinetic entropy to the ideal-gas relation.

Minimizes -S + E* E + N* N over distributions on a velocity grid, compares
the minimizer with the analytic Maxwellian, then transforms back to S(E, N)
and checks it against the closed-form ideal-gas entropy.
"""
import math

import numpy as np

from mesothermo import (DualRelation, PhaseGrid, back_transform, boltzmann_entropy, kinetic_energy,
                        maxwellian, number, reduce_static)

g = PhaseGrid(1, 256, 1.0, 8.0)
S, E, N = boltzmann_entropy(g), kinetic_energy(g), number(g)
N_star = 0.5 * math.log(2 * math.pi) - 1.0

res = reduce_static(S, E, N, 1.0, N_star, np.full(g.shape, 0.1))
err = np.max(np.abs(res.minimizer - maxwellian(g)) / maxwellian(g))
print(f"Newton iterations: {res.iterations}, max relative error to Maxwellian: {err:.2e}")

dual = DualRelation(S, E, N, np.full(g.shape, 0.1))
for E_val, N_val in [(0.5, 1.0), (1.0, 1.0), (1.0, 2.0)]:
    s_num, (E_star, N_star), _ = back_transform(dual, E_val, N_val)
    s_ref = N_val * (math.log(1.0 / N_val) + 0.5 * math.log(2 * math.pi * 2 * E_val / N_val) + 0.5)
    print(f"E={E_val:.2f} N={N_val:.2f}  S={s_num:.10f}  closed form={s_ref:.10f}  "
          f"T=1/E*={1 / E_star:.6f}")
