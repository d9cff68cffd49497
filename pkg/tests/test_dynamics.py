import warnings

import numpy as np
import pytest

from mesothermo import dynamics as dyn
from mesothermo import functionals as fn
from mesothermo.errors import NumericalBlowup, StabilityError
from mesothermo.grid import PhaseGrid, maxwellian

from conftest import N_STAR_UNIT, smooth_bump


def test_bracket_antisymmetric(rng):
    g = PhaseGrid(24, 32, 2 * np.pi, 6.0)
    f = smooth_bump(g, 0.2, 0.3)
    R, V = g.mesh()
    A = np.sin(R) * V ** 2 + 0.3 * V
    B = np.cos(2 * R) * V + 0.1 * V ** 2
    br = dyn.KineticBracket(g)
    ab = br.evaluate(A, B, f)
    assert abs(ab + br.evaluate(B, A, f)) <= 1e-13 * abs(ab)
    assert abs(br.evaluate(A, A, f)) <= 1e-14


def test_hamiltonian_field_conserves_mass_and_energy_rate():
    g = PhaseGrid(32, 48, 2.0, 6.0)
    f = smooth_bump(g, 0.1, 0.4)
    E = fn.kinetic_energy(g)
    rhs = dyn.hamiltonian_rhs(f, E, g)
    assert abs(g.integrate(rhs)) <= 1e-13
    assert abs(g.inner(E.derivative(f), rhs)) <= 1e-13


def test_free_transport_short_run_conserves_invariants():
    g = PhaseGrid(64, 64, 8.0, 4.0)
    f0 = smooth_bump(g, 0.05, 0.5)
    E = fn.kinetic_energy(g)
    funcs = {"E": E.value, "N": fn.number(g).value,
             "C2": fn.casimir(g, fn.eta_family("square")).value}
    integ = dyn.Integrator("rk4", 2e-3, dyn.transport_dt_max(g, E.derivative(f0)))
    res = dyn.evolve(f0, lambda f: dyn.hamiltonian_rhs(f, E, g), integ, 0.2, funcs, stride=20)
    for k in funcs:
        col = res.diagnostics.column(k)
        assert abs(col[-1] / col[0] - 1) <= 1e-7
    assert len(res.diagnostics) == 6
    assert integ.step_count == 100


@pytest.mark.parametrize("mean", [0.0, 0.4])
def test_fokker_planck_fixed_point_and_mass(mean):
    g = PhaseGrid(2, 128, 1.0, 8.0)
    E = fn.kinetic_energy(g)
    mult = (1.0, N_STAR_UNIT)
    M = np.exp(-1 - N_STAR_UNIT - g.v ** 2 / 2) * np.ones((2, 1))
    assert np.max(np.abs(dyn.fokker_planck_rhs(M, E, 1.0, mult, g))) <= 1e-13
    f = maxwellian(g, 1.0, mean, 1.5)
    rhs = dyn.fokker_planck_rhs(f, E, 1.0, mult, g, warn_threshold=None)
    assert np.allclose(g.integrate_v(rhs), 0.0, atol=1e-13)
    sigma = dyn.fp_entropy_production(f, E, 1.0, mult, g)
    Phi = fn.thermo_potential(fn.boltzmann_entropy(g), E, fn.number(g), *mult)
    assert sigma >= 0
    assert g.inner(Phi.derivative(f), rhs) == pytest.approx(-sigma, rel=1e-10)


def test_fokker_planck_boundary_warning():
    g = PhaseGrid(1, 32, 1.0, 2.0)
    f = maxwellian(g, 1.0, 0.0, 3.0)
    with pytest.warns(dyn.BoundaryFluxWarning):
        dyn.fokker_planck_rhs(f, fn.kinetic_energy(g), 1.0, (1.0, 0.0), g)


def test_fokker_planck_relaxation_monotone():
    g = PhaseGrid(1, 128, 1.0, 8.0)
    E = fn.kinetic_energy(g)
    mult = (1.0, N_STAR_UNIT)
    Phi = fn.thermo_potential(fn.boltzmann_entropy(g), E, fn.number(g), *mult)
    dt_max = dyn.fp_dt_max(g, 1.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", dyn.BoundaryFluxWarning)
        res = dyn.evolve(maxwellian(g, 1.0, 0.3, 1.3),
                         lambda f: dyn.fokker_planck_rhs(f, E, 1.0, mult, g),
                         dyn.Integrator("rk4", 0.8 * dt_max, dt_max), 1.0, {"Phi": Phi.value})
    assert np.all(np.diff(res.diagnostics.column("Phi")) <= 1e-14)


def test_generic_rhs_is_sum_of_parts():
    g = PhaseGrid(16, 32, 2 * np.pi, 6.0)
    f = smooth_bump(g, 0.2, 0.3)
    E = fn.kinetic_energy(g)
    Xi = fn.fokker_planck_dissipation(g, 0.5)
    Phi = fn.thermo_potential(fn.boltzmann_entropy(g), E, fn.number(g), 1.0, 0.0)
    total = dyn.generic_rhs(f, g, E, Xi, Phi)
    parts = dyn.hamiltonian_rhs(f, E, g) + dyn.gradient_rhs(f, Xi, Phi)
    assert np.allclose(total, parts, atol=1e-14)
    assert np.array_equal(dyn.generic_rhs(f, g, E), dyn.hamiltonian_rhs(f, E, g))


def test_integrator_stability_guard():
    integ = dyn.Integrator("rk4", 0.1, dt_max=0.05)
    with pytest.raises(StabilityError):
        dyn.evolve(np.ones(3), lambda x: -x, integ, 1.0)
    integ.override = True
    res = dyn.evolve(np.ones(3), lambda x: -x, integ, 1.0)
    assert np.allclose(res.final, np.exp(-1.0), rtol=1e-5)
    with pytest.raises(ValueError):
        dyn.Integrator("nope")


def test_zero_dt_returns_initial_state():
    res = dyn.evolve(np.ones(2), lambda x: x, dyn.Integrator("rk4", 0.0), 1.0)
    assert np.array_equal(res.final, np.ones(2))


def test_blowup_carries_last_good_state():
    integ = dyn.Integrator("rk4", 1.0)
    with pytest.raises(NumericalBlowup) as exc, np.errstate(over="ignore", invalid="ignore"):
        dyn.evolve(np.ones(2), lambda x: x ** 3, integ, 50.0)
    assert np.all(np.isfinite(exc.value.last_good))
    assert exc.value.step >= 0


def test_diagnostics_csv(tmp_path):
    d = dyn.Diagnostics(["a"])
    d.record(0.0, {"a": 1.0})
    d.record(0.5, {"a": 2.0})
    with pytest.raises(ValueError):
        d.record(0.5, {"a": 3.0})
    d.to_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "t,a" and len(lines) == 3
