import numpy as np
import pytest
from hypothesis import given, strategies as st

from mesothermo import functionals as fn
from mesothermo.errors import ConstructionError, DomainError
from mesothermo.grid import ExtendedState, PhaseGrid
from mesothermo.poisson_grad import local_equilibrium

from conftest import smooth_bump


@pytest.fixture
def state():
    g = PhaseGrid(16, 32, 1.0, 6.0)
    f = smooth_bump(g, amplitude=0.2, mean=0.3)
    R, V = g.mesh()
    df = f * (0.3 * np.sin(2 * np.pi * R) * V + 0.1 * np.cos(2 * np.pi * R))
    return g, f, df


@pytest.mark.parametrize("build", [
    lambda g: fn.boltzmann_entropy(g),
    lambda g: fn.boltzmann_entropy(g, k_B=2.0),
    lambda g: fn.kinetic_energy(g, m=1.7),
    lambda g: fn.number(g),
    lambda g: fn.casimir(g, fn.eta_family("square")),
    lambda g: fn.casimir(g, fn.eta_family("neg_flogf")),
    lambda g: fn.casimir(g, fn.eta_family("boltzmann", k_B=1.0, h=0.7)),
    lambda g: fn.thermo_potential(fn.boltzmann_entropy(g), fn.kinetic_energy(g), fn.number(g), 1.3, -0.2),
])
def test_gateaux_derivatives_match_finite_differences(state, build):
    g, f, df = state
    assert fn.gateaux_check(build(g), f, df) <= 1e-7


@pytest.mark.parametrize("factory", [fn.sackur_tetrode_energy, fn.kinetic_coupled_energy])
def test_state_energy_derivatives(factory):
    g = PhaseGrid(16, 32, 1.0, 6.0)
    k = 2 * np.pi
    rho = 1.0 + 0.1 * np.sin(k * g.r)
    x = ExtendedState(g, rho, 0.1 * np.cos(k * g.r), 6.3 * rho, local_equilibrium(g, 1.0, 1.0))
    # generic phases so that no component of the first variation vanishes by symmetry
    dx = ExtendedState(g, 0.05 + 0.05 * np.cos(k * g.r + 0.4), 0.05 * np.sin(k * g.r + 1.1),
                       0.1 + 0.1 * np.sin(2 * k * g.r + 0.7),
                       0.05 * x.f * (1.0 + np.cos(k * g.r + 0.2)[:, None] * g.v))
    assert fn.gateaux_check(factory(g), x, dx) <= 1e-6


def test_boltzmann_entropy_of_maxwellian_is_closed_form():
    g = PhaseGrid(2, 256, 1.0, 8.0)
    from mesothermo.grid import maxwellian
    f = maxwellian(g, 1.0, 0.0, 1.0)
    expected = 0.5 * np.log(2 * np.pi) + 0.5  # per unit length and mass
    assert fn.boltzmann_entropy(g).value(f) == pytest.approx(expected, rel=1e-10)


def test_entropy_domain_error_and_floor():
    g = PhaseGrid(2, 8, 1.0, 4.0)
    f = np.ones(g.shape)
    f[0, 2] = -1e-3
    with pytest.raises(DomainError):
        fn.boltzmann_entropy(g).value(f)
    assert np.isfinite(fn.boltzmann_entropy(g, f_min=1e-300).value(f))


@given(st.floats(1e-3, 10.0))
def test_eta_inverse_derivative(y):
    for name in ("square", "neg_flogf", "boltzmann"):
        eta = fn.eta_family(name)
        assert float(eta.d1(eta.d1_inverse(y))) == pytest.approx(y, rel=1e-10, abs=1e-12)


def test_unknown_names_raise():
    g = PhaseGrid(2, 4, 1.0, 1.0)
    with pytest.raises(KeyError):
        fn.eta_family("nope")
    with pytest.raises(KeyError):
        fn.get_functional("entropy", "nope", g)
    with pytest.raises(KeyError):
        fn.get_functional("nope", "boltzmann", g)
    assert fn.get_functional("energy", "kinetic", g, m=2.0).name


@pytest.mark.parametrize("Lambda", [0.0, -1.0, np.array([[1.0, 2.0], [0.0, 1.0]]),
                                    np.array([[1.0, 0.0], [0.0, -1.0]])])
def test_bad_dissipation_operators_rejected(Lambda):
    with pytest.raises(ConstructionError):
        fn.quadratic_dissipation(Lambda)


def test_dissipation_potentials_have_required_structure(state, rng):
    g, f, _ = state
    samples = [rng.standard_normal(g.shape) for _ in range(6)]
    for Xi in (fn.quadratic_dissipation(np.diag([1.0, 2.0, 3.0])),):
        rep = fn.dissipation_property_report(Xi, np.zeros(3), [rng.standard_normal(3) for _ in range(5)])
        assert rep["value_at_zero"] == 0 and rep["convexity_violations"] == 0
    for Xi in (fn.projected_dissipation(1.5, [fn.number(g), fn.kinetic_energy(g)], g.inner),
               fn.fokker_planck_dissipation(g, 0.7)):
        rep = fn.dissipation_property_report(Xi, f, samples)
        assert rep["value_at_zero"] <= 1e-14 and rep["derivative_at_zero"] <= 1e-14
        assert rep["convexity_violations"] == 0
        assert rep["casimirs"]
        for c in rep["casimirs"].values():
            assert c["orthogonality"] <= 1e-12 and c["annihilation"] <= 1e-12


def test_fokker_planck_kernel_is_gradient_of_value(state, rng):
    g, f, _ = state
    Xi = fn.fokker_planck_dissipation(g, 1.2)
    xs, d = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    eps = 1e-5
    fd = (Xi.value(f, xs + eps * d) - Xi.value(f, xs - eps * d)) / (2 * eps)
    assert fd == pytest.approx(g.inner(Xi.derivative_wrt_conjugate(f, xs), d), rel=1e-7)


def test_midpoint_convexity_counter():
    pairs = [(np.array(-1.0), np.array(1.0))]
    assert fn.midpoint_convexity_violations(lambda x: float(x) ** 2, pairs) == 0
    assert fn.midpoint_convexity_violations(lambda x: -float(x) ** 2, pairs) == 1
