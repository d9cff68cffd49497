import math

import numpy as np
import pytest

from mesothermo import functionals as fn
from mesothermo import reduction as red
from mesothermo.errors import ConvergenceError, SingularSystemError, StabilityError
from mesothermo.grid import PhaseGrid, ScalarField, maxwellian

from conftest import N_STAR_UNIT


@pytest.fixture
def gas():
    g = PhaseGrid(2, 256, 1.0, 8.0)
    return g, fn.boltzmann_entropy(g), fn.kinetic_energy(g), fn.number(g)


@pytest.mark.parametrize("E_star,N_star", [(1.0, N_STAR_UNIT), (0.5, 0.2), (2.0, -0.4)])
def test_reduce_static_gives_maxwellian(gas, E_star, N_star):
    g, S, E, N = gas
    res = red.reduce_static(S, E, N, E_star, N_star, np.full(g.shape, 0.1))
    expected = np.exp(-1.0 - N_star - E_star * g.v ** 2 / 2.0)
    assert np.max(np.abs(res.minimizer - expected) / expected) <= 1e-8
    assert res.residual_norm <= 1e-8
    Phi = fn.thermo_potential(S, E, N, E_star, N_star)
    assert red.check_local_minimum(Phi, res.minimizer, rng=0) == 0


def test_reduce_static_unit_maxwellian(gas):
    g, S, E, N = gas
    res = red.reduce_static(S, E, N, 1.0, N_STAR_UNIT, np.full(g.shape, 0.1))
    assert np.allclose(res.minimizer, maxwellian(g), rtol=1e-8)
    assert g.integrate_v(res.minimizer) == pytest.approx(np.ones(2), rel=1e-8)


def test_reduce_static_reports_nonconvergence(gas):
    g, S, E, N = gas
    with pytest.raises(ConvergenceError) as exc:
        red.reduce_static(S, E, N, 1.0, 0.0, np.full(g.shape, 0.1), max_iter=1)
    assert exc.value.best is not None


def test_dual_relation_gradient_gives_constraint_values(gas):
    g, S, E, N = gas
    dual = red.DualRelation(S, E, N, np.full(g.shape, 0.1))
    dE, dN = dual.gradient(1.2, 0.1)
    f = dual.result(1.2, 0.1).minimizer
    assert dE == pytest.approx(E.value(f), rel=1e-6)
    assert dN == pytest.approx(N.value(f), rel=1e-6)


def test_back_transform_recovers_multipliers(gas):
    g, S, E, N = gas
    dual = red.DualRelation(S, E, N, np.full(g.shape, 0.1))
    f = dual.result(1.3, -0.2).minimizer
    value, mults, _ = red.back_transform(dual, E.value(f), N.value(f))
    assert np.allclose(mults, [1.3, -0.2], atol=1e-5)
    assert value == pytest.approx(S.value(f), rel=1e-8)


def test_legendre_involution_of_quadratic():
    c = np.array([0.2, -0.1, 0.3])
    a, b = np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0, -1.0])
    S = fn.Functional("q", lambda x: -0.5 * np.dot(x - c, x - c), lambda x: -(x - c),
                      hessian_diag=lambda x: -1.0)
    E = fn.Functional("a", lambda x: a @ x, lambda x: a, hessian_diag=lambda x: 0.0)
    N = fn.Functional("b", lambda x: b @ x, lambda x: b, hessian_diag=lambda x: 0.0)
    A = np.vstack([a, b])

    def ref(Ev, Nv):
        t = np.array([Ev, Nv]) - A @ c
        return -0.5 * t @ np.linalg.solve(A @ A.T, t)

    rep = red.legendre_involution_check(red.DualRelation(S, E, N, np.zeros(3)),
                                        [-0.5, 0.5], [-0.5, 0.5], ref)
    assert rep["max_abs_deviation"] <= 1e-12
    assert not rep["nonconcave_points"]


def test_diffusion_closure_flux_form_and_sign():
    g = PhaseGrid(64, 2, 1.0, 1.0)
    S = red.density_entropy(g)
    rho = 1.0 + 0.3 * np.sin(2 * np.pi * g.r)
    cl = red.diffusion_closure(g, rho, S, 2.0)
    # rho_face * d(ln rho) is an exact difference of rho
    assert np.allclose(cl.K, g.diff_r_forward(rho) / 2.0, atol=1e-12)
    rhs = red.diffusion_rhs(g, rho, S, 2.0)
    assert abs(g.integrate_r(rhs)) <= 1e-14
    diag = red.entropy_rate_diagnostic(g, rho, S, 2.0, closure=cl, a_hint=1.0)
    assert diag["entropy_rate"] > 0 and diag["rate_mismatch"] <= 1e-10
    assert diag["a_hint_deviation"] <= 1e-10
    assert red.entropy_rate_diagnostic(g, rho, S, 2.0, forced=True)["status"] == "disabled"


def test_diffusion_matches_heat_kernel():
    g = PhaseGrid(128, 2, 1.0, 1.0)
    lam = 2.0
    rho0 = red.periodic_heat_kernel(g.r, 0.0, 1.0 / lam, 1.0, 1.0, 0.5, 0.08)
    run = red.diffusion_scenario(ScalarField(g, rho0), red.density_entropy(g), lam, 0.02, 2e-5,
                                 snapshot_times=[0.01])
    exact = red.periodic_heat_kernel(g.r, 0.02, 1.0 / lam, 1.0, 1.0, 0.5, 0.08)
    assert np.linalg.norm(run.rho - exact) / np.linalg.norm(exact) <= 2e-3
    assert np.max(np.abs(run.mass - run.mass[0])) <= 1e-12
    assert np.all(np.diff(run.entropy) >= -1e-14)
    assert 0.01 in run.snapshots


def test_diffusion_rejects_unstable_step():
    g = PhaseGrid(128, 2, 1.0, 1.0)
    rho0 = ScalarField(g, np.ones(128))
    with pytest.raises(StabilityError):
        red.diffusion_scenario(rho0, red.density_entropy(g), 1.0, 0.1, 1e-2)


def test_reduce_flux_kinetic_closure():
    g = PhaseGrid(8, 128, 1.0, 8.0)
    FS, K, Ka = red.kinetic_flux_entropy(g, maxwellian(g), 1.0)
    Kd = np.sin(2 * np.pi * g.r)
    cl = red.reduce_flux(FS, K, Ka, Kd, np.zeros(g.shape), g.inner_r)
    assert cl.residual_norm <= 1e-10
    assert cl.K_fd_rel_error <= 1e-6
    assert np.allclose(cl.K, -Kd, rtol=1e-6, atol=1e-10)


def test_reduce_flux_singular_system():
    FS = fn.Functional("flat", lambda J: 0.0, lambda J: np.zeros_like(J),
                       hessian_diag=lambda J: np.zeros_like(J))
    with pytest.raises(SingularSystemError):
        red.reduce_flux(FS, lambda J: J, lambda J, Kd: Kd, np.ones(3), np.zeros(3), fd_eps=None)


def test_periodic_heat_kernel_conserves_mass():
    r = (np.arange(512) + 0.5) / 512
    m0 = red.periodic_heat_kernel(r, 0.0, 1.0, 1.0, 1.0, 0.5, 0.05).mean()
    m1 = red.periodic_heat_kernel(r, 0.1, 1.0, 1.0, 1.0, 0.5, 0.05).mean()
    assert m0 == pytest.approx(m1, rel=1e-12)
    assert m0 == pytest.approx(1.0 + 0.05 * math.sqrt(2 * math.pi), rel=1e-10)
