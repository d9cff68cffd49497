import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mesothermo.errors import DomainError, ShapeError
from mesothermo.grid import (DistFn, ExtendedState, PhaseGrid, ScalarField, integrate_v, log_mean,
                             maxwellian, moments, read_distribution_csv, read_hydro_csv,
                             write_distribution_csv, write_hydro_csv)


def test_grid_geometry():
    g = PhaseGrid(4, 8, 2.0, 4.0)
    assert g.dr == 0.5 and g.dv == 1.0
    assert np.allclose(g.r, [0.25, 0.75, 1.25, 1.75])
    assert np.allclose(g.v, np.arange(-3.5, 4.0, 1.0))
    assert g.v_faces.shape == (7,)
    assert np.allclose(g.v_faces, np.arange(-3.0, 4.0, 1.0))
    assert g.shape == (4, 8)


@pytest.mark.parametrize("kw", [dict(n_r=0, n_v=4), dict(n_r=2, n_v=1), dict(n_r=2, n_v=4, v_max=-1.0)])
def test_grid_rejects_bad_parameters(kw):
    with pytest.raises(ValueError):
        PhaseGrid(**kw)


def test_shape_checks(small_grid):
    with pytest.raises(ShapeError):
        small_grid.integrate_v(np.ones((3, 3)))
    with pytest.raises(ShapeError):
        small_grid.integrate_r(np.ones(5))


def test_quadrature_moments_of_maxwellian():
    g = PhaseGrid(3, 256, 1.0, 8.0)
    f = maxwellian(g, 1.3, 0.2, 0.7)
    rho, u, s = moments(f, lambda x: x * x, g)
    assert np.allclose(rho.values, 1.3, rtol=1e-12)
    assert np.allclose(u.values, 1.3 * 0.2, rtol=1e-12)
    assert np.allclose(g.integrate_v(f * (g.v - 0.2) ** 2), 1.3 * 0.7, rtol=1e-12)
    assert np.allclose(integrate_v(f, g).values, rho.values)


def test_moments_reports_bad_cell():
    g = PhaseGrid(2, 8, 1.0, 4.0)
    f = np.ones(g.shape)
    f[1, 3] = 0.0
    with pytest.raises(DomainError) as exc:
        moments(f, np.log, g)
    assert exc.value.index == (1, 3)
    rho, _, s = moments(f, np.log, g, f_min=1e-12)
    assert np.isfinite(s.values).all()


def test_d_dr_is_second_order():
    errs = []
    for n in (32, 64):
        g = PhaseGrid(n, 2, 2 * np.pi, 1.0)
        errs.append(np.max(np.abs(g.d_dr(np.sin(g.r)) - np.cos(g.r))))
    assert 3.8 < errs[0] / errs[1] < 4.2


def test_grad_v_exact_for_quadratics():
    g = PhaseGrid(2, 9, 1.0, 3.0)
    phi = 0.3 * g.v ** 2 - 1.2 * g.v + 2.0
    assert np.allclose(g.grad_v(phi), 0.6 * g.v - 1.2, atol=1e-13)


@given(arrays(float, (3, 12), elements=st.floats(-10, 10)))
def test_d_dv_conserves_mass(g_vals):
    g = PhaseGrid(3, 12, 1.0, 2.0)
    assert np.allclose(g.integrate_v(g.d_dv(g_vals)), 0.0, atol=1e-11)


@given(arrays(float, (10,), elements=st.floats(-10, 10)))
def test_periodic_differences_sum_to_zero(a):
    g = PhaseGrid(10, 2, 1.0, 1.0)
    assert abs(g.integrate_r(g.d_dr(a))) < 1e-10
    assert abs(g.integrate_r(g.div_r_faces(a))) < 1e-10


def test_summation_by_parts_in_r(rng):
    g = PhaseGrid(12, 2, 1.0, 1.0)
    a, b = rng.standard_normal(12), rng.standard_normal(12)
    assert np.isclose(g.inner_r(a, g.d_dr(b)), -g.inner_r(g.d_dr(a), b), atol=1e-12)
    assert np.isclose(g.inner_r(a, g.div_r_faces(b)), -g.inner_r(g.diff_r_forward(a), b), atol=1e-12)


def test_summation_by_parts_in_v(rng):
    g = PhaseGrid(1, 10, 1.0, 2.0)
    phi, flux = rng.standard_normal((1, 10)), rng.standard_normal((1, 9))
    lhs = np.sum(phi * g.div_v_faces(flux)) * g.dv
    rhs = -np.sum(g.diff_v_faces(phi) * flux) * g.dv
    assert np.isclose(lhs, rhs)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_log_mean_between_geometric_and_arithmetic(a, b):
    lm = float(log_mean(a, b))
    assert np.sqrt(a * b) * (1 - 1e-12) <= lm <= 0.5 * (a + b) * (1 + 1e-12)


def test_log_mean_near_diagonal_is_smooth():
    a = 1.0 + np.array([0.0, 1e-12, 1e-6, 1e-3])
    lm = log_mean(a, np.ones_like(a))
    assert np.allclose(lm, 0.5 * (a + 1.0), rtol=1e-6)


def test_containers_validate_and_freeze(small_grid):
    sf = ScalarField(small_grid, np.ones(small_grid.n_r))
    with pytest.raises(ValueError):
        sf.values[0] = 2.0
    with pytest.raises(ValueError):
        ScalarField(small_grid, np.full(small_grid.n_r, np.nan))
    bad = np.ones(small_grid.shape)
    bad[2, 5] = -1.0
    with pytest.raises(DomainError):
        DistFn(small_grid, bad, require_nonnegative=True)
    assert DistFn(small_grid, bad).mass == pytest.approx(small_grid.integrate(bad))


def test_extended_state_arithmetic(small_grid, rng):
    g = small_grid
    x = ExtendedState(g, rng.random(g.n_r), rng.random(g.n_r), rng.random(g.n_r), rng.random(g.shape))
    y = 2.0 * x - x * 0.5 + x / 2.0
    assert np.allclose(y.f, 2.0 * x.f)
    assert np.isclose(x.inner(x), sum(g.inner_r(c, c) for c in (x.rho, x.u, x.s)) + g.inner(x.f, x.f))
    with pytest.raises(ShapeError):
        ExtendedState(g, np.ones(3), x.u, x.s, x.f)


def test_distribution_csv_round_trip(tmp_path, rng):
    g = PhaseGrid(3, 5, 2.0, 3.0)
    f = rng.random(g.shape)
    write_distribution_csv(tmp_path / "f.csv", g, f)
    g2, f2 = read_distribution_csv(tmp_path / "f.csv")
    assert g2 == g or (np.allclose(g2.r, g.r) and np.allclose(g2.v, g.v))
    assert np.array_equal(f2, f)
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "r,v,f"


def test_hydro_csv_round_trip(tmp_path, rng):
    g = PhaseGrid(6, 2, 1.5, 1.0)
    rho, u, s = rng.random(6), rng.random(6), rng.random(6)
    write_hydro_csv(tmp_path / "h.csv", g, rho, u, s)
    g2, cols = read_hydro_csv(tmp_path / "h.csv")
    assert np.allclose(g2.r, g.r)
    for name, a in (("rho", rho), ("u", u), ("s", s)):
        assert np.array_equal(cols[name], a)
