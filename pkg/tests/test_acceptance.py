"""Acceptance suite: one PASS/FAIL line per criterion with the measured values.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed with
output capture disabled so they appear in the log.
"""
import math
import time
import warnings

import numpy as np
import pytest

from mesothermo import dynamics as dyn
from mesothermo import functionals as fn
from mesothermo import poisson_grad as pg
from mesothermo import reduction as red
from mesothermo.cli import main
from mesothermo.grid import ExtendedState, PhaseGrid, ScalarField, maxwellian
from mesothermo.verify import run_checks

from conftest import N_STAR_UNIT, smooth_bump


@pytest.fixture
def report(capsys):
    def emit(number, ok, details):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {details}")
        assert ok, details
    return emit


def _fmt(d):
    return ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items())


def test_criterion_1_maxent_gives_maxwellian(report):
    t0 = time.perf_counter()
    g = PhaseGrid(2, 256, 1.0, 8.0)
    res = red.reduce_static(fn.boltzmann_entropy(g), fn.kinetic_energy(g), fn.number(g), 1.0,
                            N_STAR_UNIT, np.full(g.shape, 0.1))
    elapsed = time.perf_counter() - t0
    M = maxwellian(g)
    err = float(np.max(np.abs(res.minimizer - M) / M))
    report(1, err <= 1e-6 and elapsed < 5.0,
           _fmt({"linf_rel": err, "tol": 1e-6, "runtime_s": elapsed, "limit_s": 5.0}))


def test_criterion_2_legendre_involution(report):
    t0 = time.perf_counter()
    res = run_checks(["legendre"], seed=0)["checks"]["legendre"]
    elapsed = time.perf_counter() - t0
    ok = (res["quadratic_max_abs"] <= 1e-12 and res["gas_max_rel"] <= 1e-4
          and res["nonconcave_points"] == 0 and elapsed < 30.0)
    report(2, ok, _fmt({"quadratic_max_abs": res["quadratic_max_abs"], "tol_q": 1e-12,
                        "ideal_gas_5x5_max_rel": res["gas_max_rel"], "tol_gas": 1e-4,
                        "runtime_s": elapsed, "limit_s": 30.0}))


def _transport_drift(n):
    g = PhaseGrid(n, n, 8.0, 4.0)
    f0 = smooth_bump(g, 0.05, 0.5)
    E = fn.kinetic_energy(g)
    funcs = {"E": E.value, "N": fn.number(g).value,
             "casimir_square": fn.casimir(g, fn.eta_family("square")).value,
             "casimir_neg_flogf": fn.casimir(g, fn.eta_family("neg_flogf")).value}
    integ = dyn.Integrator("rk4", 1e-3, dyn.transport_dt_max(g, E.derivative(f0)))
    res = dyn.evolve(f0, lambda f: dyn.hamiltonian_rhs(f, E, g), integ, 1.0, funcs, stride=1000)
    assert integ.step_count == 1000
    return {k: float(abs(res.diagnostics.column(k)[-1] / res.diagnostics.column(k)[0] - 1))
            for k in funcs}


def test_criterion_3_hamiltonian_conservation(report):
    coarse = _transport_drift(128)
    fine = _transport_drift(256)
    ok = all(v <= 1e-8 for v in coarse.values())
    ratios = {}
    # Casimirs conserved to round-off on both meshes have no measurable convergence rate
    for name in ("casimir_square", "casimir_neg_flogf"):
        if coarse[name] > 1e-13:
            ratios[name] = coarse[name] / max(fine[name], 1e-300)
            ok &= 3.5 <= ratios[name] <= 4.5
    ok &= bool(ratios)
    details = {f"drift_{k}": v for k, v in coarse.items()}
    details.update({f"refinement_ratio_{k}": v for k, v in ratios.items()})
    report(3, ok, _fmt(details) + ", band=[3.5, 4.5]")


def test_criterion_4_fokker_planck_relaxation(report):
    g = PhaseGrid(1, 256, 1.0, 8.0)
    E = fn.kinetic_energy(g)
    lam, E_star = 1.0, 1.0
    mult = (E_star, N_STAR_UNIT)
    ref = red.reduce_static(fn.boltzmann_entropy(g), E, fn.number(g), *mult, np.full(g.shape, 0.1))
    f0 = maxwellian(g, 1.0, 0.3, 2.0)
    f0 *= g.integrate_v(ref.minimizer)[0] / g.integrate_v(f0)[0]
    sigma = lambda f: dyn.fp_entropy_production(f, E, lam, mult, g)
    dt_max = dyn.fp_dt_max(g, lam, E_star)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", dyn.BoundaryFluxWarning)
        res = dyn.evolve(f0, lambda f: dyn.fokker_planck_rhs(f, E, lam, mult, g),
                         dyn.Integrator("rk4", 0.8 * dt_max, dt_max), 14.0,
                         {"E": E.value, "sigma": sigma})
    d = res.diagnostics
    t, m2 = d.column("t"), 2.0 * d.column("E")
    m2_ref = 2.0 * E.value(ref.minimizer)
    dev = np.abs(m2 - m2_ref) / m2_ref
    sel = (dev > 1e-8) & (dev < 1e-2)
    rate = float(-np.polyfit(t[sel], np.log(dev[sel]), 1)[0])
    expected = 2.0 * lam * E_star  # d<v^2>/dt = 2 Lambda (k_B rho - E* <v^2>)
    rate_err = abs(rate - expected) / expected
    theta = float(m2[-1] / g.integrate_v(res.final)[0])
    linf = float(np.max(np.abs(res.final - ref.minimizer)))
    sig_min = float(d.column("sigma").min())
    ok = rate_err <= 0.05 and sig_min >= 0 and linf <= 1e-4 and abs(theta - 1.0 / E_star) <= 1e-6
    report(4, ok, _fmt({"rate_fit": rate, "rate_expected": expected, "rate_rel_err": rate_err,
                        "theta_final": theta, "sigma_min": sig_min, "linf_to_reduce_static": linf,
                        "steps": len(t) - 1}))


def test_criterion_5_diffusion_closure(report):
    gk = PhaseGrid(8, 128, 1.0, 8.0)
    FS, K, Ka = red.kinetic_flux_entropy(gk, maxwellian(gk), 1.0)
    Kd = np.sin(2 * np.pi * gk.r)
    cl = red.reduce_flux(FS, K, Ka, Kd, np.zeros(gk.shape), gk.inner_r)
    closed_form = float(np.max(np.abs(cl.K + Kd)))  # J_hat = -(1/Lambda) K_dagger, unit density
    g = PhaseGrid(256, 2, 1.0, 1.0)
    lam = 1.0
    rho0 = red.periodic_heat_kernel(g.r, 0.0, 1.0 / lam, 1.0, 1.0, 0.5, 0.05)
    run = red.diffusion_scenario(ScalarField(g, rho0), red.density_entropy(g), lam, 0.1, 1e-5)
    exact = red.periodic_heat_kernel(g.r, 0.1, 1.0 / lam, 1.0, 1.0, 0.5, 0.05)
    l2 = float(np.linalg.norm(run.rho - exact) / np.linalg.norm(exact))
    mass = float(np.max(np.abs(run.mass - run.mass[0])))
    ok = cl.residual_norm <= 1e-10 and closed_form <= 1e-8 and l2 <= 1e-3 and mass <= 1e-12
    report(5, ok, _fmt({"stationarity_residual": cl.residual_norm, "closed_form_dev": closed_form,
                        "heat_kernel_l2_rel": l2, "mass_drift": mass}))


def test_criterion_6_viscosity(report):
    g = PhaseGrid(2, 256, 1.0, 8.0)
    lam = 1.0
    grad = np.full(g.n_r, 1e-5)
    f, res, steps = pg.ce_zeroth_fixed_point(maxwellian(g, 1.0, 0.0, 1.0), g, grad, lam, tol=1e-10)
    vr = pg.viscosity_extract(f, g, lam, grad)
    ok = abs(vr.Gamma - 1.0) <= 1e-4 and vr.closure_residual <= 1e-4 and vr.nu == vr.Gamma / (2 * lam)
    report(6, ok, _fmt({"Gamma": vr.Gamma, "closure_residual": vr.closure_residual, "nu": vr.nu,
                        "1/(2Lambda)": 1.0 / (2 * lam), "relax_steps": steps}))


def test_criterion_7_poisson_grad_structure(report):
    rng = np.random.default_rng(7)
    g = PhaseGrid(32, 64, 2 * np.pi, 6.0)
    E, eta = fn.sackur_tetrode_energy(g), fn.eta_family("boltzmann")
    bitwise, audit, sig_min = True, 0.0, math.inf
    for _ in range(10):
        ph = rng.uniform(0, 2 * np.pi, 4)
        rho = 1 + 0.2 * rng.uniform() * np.sin(g.r + ph[0])
        u = 0.1 * rng.standard_normal() * np.cos(g.r + ph[1])
        s = 6.3 * rho + 0.1 * np.sin(2 * g.r + ph[2])
        q = 1 + 0.2 * np.sin(g.r + ph[3])
        f = maxwellian(g, 1.0, rng.uniform(-0.5, 0.5), rng.uniform(0.7, 1.4)) * q[:, None]
        x = ExtendedState(g, rho, u, s, f)
        y = ExtendedState(g, rho, u, s, f * rng.uniform(0.5, 2.0) + rng.uniform(0, 0.1))
        bitwise &= all(np.array_equal(a, b) for a, b in
                       zip(pg.pg_euler_part(x, E), pg.pg_euler_part(y, E)))
        lam, eps = rng.uniform(0.1, 2.0), rng.uniform(0.1, 1.0)
        audit = max(audit, pg.energy_audit(x, E, eta, lam, eps)["relative"])
        sig_min = min(sig_min, float(pg.entropy_production_density(x, E, lam).min()))
    ok = bitwise and audit <= 1e-8 and sig_min >= 0
    report(7, ok, _fmt({"euler_bitwise_identical": bitwise, "energy_audit_rel": audit,
                        "sigma_s_min": sig_min, "states": 10}))


@pytest.fixture
def mutations(monkeypatch):
    def flip():
        original = dyn.fp_flux
        monkeypatch.setattr(dyn, "fp_flux", lambda *a, **k: -original(*a, **k))

    def break_weights():
        monkeypatch.setattr(PhaseGrid, "v_weights",
                            property(lambda self: np.full(self.n_v, self.dv) * (1 + 1e-3 * (self.v > 0))))

    return {"fp_sign_flip": flip, "broken_quadrature_weight": break_weights}


def test_criterion_8_verification_suite(report, tmp_path, capsys, monkeypatch, mutations):
    t0 = time.perf_counter()
    code = main(["verify", "--out", str(tmp_path)])
    elapsed = time.perf_counter() - t0
    caught = {}
    for name, inject in mutations.items():
        with monkeypatch.context() as m:
            inject()
            caught[name] = run_checks(seed=0)["failures"]
        monkeypatch.undo()
    ok = code == 0 and elapsed < 120.0 and all(caught.values())
    report(8, ok, _fmt({"exit_code": code, "runtime_s": elapsed, "limit_s": 120.0})
           + ", caught_by=" + "; ".join(f"{k}: {','.join(v) or 'none'}" for k, v in caught.items()))
