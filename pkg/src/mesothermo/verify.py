"""Invariant verification suite behind ``mesothermo verify``.

Each check is a function of a seeded generator returning a dictionary with
at least ``passed`` (bool).  Checks look up library functions through their
modules at call time, so a patched function (as in the mutation tests) is
what gets verified.
"""
from __future__ import annotations

import math
import time
import warnings

import numpy as np

from . import dynamics, functionals as fn, grid as gridmod, poisson_grad as pg, reduction as red
from .grid import ExtendedState, PhaseGrid, ScalarField, maxwellian

__all__ = ["CHECKS", "DEFAULT_CHECKS", "run_checks"]

N_STAR_UNIT = 0.5 * math.log(2.0 * math.pi) - 1.0  # unit-mass Maxwellian at E* = 1


def _bump_state(grid: PhaseGrid, rng, amplitude=0.1, mean=0.0, theta=1.0, tilt=True):
    k = 2.0 * np.pi / grid.length_r
    ph = rng.uniform(0.0, 2.0 * np.pi, 3)
    q = np.exp(np.sin(k * grid.r + ph[0]) + 0.5 * np.cos(2.0 * k * grid.r + ph[1]))
    q = q / q.mean() - 1.0
    f = maxwellian(grid, 1.0, mean, theta) * (1.0 + amplitude * q)[:, None]
    if not tilt:
        return f
    return f * (1.0 + 0.05 * np.sin(k * grid.r + ph[2])[:, None] * np.tanh(grid.v)[None, :])


def _smooth_field(grid: PhaseGrid, rng, scale=1.0):
    k = 2.0 * np.pi / grid.length_r
    a, b, c = rng.standard_normal(3)
    R, V = grid.mesh()
    return scale * (a * np.sin(k * R) * V ** 2 / 2.0 + b * np.cos(k * R) * V + c * np.sin(2 * k * R))


# -- checks ---------------------------------------------------------------------

def check_bracket(rng) -> dict:
    """Antisymmetry to round-off and second-order Casimir degeneracy."""
    seed = int(rng.integers(2 ** 31))
    out = {"antisymmetry": 0.0, "degeneracy": {}}
    for n in (32, 64):
        g = PhaseGrid(n, n, 2.0 * np.pi, 8.0)
        r = np.random.default_rng(seed)
        f = _bump_state(g, r)
        A, B = _smooth_field(g, r), _smooth_field(g, r)
        br = dynamics.KineticBracket(g)
        ab, ba = br.evaluate(A, B, f), br.evaluate(B, A, f)
        out["antisymmetry"] = max(out["antisymmetry"], abs(ab + ba) / max(abs(ab), 1e-300))
        out["self_bracket"] = abs(br.evaluate(A, A, f))
        for name in ("square", "neg_flogf"):
            eta = fn.eta_family(name)
            val = abs(br.evaluate(eta.d1(f), B, f)) / max(abs(ab), 1e-300)
            out["degeneracy"].setdefault(name, []).append(val)
    orders = {k: math.log2(v[0] / max(v[1], 1e-300)) for k, v in out["degeneracy"].items()}
    out["degeneracy_order"] = orders
    ok_deg = all(v[1] < 1e-12 or orders[k] >= 1.8 for k, v in out["degeneracy"].items())
    out["passed"] = out["antisymmetry"] <= 1e-12 and out["self_bracket"] <= 1e-13 and ok_deg
    return out


def check_gateaux(rng) -> dict:
    """Analytic derivative kernels against central differences."""
    g = PhaseGrid(16, 32, 1.0, 6.0)
    f = _bump_state(g, rng)
    df = f * _smooth_field(g, rng, 0.3)
    cases = {
        "boltzmann_entropy": (fn.boltzmann_entropy(g), f, df),
        "kinetic_energy": (fn.kinetic_energy(g), f, df),
        "number": (fn.number(g), f, df),
        "casimir_square": (fn.casimir(g, fn.eta_family("square")), f, df),
        "casimir_neg_flogf": (fn.casimir(g, fn.eta_family("neg_flogf")), f, df),
        "thermo_potential": (fn.thermo_potential(fn.boltzmann_entropy(g), fn.kinetic_energy(g),
                                                 fn.number(g), 1.0, 0.1), f, df),
    }
    k = 2.0 * np.pi
    rho = 1.0 + 0.1 * np.sin(k * g.r)
    x = ExtendedState(g, rho, 0.1 * np.cos(k * g.r), 6.3 * rho, pg.local_equilibrium(g, 1.0, 1.0))
    dx = ExtendedState(g, 0.05 * np.cos(k * g.r), 0.05 * np.sin(k * g.r), 0.1 * np.sin(2 * k * g.r),
                       0.2 * df)
    cases["sackur_tetrode_energy"] = (fn.sackur_tetrode_energy(g), x, dx)
    cases["kinetic_coupled_energy"] = (fn.kinetic_coupled_energy(g), x, dx)
    errs = {name: fn.gateaux_check(F, a, d) for name, (F, a, d) in cases.items()}
    return {"relative_errors": errs, "tolerance": 1e-6,
            "passed": all(e <= 1e-6 for e in errs.values())}


def check_dissipation(rng) -> dict:
    """Zero at the origin, vanishing slope, convexity and dissipative Casimirs."""
    g = PhaseGrid(8, 32, 1.0, 6.0)
    f = _bump_state(g, rng)
    samples = [_smooth_field(g, rng) + 0.3 * rng.standard_normal(g.shape) for _ in range(6)]
    N = fn.number(g)
    pots = {
        "quadratic": fn.quadratic_dissipation(2.0, g.inner),
        "projected": fn.projected_dissipation(1.5, [N, fn.kinetic_energy(g)], g.inner),
        "fokker_planck": fn.fokker_planck_dissipation(g, 1.0),
    }
    reports, ok = {}, True
    for name, Xi in pots.items():
        rep = fn.dissipation_property_report(Xi, f, samples)
        reports[name] = rep
        ok &= rep["value_at_zero"] <= 1e-14 and rep["derivative_at_zero"] <= 1e-14
        ok &= rep["convexity_violations"] == 0
        for c in rep["casimirs"].values():
            ok &= c["orthogonality"] <= 1e-12 and c["annihilation"] <= 1e-12
    return {"reports": reports, "passed": bool(ok)}


def check_legendre(rng) -> dict:
    """Double Legendre transform of a quadratic and of the ideal-gas relation."""
    a, b = np.array([1.0, 2.0, 3.0]), np.array([0.0, 1.0, -1.0])
    c = rng.uniform(-0.5, 0.5, 3)
    S = fn.Functional("quadratic", lambda x: -0.5 * np.dot(x - c, x - c), lambda x: -(x - c),
                      hessian_diag=lambda x: -1.0)
    E = fn.Functional("linear_a", lambda x: a @ x, lambda x: a, hessian_diag=lambda x: 0.0)
    N = fn.Functional("linear_b", lambda x: b @ x, lambda x: b, hessian_diag=lambda x: 0.0)
    A = np.vstack([a, b])
    G = A @ A.T

    def quad_ref(Ev, Nv):
        t = np.array([Ev, Nv]) - A @ c
        return -0.5 * t @ np.linalg.solve(G, t)

    q = red.legendre_involution_check(red.DualRelation(S, E, N, np.zeros(3)),
                                      np.linspace(-1, 1, 5), np.linspace(-1, 1, 5), quad_ref)
    L = 1.0
    g = PhaseGrid(4, 256, L, 8.0)
    dual = red.DualRelation(fn.boltzmann_entropy(g), fn.kinetic_energy(g), fn.number(g),
                            np.full(g.shape, 0.1))

    def gas_ref(Ev, Nv):
        return Nv * (math.log(L / Nv) + 0.5 * math.log(2 * math.pi * 2 * Ev / Nv) + 0.5)

    gas = red.legendre_involution_check(dual, np.linspace(0.75, 1.5, 5), np.linspace(-0.5, 0.5, 5),
                                        gas_ref)
    return {"quadratic_max_abs": q["max_abs_deviation"], "gas_max_rel": gas["max_rel_deviation"],
            "nonconcave_points": len(q["nonconcave_points"]) + len(gas["nonconcave_points"]),
            "passed": (q["max_abs_deviation"] <= 1e-12 and gas["max_rel_deviation"] <= 1e-4
                       and not q["nonconcave_points"] and not gas["nonconcave_points"])}


def check_maxent(rng) -> dict:
    """Static reduction reproduces the analytic Maxwellian."""
    g = PhaseGrid(2, 256, 1.0, 8.0)
    res = red.reduce_static(fn.boltzmann_entropy(g), fn.kinetic_energy(g), fn.number(g), 1.0,
                            N_STAR_UNIT, np.full(g.shape, 0.1))
    M = maxwellian(g)
    err = float(np.max(np.abs(res.minimizer - M) / M))
    return {"linf_relative": err, "iterations": res.iterations, "passed": err <= 1e-6}


def check_quadrature(rng) -> dict:
    """Velocity moments of Maxwellians and polynomials against closed forms."""
    g = PhaseGrid(3, 256, 1.0, 8.0)
    rho, theta = 1.3, 0.8
    f = np.broadcast_to(rho * np.sqrt(1 / (2 * np.pi * theta)) * np.exp(-g.v ** 2 / (2 * theta)),
                        g.shape)
    ones = np.ones(g.shape)
    errs = {
        "mass": float(np.max(np.abs(g.integrate_v(f) - rho))) / rho,
        "second_moment": float(np.max(np.abs(g.integrate_v(f * g.v ** 2) - rho * theta))) / (rho * theta),
        "constant": float(np.max(np.abs(g.integrate_v(ones) - 2 * g.v_max))) / (2 * g.v_max),
        "total": abs(g.integrate(ones) - 2 * g.v_max * g.length_r) / (2 * g.v_max * g.length_r),
        "moments_helper": float(np.max(np.abs(gridmod.moments(f, lambda x: x, g)[0].values - rho))) / rho,
    }
    return {"relative_errors": errs, "passed": all(e <= 1e-12 for e in errs.values())}


def check_conservation(rng) -> dict:
    """Free transport on the reference grid: E, N and two Casimirs."""
    g = PhaseGrid(128, 128, 8.0, 4.0)
    f0 = _bump_state(g, rng, amplitude=0.05, mean=0.5, tilt=False)
    E = fn.kinetic_energy(g)
    funcs = {"E": E.value, "N": fn.number(g).value,
             "casimir_square": fn.casimir(g, fn.eta_family("square")).value,
             "casimir_neg_flogf": fn.casimir(g, fn.eta_family("neg_flogf")).value}
    integ = dynamics.Integrator("rk4", 1e-3, dynamics.transport_dt_max(g, E.derivative(f0)))
    res = dynamics.evolve(f0, lambda f: dynamics.hamiltonian_rhs(f, E, g), integ, 1.0, funcs,
                          stride=1000)
    drift = {k: float(abs(res.diagnostics.column(k)[-1] / res.diagnostics.column(k)[0] - 1))
             for k in funcs}
    return {"relative_drift": drift, "steps": integ.step_count,
            "passed": all(d <= 1e-8 for d in drift.values())}


def check_entropy_production(rng) -> dict:
    """Fokker-Planck relaxation, diffusion closure and regularized hierarchy."""
    g = PhaseGrid(1, 128, 1.0, 8.0)
    E = fn.kinetic_energy(g)
    mult = (1.0, N_STAR_UNIT)
    f0 = maxwellian(g, 1.0, rng.uniform(-0.3, 0.3), 1.3)
    f0 *= g.integrate(np.exp(-1 - N_STAR_UNIT - g.v ** 2 / 2)[None, :]) / g.integrate(f0)
    Phi = fn.thermo_potential(fn.boltzmann_entropy(g), E, fn.number(g), *mult)
    dt_max = dynamics.fp_dt_max(g, 1.0, 1.0)
    sig = lambda f: dynamics.fp_entropy_production(f, E, 1.0, mult, g)
    out = {}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", dynamics.BoundaryFluxWarning)
            res = dynamics.evolve(f0, lambda f: dynamics.fokker_planck_rhs(f, E, 1.0, mult, g),
                                  dynamics.Integrator("rk4", 0.8 * dt_max, dt_max), 2.0,
                                  {"Phi": Phi.value, "sigma": sig})
        P, S = res.diagnostics.column("Phi"), res.diagnostics.column("sigma")
        dt = 0.8 * dt_max
        rate = -np.diff(P) / dt
        mid = 0.5 * (S[1:] + S[:-1])
        out["fp_sigma_min"] = float(S.min())
        out["fp_potential_max_increase"] = float(np.diff(P).max())
        out["fp_rate_consistency"] = float(np.max(np.abs(rate - mid)) / max(S.max(), 1e-300))
        fp_ok = (S.min() >= 0 and np.diff(P).max() <= 1e-14 * max(abs(P).max(), 1.0)
                 and out["fp_rate_consistency"] <= 1e-2)
    except (ValueError, RuntimeError) as exc:
        out["fp_error"] = str(exc)
        fp_ok = False
    gr = PhaseGrid(128, 2, 1.0, 1.0)
    Sd = red.density_entropy(gr)
    rho0 = red.periodic_heat_kernel(gr.r, 0.0, 1.0, 1.0, 1.0, 0.5, 0.08)
    run = red.diffusion_scenario(ScalarField(gr, rho0), Sd, 1.0, 0.01, 1e-5)
    out["diffusion_sigma_min"] = float(run.entropy_production.min())
    diff_ok = run.entropy_production.min() >= 0 and np.all(np.diff(run.entropy) >= -1e-14)
    gp = PhaseGrid(16, 32, 1.0, 6.0)
    Est = fn.sackur_tetrode_energy(gp)
    smin = math.inf
    for _ in range(5):
        f = _bump_state(gp, rng, amplitude=0.2, mean=rng.uniform(-0.5, 0.5))
        rho = gp.integrate_v(f) * rng.uniform(0.8, 1.2)
        x = ExtendedState(gp, rho, 0.1 * rng.standard_normal() * np.ones(gp.n_r), 6.3 * rho, f)
        smin = min(smin, float(pg.entropy_production_density(x, Est, 0.5).min()))
    out["pg_sigma_s_min"] = smin
    out["passed"] = bool(fp_ok and diff_ok and smin >= 0)
    return out


def check_viscosity(rng) -> dict:
    """Zeroth Chapman-Enskog fixed point: Gamma, closure residual and nu."""
    g = PhaseGrid(2, 256, 1.0, 8.0)
    lam = 1.0
    grad = np.full(g.n_r, 1e-5)
    f, res, steps = pg.ce_zeroth_fixed_point(maxwellian(g), g, grad, lam, tol=1e-10)
    vr = pg.viscosity_extract(f, g, lam, grad)
    return {"Gamma": vr.Gamma, "nu": vr.nu, "closure_residual": vr.closure_residual,
            "fixed_point_residual": res,
            "passed": (abs(vr.Gamma - 1) <= 1e-4 and vr.closure_residual <= 1e-4
                       and abs(vr.nu - vr.Gamma / (2 * lam)) <= 1e-14)}


def check_diffusion(rng) -> dict:
    """Flux closure by stationarity and the heat-kernel comparison."""
    g = PhaseGrid(8, 128, 1.0, 8.0)
    M = maxwellian(g)
    FS, K, Ka = red.kinetic_flux_entropy(g, M, 1.0)
    Kd = np.sin(2 * np.pi * g.r + rng.uniform(0, 2 * np.pi))
    cl = red.reduce_flux(FS, K, Ka, Kd, np.zeros(g.shape), g.inner_r,
                         rng=int(rng.integers(2 ** 31)))
    gr = PhaseGrid(256, 2, 1.0, 1.0)
    rho0 = red.periodic_heat_kernel(gr.r, 0.0, 1.0, 1.0, 1.0, 0.5, 0.05)
    run = red.diffusion_scenario(ScalarField(gr, rho0), red.density_entropy(gr), 1.0, 0.1, 1e-5)
    exact = red.periodic_heat_kernel(gr.r, 0.1, 1.0, 1.0, 1.0, 0.5, 0.05)
    l2 = float(np.linalg.norm(run.rho - exact) / np.linalg.norm(exact))
    mass = float(np.max(np.abs(run.mass - run.mass[0])))
    return {"stationarity_residual": cl.residual_norm, "K_fd_rel_error": cl.K_fd_rel_error,
            "heat_kernel_l2": l2, "mass_drift": mass,
            "passed": cl.residual_norm <= 1e-10 and cl.K_fd_rel_error <= 1e-6 and l2 <= 1e-3
            and mass <= 1e-12}


def check_pg_structure(rng) -> dict:
    """Euler decoupling, conservation and the dissipative energy audit."""
    g = PhaseGrid(32, 48, 1.0, 6.0)
    E, eta = fn.sackur_tetrode_energy(g), fn.eta_family("boltzmann")
    k = 2 * np.pi
    ph = rng.uniform(0, 2 * np.pi, 3)
    rho = 1 + 0.1 * np.sin(k * g.r + ph[0])
    u = 0.05 * np.cos(k * g.r + ph[1])
    s = 6.3 * rho + 0.1 * np.sin(k * g.r + ph[2])
    f = _bump_state(g, rng, amplitude=0.1)
    x = ExtendedState(g, rho, u, s, f)
    x2 = ExtendedState(g, rho, u, s, 1.7 * f + 0.01)
    a, b = pg.pg_euler_part(x, E), pg.pg_euler_part(x2, E)
    bitwise = all(np.array_equal(p, q) for p, q in zip(a, b))
    R = pg.pg_rhs(x, E, eta)
    cons = max(abs(g.integrate_r(R.rho)), abs(g.integrate_r(R.u)), abs(g.integrate(R.f)))
    audit = pg.energy_audit(x, E, eta, 0.5, 0.7)
    return {"euler_bitwise_independent": bitwise, "conservation": cons,
            "audit_relative": audit["relative"],
            "passed": bitwise and cons <= 1e-12 and audit["relative"] <= 1e-8}


def check_constitutive(rng) -> dict:
    """Damped fixed point against the explicit closed form."""
    g = PhaseGrid(32, 64, 1.0, 6.0)
    E, eta = fn.sackur_tetrode_energy(g), fn.eta_family("boltzmann")
    k = 2 * np.pi
    rho = 1 + 0.1 * np.sin(k * g.r)
    x = ExtendedState(g, rho, 0.05 * np.cos(k * g.r), 6.3 * rho + 0.1 * np.sin(k * g.r),
                      pg.local_equilibrium(g, 1.0, 1.0))
    cr = pg.constitutive_fixed_point(x, E, eta, 0.1)
    ex = pg.constitutive_explicit(x, E, eta, 0.1)
    dev = float(np.max(np.abs(cr.f - ex) / ex))
    return {"residual": cr.residual, "iterations": cr.iterations, "explicit_relative": dev,
            "boundary_dominated": cr.boundary_dominated,
            "passed": cr.residual <= 1e-8 and dev <= 1e-6}


CHECKS = {
    "bracket": check_bracket,
    "gateaux": check_gateaux,
    "dissipation": check_dissipation,
    "legendre": check_legendre,
    "maxent": check_maxent,
    "quadrature": check_quadrature,
    "conservation": check_conservation,
    "entropy_production": check_entropy_production,
    "viscosity": check_viscosity,
    "diffusion": check_diffusion,
    "pg_structure": check_pg_structure,
    "constitutive": check_constitutive,
}
DEFAULT_CHECKS = tuple(CHECKS)


def run_checks(names=None, seed: int = 0) -> dict:
    """Run the selected checks; returns a JSON-ready report.

    ``names=None`` runs every check; an empty selection passes with a
    warning.  Exceptions inside a check count as failures.
    """
    names = list(DEFAULT_CHECKS if names is None else names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    report = {"seed": seed, "checks": {}, "failures": [], "warnings": []}
    if not names:
        report["warnings"].append("no checks selected; the empty report passes trivially")
    for i, name in enumerate(names):
        rng = np.random.default_rng([seed, i])
        t0 = time.perf_counter()
        try:
            with np.errstate(all="ignore"):
                res = CHECKS[name](rng)
        except (ValueError, RuntimeError, ArithmeticError) as exc:
            res = {"passed": False, "error": f"{type(exc).__name__}: {exc}"}
        res["passed"] = bool(res["passed"])
        res["elapsed_s"] = time.perf_counter() - t0
        report["checks"][name] = res
        if not res["passed"]:
            report["failures"].append(name)
    report["passed"] = not report["failures"]
    return report
