"""Scenario drivers behind ``mesothermo run`` and ``mesothermo reduce``.

Every driver takes a validated :class:`~mesothermo.config.ScenarioConfig`
and an output directory, writes its artifacts there and returns the
summary dictionary that is also stored as ``summary.json``.  Outputs are
plain CSV/JSON with floats written by ``repr``, so identical configs give
byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .dynamics import (Diagnostics, Integrator, evolve, fokker_planck_rhs, fp_dt_max,
                       fp_entropy_production, hamiltonian_rhs, transport_dt_max)
from .errors import ConfigError, NumericalBlowup
from .functionals import (boltzmann_entropy, casimir, eta_family, kinetic_coupled_energy,
                          kinetic_energy, number, sackur_tetrode_energy, thermo_potential)
from .grid import (ExtendedState, PhaseGrid, ScalarField, maxwellian, write_distribution_csv,
                   write_hydro_csv)
from .poisson_grad import (boltzmann_conjugate, ce_zeroth_explicit, ce_zeroth_fixed_point,
                           constitutive_fixed_point, energy_audit, entropy_production_density, local_equilibrium,
                           pg_regularized_rhs, pg_rhs, reduced_hydro_rhs, viscosity_extract)
from .reduction import (DualRelation, density_entropy, diffusion_scenario, entropy_rate_diagnostic,
                        kinetic_flux_entropy, periodic_heat_kernel, reduce_flux, reduce_static)

__all__ = ["RUNNERS", "REDUCERS", "run_scenario", "run_reduction", "write_json", "jsonable", "dump_state"]


# -- shared helpers -------------------------------------------------------------

def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_json(path, data) -> None:
    with open(path, "w") as fh:
        json.dump(jsonable(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid(cfg: ScenarioConfig) -> PhaseGrid:
    g = cfg.grid
    return PhaseGrid(g.n_r, g.n_v, g.length_r, g.v_max)


def _profile(rng, grid: PhaseGrid) -> np.ndarray:
    """Smooth zero-mean periodic profile of order one with random phases."""
    k = 2.0 * np.pi / grid.length_r
    ph = rng.uniform(0.0, 2.0 * np.pi, 2)
    q = np.exp(np.sin(k * grid.r + ph[0]) + 0.5 * np.cos(2.0 * k * grid.r + ph[1]))
    return q / q.mean() - 1.0


def _kinetic_energy(cfg, grid):
    if cfg.physics.energy != "kinetic":
        raise ConfigError(f"scenario {cfg.scenario!r} needs physics.energy = 'kinetic'")
    return kinetic_energy(grid, cfg.physics.m)


def _state_energy(cfg, grid):
    p = cfg.physics
    if p.energy == "sackur_tetrode":
        return sackur_tetrode_energy(grid, p.m, p.k_B, p.h, p.hydro_prefactor, p.kinetic_prefactor)
    if p.energy == "kinetic_coupled":
        return kinetic_coupled_energy(grid, p.kappa, p.m, p.k_B, p.h)
    raise ConfigError(f"scenario {cfg.scenario!r} needs an energy of the extended state, "
                      f"got physics.energy = {p.energy!r}")


def _eta(cfg, name=None):
    p = cfg.physics
    return eta_family(name or p.eta, k_B=p.k_B, h=p.h, f_min=p.f_min)


def _snapshot_steps(cfg, n_steps):
    dt = cfg.integrator.dt
    return {min(n_steps, int(round(t / dt))): float(t) for t in cfg.integrator.snapshot_times}


def _rel_drift(col):
    d = np.abs(col - col[0])
    ref = abs(col[0]) if col[0] != 0 else 1.0
    return float(d[-1] / ref), float(d.max() / ref), float(d.max())


def _n_steps(cfg):
    it = cfg.integrator
    n = int(round(it.t_end / it.dt))
    if abs(n * it.dt - it.t_end) > 1e-9 * max(it.t_end, 1.0):
        n = int(math.ceil(it.t_end / it.dt))
    return n


def _snap_name(t):
    return f"t{t:.6g}".replace("+", "")


def dump_state(out: Path, grid: PhaseGrid, state, prefix: str = "blowup_last_good") -> list:
    """Write the last finite state of a failed run; returns the paths written."""
    paths = []
    if state is None:
        return paths
    if isinstance(state, ExtendedState):
        p1, p2 = out / f"{prefix}_hydro.csv", out / f"{prefix}_f.csv"
        write_hydro_csv(p1, grid, state.rho, state.u, state.s)
        write_distribution_csv(p2, grid, state.f)
        paths += [p1, p2]
    else:
        a = np.asarray(state)
        if a.ndim == 2:
            p = out / f"{prefix}_f.csv"
            write_distribution_csv(p, grid, a)
        else:
            p = out / f"{prefix}_rho.csv"
            write_hydro_csv(p, grid, a, np.zeros_like(a), np.zeros_like(a))
        paths.append(p)
    return paths


# -- kinetic scenarios ----------------------------------------------------------

def _kinetic_diagnostics(cfg, grid, E, sigma=None):
    p = cfg.physics
    S = boltzmann_entropy(grid, p.k_B, p.f_min)
    N = number(grid)
    Phi = thermo_potential(S, E, N, p.E_star, p.N_star)
    diag = {"E": E.value, "N": N.value, "S": S.value, "Phi": Phi.value,
            "sigma": sigma if sigma is not None else (lambda f: 0.0)}
    for name in p.casimirs:
        diag[f"casimir:{name}"] = casimir(grid, _eta(cfg, name)).value
    return diag


def _evolve_kinetic(cfg, out, grid, f0, rhs, dt_max, diag):
    it = cfg.integrator
    n = _snapshot_steps(cfg, _n_steps(cfg))

    def snap(step, x):
        if step in n:
            write_distribution_csv(out / f"snapshot_{_snap_name(n[step])}.csv", grid, x)

    integ = Integrator(it.scheme, it.dt, dt_max, it.override_stability, hooks=[snap])
    write_distribution_csv(out / "snapshot_initial.csv", grid, f0)
    if 0 in n:
        snap(0, f0)
    try:
        res = evolve(f0, rhs, integ, it.t_end, diag, stride=it.stride)
    except NumericalBlowup as exc:
        exc.grid = grid  # lets the caller dump the last good state
        raise
    res.diagnostics.to_csv(out / "diagnostics.csv")
    write_distribution_csv(out / "snapshot_final.csv", grid, res.final)
    return res, integ


def _drift_summary(diag, names):
    out = {}
    for name in names:
        final, worst, worst_abs = _rel_drift(diag.column(name))
        out[name] = {"final_relative": final, "max_relative": worst, "max_abs": worst_abs}
    return out


def _monotone_report(col):
    inc = np.diff(col)
    worst = float(inc.max()) if inc.size else 0.0
    scale = max(float(np.max(np.abs(col))), 1.0)
    return {"max_increase": worst, "nonincreasing": bool(worst <= 1e-12 * scale)}


def run_free_transport(cfg: ScenarioConfig, out: Path) -> dict:
    grid = _grid(cfg)
    p, ini = cfg.physics, cfg.initial
    E = _kinetic_energy(cfg, grid)
    rng = np.random.default_rng(cfg.seed)
    bump = 1.0 + ini.get("amplitude", 0.05) * _profile(rng, grid)
    f0 = maxwellian(grid, 1.0, ini.get("drift", 0.5), ini.get("theta0", 1.0), p.m) * bump[:, None]
    diag = _kinetic_diagnostics(cfg, grid, E)
    dt_max = transport_dt_max(grid, E.derivative(f0))
    res, integ = _evolve_kinetic(cfg, out, grid, f0, lambda f: hamiltonian_rhs(f, E, grid),
                                 dt_max, diag)
    names = ["E", "N", "S"] + [f"casimir:{c}" for c in p.casimirs]
    return {"scenario": cfg.scenario, "steps": integ.step_count, "dt_max": dt_max,
            "drift": _drift_summary(res.diagnostics, names)}


def _reference_maxwellian(cfg, grid, E, x0):
    p = cfg.physics
    return reduce_static(boltzmann_entropy(grid, p.k_B, p.f_min), E, number(grid),
                         p.E_star, p.N_star, x0)


def run_fp_relaxation(cfg: ScenarioConfig, out: Path) -> dict:
    grid = _grid(cfg)
    p, ini = cfg.physics, cfg.initial
    E = _kinetic_energy(cfg, grid)
    f0 = maxwellian(grid, 1.0, ini.get("drift", 0.3), ini.get("theta0", 1.3), p.m)
    ref = _reference_maxwellian(cfg, grid, E, f0)
    # the operator conserves mass in every cell; match the fixed point's mass
    f0 = f0 * (grid.integrate_v(ref.minimizer) / grid.integrate_v(f0))[:, None]
    mult = (p.E_star, p.N_star)
    sigma = lambda f: fp_entropy_production(f, E, p.Lambda, mult, grid, p.k_B, p.f_min)
    diag = _kinetic_diagnostics(cfg, grid, E, sigma)
    dt_max = fp_dt_max(grid, p.Lambda, p.E_star, p.m, p.k_B)
    rhs = lambda f: fokker_planck_rhs(f, E, p.Lambda, mult, grid, p.k_B, p.f_min)
    res, integ = _evolve_kinetic(cfg, out, grid, f0, rhs, dt_max, diag)
    d = res.diagnostics
    # second moment 2E/m relaxes like exp(-2 Lambda E* t / m)
    t, E_col = d.column("t"), d.column("E")
    dev = np.abs(E_col - E.value(ref.minimizer)) / max(abs(E.value(ref.minimizer)), 1e-300)
    sel = (dev > 1e-9) & (dev < 1e-2)
    rate = float(-np.polyfit(t[sel], np.log(dev[sel]), 1)[0]) if sel.sum() >= 3 else None
    write_distribution_csv(out / "reference_maxwellian.csv", grid, ref.minimizer)
    mono = _monotone_report(d.column("Phi"))
    return {
        "scenario": cfg.scenario, "steps": integ.step_count, "dt_max": dt_max,
        "drift": _drift_summary(d, ["N"] + [f"casimir:{c}" for c in p.casimirs]),
        "entropy_monotone": mono["nonincreasing"], "potential_max_increase": mono["max_increase"],
        "entropy_production_min": float(d.column("sigma").min()),
        "linf_to_maxwellian": float(np.max(np.abs(res.final - ref.minimizer))),
        "second_moment_rate_fit": rate,
        "second_moment_rate_expected": 2.0 * p.Lambda * p.E_star / p.m,
        "second_moment_final": float(2.0 * E.value(res.final) / (p.m * max(number(grid).value(res.final), 1e-300))),
        "theta_target": p.k_B / p.E_star,
    }


def run_generic_kinetic(cfg: ScenarioConfig, out: Path) -> dict:
    grid = _grid(cfg)
    p, ini = cfg.physics, cfg.initial
    E = _kinetic_energy(cfg, grid)
    rng = np.random.default_rng(cfg.seed)
    bump = 1.0 + ini.get("amplitude", 0.2) * _profile(rng, grid)
    f0 = maxwellian(grid, 1.0, ini.get("drift", 0.0), ini.get("theta0", 1.3), p.m) * bump[:, None]
    ref = _reference_maxwellian(cfg, grid, E, f0)
    f0 = f0 * (grid.integrate(ref.minimizer) / grid.integrate(f0))
    mult = (p.E_star, p.N_star)
    sigma = lambda f: fp_entropy_production(f, E, p.Lambda, mult, grid, p.k_B, p.f_min)
    diag = _kinetic_diagnostics(cfg, grid, E, sigma)
    dt_max = min(transport_dt_max(grid, E.derivative(f0)), fp_dt_max(grid, p.Lambda, p.E_star, p.m, p.k_B))

    def rhs(f):
        return (hamiltonian_rhs(f, E, grid)
                + fokker_planck_rhs(f, E, p.Lambda, mult, grid, p.k_B, p.f_min))

    res, integ = _evolve_kinetic(cfg, out, grid, f0, rhs, dt_max, diag)
    d = res.diagnostics
    mono = _monotone_report(d.column("Phi"))
    return {
        "scenario": cfg.scenario, "steps": integ.step_count, "dt_max": dt_max,
        "drift": _drift_summary(d, ["N"]),
        "entropy_monotone": mono["nonincreasing"], "potential_max_increase": mono["max_increase"],
        "entropy_production_min": float(d.column("sigma").min()),
        "linf_to_maxwellian": float(np.max(np.abs(res.final - ref.minimizer))),
    }


# -- diffusion closure ------------------------------------------------------------

def run_diffusion_closure(cfg: ScenarioConfig, out: Path) -> dict:
    grid = _grid(cfg)
    p, ini, it = cfg.physics, cfg.initial, cfg.integrator
    S = density_entropy(grid, p.k_B)
    D = p.k_B / p.Lambda
    shape = (ini.get("amplitude", 1.0), ini.get("centre", 0.5 * grid.length_r), ini.get("width", 0.05))
    rho0 = periodic_heat_kernel(grid.r, 0.0, D, grid.length_r, *shape)
    try:
        run = diffusion_scenario(ScalarField(grid, rho0), S, p.Lambda, it.t_end, it.dt,
                                 it.snapshot_times)
    except NumericalBlowup as exc:
        exc.grid = grid  # lets the caller dump the last good state
        raise
    zeros = np.zeros(grid.n_r)
    write_hydro_csv(out / "snapshot_initial.csv", grid, rho0, zeros, zeros)
    for t, rho in run.snapshots.items():
        write_hydro_csv(out / f"snapshot_{_snap_name(t)}.csv", grid, rho, zeros, zeros)
    exact = periodic_heat_kernel(grid.r, float(run.times[-1]), D, grid.length_r, *shape)
    write_hydro_csv(out / "snapshot_final.csv", grid, run.rho, zeros, zeros, exact=exact)
    diag = Diagnostics(["E", "N", "S", "Phi", "sigma"])
    n = len(run.times) - 1
    for k in range(0, n + 1):
        if k % it.stride == 0 or k == n:
            diag.record(run.times[k], {"E": math.nan, "N": run.mass[k], "S": run.entropy[k],
                                       "Phi": -run.entropy[k], "sigma": run.entropy_production[k]})
    diag.to_csv(out / "diagnostics.csv")
    rate = entropy_rate_diagnostic(grid, run.rho, S, p.Lambda)
    return {
        "scenario": cfg.scenario, "steps": n, "dt_max": run.dt_max, "diffusivity": D,
        "drift": {"N": {"final_relative": float(abs(run.mass[-1] - run.mass[0]) / run.mass[0]),
                        "max_abs": float(np.max(np.abs(run.mass - run.mass[0])))}},
        "heat_kernel_l2_relative": float(np.linalg.norm(run.rho - exact) / np.linalg.norm(exact)),
        "entropy_production_min": float(run.entropy_production.min()),
        "entropy_monotone": bool(np.all(np.diff(run.entropy) >= -1e-14 * np.abs(run.entropy[1:]))),
        "entropy_rate": {k: rate[k] for k in ("a", "entropy_rate", "direct_rate", "rate_mismatch")},
    }


# -- Poisson-Grad scenarios ---------------------------------------------------------

def _pg_initial(cfg, grid):
    ini = cfg.initial
    rng = np.random.default_rng(cfg.seed)
    amp = ini.get("amplitude", 0.05)
    rho = 1.0 + amp * _profile(rng, grid)
    u = amp * _profile(rng, grid)
    s = ini.get("s_per_mass", 6.3) * rho + amp * _profile(rng, grid)
    f = local_equilibrium(grid, ini.get("f_mass", 1.0), ini.get("f_theta", 1.0), 0.0, cfg.physics.m)
    return ExtendedState(grid, rho, u, s, f)


def _split(cfg):
    return "general" if cfg.coupling == "full" else "auto"


def _pg_dt_max(grid, x, E, eta, Lambda):
    """Advisory bound from the largest phase-space transport speeds."""
    E_rho, E_u, E_s, E_f = E.parts(x)
    E_f = np.broadcast_to(np.asarray(E_f, dtype=float), grid.shape)
    eta_f = eta.d1(np.asarray(x.f))
    a_r = E_u[:, None] + grid.grad_v(eta_f) * E_s[:, None] + grid.grad_v(E_f)
    a_v = (grid.d_dr(E_rho)[:, None] + grid.d_dr(eta_f * E_s[:, None])
           + grid.v[None, :] * grid.d_dr(E_u)[:, None] + grid.d_dr(E_f))
    a_v = np.abs(a_v) + Lambda * np.abs(grid.grad_v(E_f))
    rate = np.max(np.abs(a_r)) / grid.dr + np.max(a_v) / grid.dv
    return np.inf if rate == 0 else 2.8 / float(rate)


def _run_pg(cfg: ScenarioConfig, out: Path, regularized: bool) -> dict:
    grid = _grid(cfg)
    p, it = cfg.physics, cfg.integrator
    E = _state_energy(cfg, grid)
    eta = _eta(cfg)
    x0 = _pg_initial(cfg, grid)
    split = _split(cfg)
    lam = p.Lambda if regularized else 0.0
    if regularized:
        rhs = lambda x: pg_regularized_rhs(x, E, eta, p.Lambda, p.epsilon, split)
        sigma = lambda x: grid.integrate_r(entropy_production_density(x, E, p.Lambda))
    else:
        rhs = lambda x: pg_rhs(x, E, eta, split)
        sigma = lambda x: 0.0
    N_fn = lambda x: grid.integrate_r(x.rho)
    S_fn = lambda x: grid.integrate_r(x.s)
    diag = {"E": E.value, "N": N_fn, "S": S_fn,
            "Phi": lambda x: -S_fn(x) + p.E_star * E.value(x) + p.N_star * N_fn(x),
            "sigma": sigma, "momentum": lambda x: grid.integrate_r(x.u),
            "f_mass": lambda x: grid.integrate(x.f)}
    sigma_min = [math.inf]
    audit_rows = []
    snaps = _snapshot_steps(cfg, _n_steps(cfg))

    def write_snap(tag, x):
        write_hydro_csv(out / f"snapshot_{tag}_hydro.csv", grid, x.rho, x.u, x.s)
        write_distribution_csv(out / f"snapshot_{tag}_f.csv", grid, x.f)

    def hook(step, x):
        if regularized and (step % it.stride == 0):
            sigma_min[0] = min(sigma_min[0], float(entropy_production_density(x, E, p.Lambda).min()))
            a = energy_audit(x, E, eta, p.Lambda, p.epsilon)
            audit_rows.append([step * it.dt] + [a[k] for k in _AUDIT_COLS])
        if step in snaps:
            write_snap(_snap_name(snaps[step]), x)

    dt_max = _pg_dt_max(grid, x0, E, eta, lam)
    integ = Integrator(it.scheme, it.dt, dt_max, it.override_stability, hooks=[hook])
    write_snap("initial", x0)
    hook(0, x0)
    try:
        res = evolve(x0, rhs, integ, it.t_end, diag, stride=it.stride)
    except NumericalBlowup as exc:
        exc.grid = grid  # lets the caller dump the last good state
        raise
    res.diagnostics.to_csv(out / "diagnostics.csv")
    write_snap("final", res.final)
    summary = {
        "scenario": cfg.scenario, "steps": integ.step_count, "dt_max": dt_max, "split": split,
        "drift": _drift_summary(res.diagnostics, ["E", "N", "momentum", "f_mass"]),
        "entropy_change": float(S_fn(res.final) - S_fn(x0)),
    }
    if regularized:
        with open(out / "energy_audit.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + list(_AUDIT_COLS))
            for row in audit_rows:
                w.writerow([repr(float(v)) for v in row])
        summary["sigma_s_min"] = sigma_min[0]
        summary["energy_audit_max_relative"] = max(r[-1] for r in audit_rows)
    else:
        summary["drift"]["S"] = _drift_summary(res.diagnostics, ["S"])["S"]
    return summary


_AUDIT_COLS = ("rate_total", "rate_hamiltonian", "rate_dissipative", "fp_part", "production_part",
               "relative")


def run_pg_hierarchy(cfg, out):
    return _run_pg(cfg, out, regularized=False)


def run_pg_regularized(cfg, out):
    return _run_pg(cfg, out, regularized=True)


# -- static closures ----------------------------------------------------------------

def run_ce_viscosity(cfg: ScenarioConfig, out: Path) -> dict:
    grid = _grid(cfg)
    p, ini = cfg.physics, cfg.initial
    grad = np.full(grid.n_r, float(ini.get("u_star_gradient", 1e-5)))
    rho = float(ini.get("rho", 1.0))
    f0 = maxwellian(grid, rho, 0.0, p.k_B / p.E_star, p.m)
    f0 = f0 * (rho / grid.integrate_v(f0))[:, None]
    conj = _ce_conjugate(cfg)
    f_it, res, steps = ce_zeroth_fixed_point(f0, grid, grad, p.Lambda, conj)
    f_ex = ce_zeroth_explicit(grid, rho, grad, p.Lambda, p.E_star, p.m, p.k_B)
    vr = viscosity_extract(f_it, grid, p.Lambda, grad, conj)
    write_distribution_csv(out / "snapshot_final.csv", grid, f_it)
    visc = {"Gamma": vr.Gamma, "nu": vr.nu, "closure_residual": vr.closure_residual,
            "Gamma_field": vr.Gamma_field, "stress": vr.stress,
            "nu_expected": rho * p.k_B / (p.E_star * 2.0 * p.Lambda)}
    write_json(out / "viscosity.json", visc)
    return {"scenario": cfg.scenario, "fixed_point_residual": res, "pseudo_steps": steps,
            "explicit_linf": float(np.max(np.abs(f_it - f_ex))), "Gamma": vr.Gamma, "nu": vr.nu,
            "closure_residual": vr.closure_residual}


def _ce_conjugate(cfg):
    p = cfg.physics
    return boltzmann_conjugate(p.E_star, p.N_star, p.m, p.k_B)


def run_reduced_hydro(cfg: ScenarioConfig, out: Path) -> dict:
    if cfg.coupling == "decoupled":
        raise ConfigError("coupling 'decoupled' has no dissipative closure; use 'diagonal' or 'full'")
    grid = _grid(cfg)
    p = cfg.physics
    E = _state_energy(cfg, grid)
    eta = _eta(cfg)
    x = _pg_initial(cfg, grid)
    cr = constitutive_fixed_point(x, E, eta, p.Lambda)
    rho_t, u_t, s_t, info = reduced_hydro_rhs(grid, x.rho, x.u, x.s, cr.f, E, eta, p.Lambda,
                                              off_diagonal=cfg.coupling == "full")
    write_hydro_csv(out / "hydro_fields.csv", grid, x.rho, x.u, x.s, rho_t=rho_t, u_t=u_t, s_t=s_t,
                    sigma_s=info["sigma_s"], J_s_face=info["J_s"],
                    mass_flux_face=info["extra_mass_flux"],
                    viscous_coefficient_face=info["viscous_coefficient"], p=info["p"])
    write_distribution_csv(out / "snapshot_closure_f.csv", grid, cr.f)
    with open(out / "constitutive_history.csv", "w") as fh:
        fh.write("iteration,residual\n")
        for k, r in enumerate(cr.history):
            fh.write(f"{k},{r!r}\n")
    return {
        "scenario": cfg.scenario, "off_diagonal": cfg.coupling == "full",
        "constitutive": {"residual": cr.residual, "iterations": cr.iterations,
                         "periodic_mismatch": cr.periodic_mismatch,
                         "boundary_dominated": cr.boundary_dominated},
        "nu": info["nu"], "sigma_s_min": float(info["sigma_s"].min()),
        "rates": {"mass": grid.integrate_r(rho_t), "momentum": grid.integrate_r(u_t),
                  "entropy": grid.integrate_r(s_t)},
    }


RUNNERS = {
    "free-transport": run_free_transport,
    "fp-relaxation": run_fp_relaxation,
    "generic-kinetic": run_generic_kinetic,
    "diffusion-closure": run_diffusion_closure,
    "pg-hierarchy": run_pg_hierarchy,
    "pg-regularized": run_pg_regularized,
    "ce-viscosity": run_ce_viscosity,
    "reduced-hydro": run_reduced_hydro,
}


def run_scenario(cfg: ScenarioConfig, out_dir) -> dict:
    """Execute ``cfg.scenario`` and write its artifacts into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = RUNNERS[cfg.scenario](cfg, out)
    write_json(out / "config.json", cfg.to_dict())
    write_json(out / "summary.json", summary)
    return summary


# -- reductions -----------------------------------------------------------------

def reduce_maxent(cfg: ScenarioConfig, out: Path) -> dict:
    grid = _grid(cfg)
    p = cfg.physics
    S = boltzmann_entropy(grid, p.k_B, p.f_min)
    E = _kinetic_energy(cfg, grid)
    N = number(grid)
    x0 = np.full(grid.shape, 0.1)
    res = reduce_static(S, E, N, p.E_star, p.N_star, x0)
    analytic = np.exp(-1.0 - p.N_star / p.k_B - p.E_star * grid.v ** 2 / (2.0 * p.m * p.k_B))
    write_distribution_csv(out / "maxwellian.csv", grid, res.minimizer)
    summary = {"scenario": cfg.scenario, "E_star": p.E_star, "N_star": p.N_star,
               "dual_value": res.dual_value, "residual_norm": res.residual_norm,
               "iterations": res.iterations, "method": res.method,
               "linf_relative_to_analytic": float(np.max(np.abs(res.minimizer - analytic) / analytic))}
    if cfg.multipliers:
        dual = DualRelation(S, E, N, x0)
        Es, Ns = cfg.multipliers["E_star"], cfg.multipliers["N_star"]
        table = {"E_star": Es, "N_star": Ns, "S_star": [], "E": [], "N": [], "upper_entropy": []}
        for a in Es:
            table["S_star"].append([dual(a, b) for b in Ns])
            grads = [dual.gradient(a, b) for b in Ns]
            table["E"].append([g[0] for g in grads])
            table["N"].append([g[1] for g in grads])
            table["upper_entropy"].append([dual.upper_entropy(a, b) for b in Ns])
        write_json(out / "s_star_grid.json", table)
    return summary


def reduce_flux_closure(cfg: ScenarioConfig, out: Path) -> dict:
    grid = _grid(cfg)
    p, ini = cfg.physics, cfg.initial
    rng = np.random.default_rng(cfg.seed)
    rho = 1.0 + ini.get("amplitude", 0.3) * _profile(rng, grid)
    if np.any(rho <= 0):
        raise ConfigError("initial.amplitude too large: density must stay positive")
    f = local_equilibrium(grid, rho, p.k_B / p.E_star, 0.0, p.m)
    FS, K_up, K_adj = kinetic_flux_entropy(grid, f, p.Lambda)
    K_dagger = grid.d_dr(-p.k_B * np.log(rho))
    cl = reduce_flux(FS, K_up, K_adj, K_dagger, np.zeros(grid.shape), grid.inner_r, rng=cfg.seed)
    write_distribution_csv(out / "j_hat.csv", grid, cl.J_hat)
    write_hydro_csv(out / "reduced_flux.csv", grid, rho, np.zeros(grid.n_r), np.zeros(grid.n_r),
                    K_dagger=K_dagger, K=cl.K)
    summary = {
        "scenario": cfg.scenario, "dual_value": cl.lower_flux_entropy_value,
        "dual_value_closed_form": -0.5 / p.Lambda * grid.inner_r(rho, K_dagger ** 2),
        "stationarity_residual": cl.residual_norm, "iterations": cl.iterations,
        "K_fd_rel_error": cl.K_fd_rel_error,
        "J_hat_max_deviation": float(np.max(np.abs(cl.J_hat + K_dagger[:, None] / p.Lambda))),
    }
    write_json(out / "flux_closure.json", summary)
    return summary


REDUCERS = {"maxent": reduce_maxent, "flux-closure": reduce_flux_closure}


def run_reduction(cfg: ScenarioConfig, out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = REDUCERS[cfg.scenario](cfg, out)
    write_json(out / "config.json", cfg.to_dict())
    write_json(out / "summary.json", summary)
    return summary
