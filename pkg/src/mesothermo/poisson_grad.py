"""Poisson-Grad hierarchy: hydrodynamic fields coupled to a distribution function.

The state is ``x = (rho, u, s, f)`` (:class:`~mesothermo.grid.ExtendedState`)
and the energy a :class:`~mesothermo.functionals.StateEnergy` exposing
``E_rho, E_u, E_s, E_f``.  In one dimension the equations read::

    rho_t = -D(rho E_u) - D int f dE_f/dv
    u_t   = -D(u E_u) - D p - D int f v dE_f/dv
    s_t   = -D(s E_u) - D int eta dE_f/dv
    f_t   = -D[f (E_u + d(eta_f)/dv E_s)]
            + d/dv[f (D E_rho + D(eta_f E_s) + v D E_u)]
            - D(f dE_f/dv) + d/dv(f D E_f)

with ``D`` the periodic central difference in r and
``p = -e + rho E_rho + u E_u + s E_s + int f E_f``.  The regularized
version scales the spatial f-flux by ``epsilon`` and adds the
Fokker-Planck term ``d/dv(Lambda f dE_f/dv)`` together with the matching
entropy production in the s-equation.  Both dissipative terms are built
from the same face values, so their contributions to the total energy
cancel to round-off.

Hydrodynamic fields use ``s`` (not ``e``) as the thermal variable; the
energy density is recomputed from the energy functional when needed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConstructionError, ConvergenceError, DomainError
from .functionals import Eta, HydroEnergy, StateEnergy, eta_family
from .grid import ExtendedState, PhaseGrid, log_mean
from .steppers import rk4_step

__all__ = [
    "HydroClosure",
    "ViscosityResult",
    "ConstitutiveResult",
    "hydro_closure",
    "euler_rhs",
    "pg_euler_part",
    "pg_rhs",
    "pg_regularized_rhs",
    "entropy_production_density",
    "energy_audit",
    "energy_density_rate",
    "boltzmann_conjugate",
    "ce_zeroth_flux",
    "ce_zeroth_rhs",
    "ce_zeroth_potential",
    "ce_zeroth_fixed_point",
    "ce_zeroth_explicit",
    "viscosity_extract",
    "constitutive_fixed_point",
    "constitutive_explicit",
    "reduced_hydro_rhs",
    "local_equilibrium",
]


def _require_parts(E):
    if not isinstance(E, StateEnergy) or E.parts is None or E.density is None:
        raise ConstructionError(f"energy {getattr(E, 'name', E)!r} does not provide "
                                "E_rho, E_u, E_s, E_f and an energy density")


def _eta(eta):
    if isinstance(eta, Eta):
        return eta
    if isinstance(eta, str):
        return eta_family(eta)
    raise ConstructionError("eta must be an Eta instance or a registered name")


# -- closures ----------------------------------------------------------------

@dataclass
class HydroClosure:
    """Pressure and kinetic fluxes derived from the energy at a state.

    ``p`` uses ``-e + rho E_rho + u E_u + s E_s + int f E_f`` and
    ``p_alt`` the equivalent ``-eps + rho E_rho + u E_u + s E_s`` with the
    hydrodynamic energy density ``eps = e - int f E_f``.  ``Pi`` is
    ``f E_rho + eta E_s + f E_f``; ``K_rho``, ``K_u``, ``K_e`` are the
    velocity integrands of the upper reduced fluxes evaluated at
    ``f* = E_f``, and ``flux_*`` their velocity integrals.
    """

    p: np.ndarray
    p_alt: np.ndarray
    eps: np.ndarray
    Pi: np.ndarray
    K_rho: np.ndarray
    K_u: np.ndarray
    K_e: np.ndarray
    flux_rho: np.ndarray = field(default=None)
    flux_u: np.ndarray = field(default=None)
    flux_e: np.ndarray = field(default=None)


def hydro_closure(x: ExtendedState, E: StateEnergy, eta) -> HydroClosure:
    _require_parts(E)
    eta = _eta(eta)
    g = x.grid
    E_rho, E_u, E_s, E_f = E.parts(x)
    e = E.density(x)
    fEf = g.integrate_v(x.f * E_f)
    eps = e - fEf
    p = -e + x.rho * E_rho + x.u * E_u + x.s * E_s + fEf
    p_alt = -eps + x.rho * E_rho + x.u * E_u + x.s * E_s
    Pi = x.f * E_rho[:, None] + eta(x.f) * E_s[:, None] + x.f * E_f
    dEf = g.grad_v(E_f)
    v = g.v[None, :]
    K_rho = x.f * dEf
    K_u = x.f * (E_f + v * dEf)
    K_e = x.f * (E_f * E_u[:, None] + Pi * dEf)
    return HydroClosure(p, p_alt, eps, Pi, K_rho, K_u, K_e,
                        g.integrate_v(K_rho), g.integrate_v(K_u), g.integrate_v(K_e))


# -- Euler part and full hierarchy ---------------------------------------------

def euler_rhs(grid: PhaseGrid, hydro: HydroEnergy, rho, u, s):
    """Euler equations generated by a hydrodynamic energy density alone."""
    E_rho, E_u, E_s = hydro.derivatives(rho, u, s)
    p = -hydro.density(rho, u, s) + rho * E_rho + u * E_u + s * E_s
    D = grid.d_dr
    return -D(rho * E_u), -D(u * E_u) - D(p), -D(s * E_u)


def pg_euler_part(x: ExtendedState, E: StateEnergy, split: str = "auto"):
    """Euler terms of the hydrodynamic equations.

    With an additively split energy (``E.hydro`` set) and ``split="auto"``
    the Euler terms are produced by :func:`euler_rhs` from the hydrodynamic
    energy alone, so they cannot depend on ``f``.  ``split="general"``
    always uses the pressure built from the full energy.
    """
    _require_parts(E)
    g = x.grid
    if split == "auto" and E.hydro is not None:
        return euler_rhs(g, E.hydro, x.rho, x.u, x.s)
    if split not in ("auto", "general"):
        raise ValueError(f"split must be 'auto' or 'general', got {split!r}")
    E_rho, E_u, E_s, E_f = E.parts(x)
    p = (-E.density(x) + x.rho * E_rho + x.u * E_u + x.s * E_s
         + g.integrate_v(x.f * E_f))
    D = g.d_dr
    return -D(x.rho * E_u), -D(x.u * E_u) - D(p), -D(x.s * E_u)


def _check_temperature(E_s):
    if np.any(E_s <= 0):
        i = int(np.argmin(E_s))
        raise DomainError(f"temperature E_s must be positive; E_s = {E_s[i]!r} at cell {i}", i)


def _pg_terms(x, E, eta, epsilon, split):
    g = x.grid
    eta = _eta(eta)
    E_rho, E_u, E_s, E_f = E.parts(x)
    E_f = np.broadcast_to(np.asarray(E_f, dtype=float), g.shape)
    f = np.asarray(x.f)
    D = g.d_dr
    dEf = g.grad_v(E_f)
    eta_f = eta.d1(f)
    v = g.v[None, :]

    er, eu, es = pg_euler_part(x, E, split)
    rho_t = er - D(g.integrate_v(f * dEf))
    u_t = eu - D(g.integrate_v(f * v * dEf))
    s_t = es - D(g.integrate_v(eta(f) * dEf))

    spatial = f * (E_u[:, None] + g.grad_v(eta_f) * E_s[:, None]) + f * dEf
    force = f * (D(E_rho)[:, None] + D(eta_f * E_s[:, None]) + v * D(E_u)[:, None]) + f * D(E_f)
    f_t = -epsilon * D(spatial) + g.d_dv(force)
    return [rho_t, u_t, s_t, f_t], E_s, E_f


def pg_rhs(x: ExtendedState, E: StateEnergy, eta, split: str = "auto") -> ExtendedState:
    """Right-hand side of the non-dissipative hierarchy."""
    _require_parts(E)
    terms, _, _ = _pg_terms(x, E, eta, 1.0, split)
    return ExtendedState(x.grid, *terms)


def _fp_face_flux(grid, f, E_f, Lambda):
    return float(Lambda) * grid.face_v(f) * grid.diff_v_faces(E_f)


def entropy_production_density(x: ExtendedState, E: StateEnergy, Lambda: float) -> np.ndarray:
    """``(1/E_s) int f Lambda (dE_f/dv)^2`` per spatial cell (face form)."""
    _require_parts(E)
    g = x.grid
    _, _, E_s, E_f = E.parts(x)
    E_f = np.broadcast_to(np.asarray(E_f, dtype=float), g.shape)
    _check_temperature(E_s)
    flux = _fp_face_flux(g, x.f, E_f, Lambda)
    return np.sum(flux * g.diff_v_faces(E_f), axis=-1) * g.dv / E_s


def pg_regularized_rhs(x: ExtendedState, E: StateEnergy, eta, Lambda: float, epsilon: float = 1.0,
                       split: str = "auto") -> ExtendedState:
    """Regularized hierarchy with Fokker-Planck dissipation in velocity.

    The f-equation gains ``d/dv(f Lambda dE_f/dv)`` (arithmetic face mean of
    ``f``) and its spatial flux is scaled by ``epsilon``; the s-equation
    gains ``(1/E_s) int f Lambda (dE_f/dv)^2`` built from the same faces.
    """
    _require_parts(E)
    if not Lambda >= 0:
        raise ConstructionError(f"Lambda must be nonnegative, got {Lambda}")
    if not 0 < epsilon <= 1:
        raise ConstructionError(f"epsilon must lie in (0, 1], got {epsilon}")
    g = x.grid
    terms, E_s, E_f = _pg_terms(x, E, eta, epsilon, split)
    _check_temperature(E_s)
    if Lambda > 0:
        flux = _fp_face_flux(g, x.f, E_f, Lambda)
        terms[3] = terms[3] + g.div_v_faces(flux)
        terms[2] = terms[2] + np.sum(flux * g.diff_v_faces(E_f), axis=-1) * g.dv / E_s
    return ExtendedState(g, *terms)


def energy_audit(x: ExtendedState, E: StateEnergy, eta, Lambda: float, epsilon: float = 1.0) -> dict:
    """Split the total-energy rate into Hamiltonian and dissipative parts.

    ``dE/dt = <E_x, rhs>``.  The dissipative part is the difference between
    the rates with ``Lambda`` and with ``Lambda = 0``; it should vanish.
    ``fp_part`` and ``production_part`` are the two contributions that
    cancel, and ``relative`` is the mismatch relative to ``fp_part``.
    """
    Ex = E.derivative(x)
    full = Ex.inner(pg_regularized_rhs(x, E, eta, Lambda, epsilon))
    ham = Ex.inner(pg_regularized_rhs(x, E, eta, 0.0, epsilon))
    g = x.grid
    _, _, E_s, E_f = E.parts(x)
    E_f = np.broadcast_to(np.asarray(E_f, dtype=float), g.shape)
    flux = _fp_face_flux(g, x.f, E_f, Lambda)
    fp_part = g.inner(E_f, g.div_v_faces(flux))
    prod_part = g.inner_r(E_s, entropy_production_density(x, E, Lambda))
    scale = max(abs(fp_part), 1e-300)
    return {
        "rate_total": full,
        "rate_hamiltonian": ham,
        "rate_dissipative": full - ham,
        "fp_part": fp_part,
        "production_part": prod_part,
        "relative": abs(full - ham) / scale,
    }


def energy_density_rate(x: ExtendedState, rhs: ExtendedState, E: StateEnergy) -> np.ndarray:
    """``e_t = E_rho rho_t + E_u u_t + E_s s_t + int E_f f_t`` per cell."""
    E_rho, E_u, E_s, E_f = E.parts(x)
    return (E_rho * rhs.rho + E_u * rhs.u + E_s * rhs.s
            + x.grid.integrate_v(np.asarray(E_f) * rhs.f))


# -- zeroth Chapman-Enskog approximation ----------------------------------------

def boltzmann_conjugate(E_star=1.0, N_star=0.0, m=1.0, k_B=1.0):
    def conj(f, grid):
        f = np.asarray(f, dtype=float)
        if np.any(f <= 0):
            idx = tuple(int(i) for i in np.argwhere(f <= 0)[0])
            raise DomainError(f"conjugate needs f > 0 (cell {idx})", idx)
        return k_B * (np.log(f) + 1.0) + E_star * grid.v[None, :] ** 2 / (2.0 * m) + N_star
    return conj


def ce_zeroth_flux(f, grid: PhaseGrid, u_star_gradient, Lambda: float, f_conjugate=None) -> np.ndarray:
    """Velocity face flux ``f_face (Lambda df*/dv - v g)`` with ``g = du*/dr``."""
    f = grid.check_phase(f)
    conj = f_conjugate or boltzmann_conjugate()
    gr = grid.check_spatial(u_star_gradient, "u_star_gradient")
    fstar = conj(f, grid)
    ff = log_mean(f[:, 1:], f[:, :-1])
    return ff * (float(Lambda) * grid.diff_v_faces(fstar) - grid.v_faces[None, :] * gr[:, None])


def ce_zeroth_rhs(f, grid: PhaseGrid, u_star_gradient, Lambda: float, f_conjugate=None) -> np.ndarray:
    """``-d/dv(f v du*/dr) + d/dv(f Lambda df*/dv)`` in face form.

    ``f_conjugate(f, grid)`` returns ``f*``; the default is the Boltzmann
    conjugate ``ln f + 1 + v^2/2`` (``E* = 1``, ``N* = 0``).
    """
    return grid.div_v_faces(ce_zeroth_flux(f, grid, u_star_gradient, Lambda, f_conjugate))


def ce_zeroth_potential(f, grid: PhaseGrid, u_star_gradient, Lambda: float, f_conjugate=None) -> float:
    """Flux potential ``-FS(f*) + int int (f v du*/dr) df*/dv`` at the current ``f*``.

    ``FS(f*) = 1/2 int int Lambda f (df*/dv)^2``; the right-hand side of
    :func:`ce_zeroth_rhs` is minus the derivative of this potential with
    respect to ``f*`` (faces as in the flux form).
    """
    f = grid.check_phase(f)
    conj = f_conjugate or boltzmann_conjugate()
    gr = grid.check_spatial(u_star_gradient, "u_star_gradient")
    fstar = conj(f, grid)
    ff = log_mean(f[:, 1:], f[:, :-1])
    d = grid.diff_v_faces(fstar)
    FS = 0.5 * float(np.sum(Lambda * ff * d * d)) * grid.dr * grid.dv
    drive = float(np.sum(ff * grid.v_faces[None, :] * gr[:, None] * d)) * grid.dr * grid.dv
    return -FS + drive


def ce_zeroth_explicit(grid: PhaseGrid, mass, u_star_gradient, Lambda: float, E_star: float = 1.0,
                       m: float = 1.0, k_B: float = 1.0) -> np.ndarray:
    """Discrete fixed point of :func:`ce_zeroth_rhs` for the Boltzmann conjugate.

    Zero face flux gives ``k_B d ln f = -(E*/m - g/Lambda) v dv``, i.e. a
    Maxwellian with temperature ``k_B/(E*/m - g/Lambda)`` scaled to the
    given mass per cell.
    """
    gr = grid.check_spatial(u_star_gradient, "u_star_gradient")
    a = (E_star / m - gr / Lambda) / k_B
    if np.any(a <= 0):
        raise DomainError("velocity gradient too large: no normalizable fixed point")
    w = np.exp(-0.5 * a[:, None] * grid.v[None, :] ** 2)
    mass = np.broadcast_to(np.asarray(mass, dtype=float), (grid.n_r,))
    return w * (mass / grid.integrate_v(w))[:, None]


def ce_zeroth_fixed_point(f0, grid: PhaseGrid, u_star_gradient, Lambda: float, f_conjugate=None,
                          tol: float = 1e-12, max_steps: int = 200000, dt: float | None = None):
    """Relax :func:`ce_zeroth_rhs` in pseudo-time until the face flux vanishes.

    Returns ``(f, residual, steps)`` where ``residual`` is the largest face
    flux relative to ``Lambda max f``.
    """
    f = np.array(grid.check_phase(f0), dtype=float)
    if dt is None:
        dt = 0.9 * 2.78 / (4.0 * Lambda / grid.dv ** 2
                           + (Lambda + np.max(np.abs(u_star_gradient))) * grid.v_max / grid.dv)

    def rhs(y):
        return ce_zeroth_rhs(y, grid, u_star_gradient, Lambda, f_conjugate)

    scale = float(Lambda) * float(np.max(f))
    res = np.inf
    for k in range(max_steps):
        res = float(np.max(np.abs(ce_zeroth_flux(f, grid, u_star_gradient, Lambda, f_conjugate)))) / scale
        if res <= tol:
            return f, res, k
        f = rk4_step(rhs, f, dt)
    raise ConvergenceError(f"ce_zeroth relaxation stalled at residual {res:.3e}", best=f)


@dataclass
class ViscosityResult:
    Gamma: float
    nu: float
    closure_residual: float
    Gamma_field: np.ndarray = None
    stress: np.ndarray = None


def viscosity_extract(f, grid: PhaseGrid, Lambda: float, u_star_gradient, f_conjugate=None) -> ViscosityResult:
    """Viscosity from a stationary distribution of the zeroth approximation.

    ``Gamma = int f v^2`` (spatial mean; the per-cell values are kept),
    ``nu = Gamma / (2 Lambda)`` and the closure residual is the relative
    L2 mismatch between the stress moment ``int f v df*/dv`` and
    ``(Gamma/Lambda) du*/dr``.
    """
    f = grid.check_phase(f)
    conj = f_conjugate or boltzmann_conjugate()
    gr = grid.check_spatial(u_star_gradient, "u_star_gradient")
    v = grid.v[None, :]
    Gfield = grid.integrate_v(f * v * v)
    if np.any(Gfield <= 0):
        raise DomainError("second velocity moment is not positive")
    stress = grid.integrate_v(f * v * grid.grad_v(conj(f, grid)))
    target = Gfield / Lambda * gr
    denom = np.linalg.norm(target)
    resid = np.linalg.norm(stress - target) / denom if denom > 0 else float(np.linalg.norm(stress))
    Gamma = float(np.mean(Gfield))
    return ViscosityResult(Gamma, Gamma / (2.0 * Lambda), float(resid), Gfield, stress)


# -- constitutive fixed point and reduced hydrodynamics -------------------------------

@dataclass
class ConstitutiveResult:
    """Leading-order distribution from the constitutive condition.

    ``boundary_dominated`` is set when the condition cannot hold on the
    periodic domain (the right-hand side has a nonzero spatial mean), so the
    solution was integrated from the first cell across the open interval.
    """

    f: np.ndarray
    residual: float
    iterations: int
    history: list
    periodic_mismatch: float
    boundary_dominated: bool


def _face_avg_r(a):
    return 0.5 * (a + np.roll(a, -1, axis=0))


def _constitutive_target(x, E, Lambda):
    """Face values of ``-Lambda dE_f/dv - D+E_rho - v D+E_u - D+E_f``."""
    g = x.grid
    E_rho, E_u, E_s, E_f = E.parts(x)
    E_f = np.broadcast_to(np.asarray(E_f, dtype=float), g.shape)
    v = g.v[None, :]
    Dp = g.diff_r_forward
    return (-float(Lambda) * _face_avg_r(g.grad_v(E_f)) - Dp(E_rho)[:, None]
            - v * Dp(E_u)[:, None] - Dp(E_f)), E_s


def _integrate_open(R, q0, dr):
    """``q_i = q0 + dr sum_{k<i} R_{k+1/2}`` from the first cell."""
    q = np.empty((R.shape[0],) + R.shape[1:])
    q[0] = q0
    q[1:] = q0 + dr * np.cumsum(R[:-1], axis=0)
    return q


def constitutive_explicit(x: ExtendedState, E: StateEnergy, eta, Lambda: float, anchor=None) -> np.ndarray:
    """Closed-form leading-order distribution when ``E_f`` does not depend on f.

    ``q = eta_f E_s`` follows by summing the face condition from the first
    cell; then ``f = (eta')^{-1}(q / E_s)``.
    """
    _require_parts(E)
    eta = _eta(eta)
    if eta.d1_inverse is None:
        raise ConstructionError(f"eta {eta.name!r} has no inverse derivative")
    g = x.grid
    R, E_s = _constitutive_target(x, E, Lambda)
    _check_temperature(E_s)
    f_anchor = np.asarray(x.f)[0] if anchor is None else np.asarray(anchor, dtype=float)
    q = _integrate_open(R, eta.d1(f_anchor) * E_s[0], g.dr)
    return eta.d1_inverse(q / E_s[:, None])


def constitutive_fixed_point(x: ExtendedState, E: StateEnergy, eta, Lambda: float, omega: float = 0.5,
                             tol: float = 1e-8, max_iter: int = 500, periodic_tol: float = 1e-10
                             ) -> ConstitutiveResult:
    """Solve the constitutive condition for f by damped Picard iteration.

    The condition ``D E_rho + D(eta_f E_s) + v D E_u + D E_f = -Lambda dE_f/dv``
    is imposed on r-faces with forward differences.  Each sweep evaluates
    the energy derivatives at the current iterate, integrates for
    ``q = eta_f E_s`` from the first cell (the anchor is the input ``f`` in
    that cell) and relaxes ``f <- (1 - omega) f + omega (eta')^{-1}(q/E_s)``.
    The residual is the largest face mismatch of the condition.
    """
    _require_parts(E)
    eta = _eta(eta)
    if eta.d1_inverse is None:
        raise ConstructionError(f"eta {eta.name!r} has no inverse derivative")
    g = x.grid
    anchor = np.array(x.f[0])
    f = np.array(x.f, dtype=float)

    def residual(fc):
        xc = ExtendedState(g, x.rho, x.u, x.s, fc)
        R, E_s = _constitutive_target(xc, E, Lambda)
        lhs = g.diff_r_forward(eta.d1(fc) * E_s[:, None])
        # the wrap-around face is not imposed on the open interval
        return float(np.max(np.abs((lhs - R)[:-1]))), R, E_s

    history = []
    mismatch = 0.0
    for it in range(max_iter + 1):
        res, R, E_s = residual(f)
        history.append(res)
        mismatch = float(np.max(np.abs(np.sum(R, axis=0)))) * g.dr
        if res <= tol:
            return ConstitutiveResult(f, res, it, history, mismatch, mismatch > periodic_tol)
        if not np.isfinite(res) or (len(history) > 5 and history[-1] > 10.0 * min(history)):
            break
        _check_temperature(E_s)
        q = _integrate_open(R, eta.d1(anchor) * E_s[0], g.dr)
        with np.errstate(over="ignore", invalid="ignore"):
            f = (1.0 - omega) * f + omega * eta.d1_inverse(q / E_s[:, None])
    raise ConvergenceError(f"constitutive iteration failed, residual {history[-1]:.3e}",
                           best=f, history=history)


def local_equilibrium(grid: PhaseGrid, rho, theta, mean=0.0, m: float = 1.0) -> np.ndarray:
    """Cellwise Maxwellian with density ``rho`` and temperature ``theta``."""
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (grid.n_r,))
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (grid.n_r,))
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (grid.n_r,))
    v = grid.v[None, :]
    w = np.exp(-m * (v - mean[:, None]) ** 2 / (2.0 * theta[:, None]))
    return w * (rho / grid.integrate_v(w))[:, None]


def reduced_hydro_rhs(grid: PhaseGrid, rho, u, s, f_closure, E: StateEnergy, eta, Lambda: float,
                      off_diagonal: bool = False):
    """Reduced hydrodynamics with self-diffusion.

    With ``Q = D E_rho + D(eta_f E_s) + v D E_u + D E_f`` on r-faces::

        rho_t = -D(rho E_u) + D(D E_rho int f/Lambda)
        u_t   = -D(u E_u) - D p + D(D E_u int f v^2/Lambda)
        s_t   = -D(s E_u) - D J_s + sigma_s,
        J_s = -int eta Q/Lambda,  sigma_s = (1/E_s) int f Q^2/Lambda

    ``off_diagonal=True`` replaces the two diffusive fluxes with the full
    moments ``int f Q/Lambda`` and ``int f v Q/Lambda``.  Returns
    ``(rho_t, u_t, s_t, info)`` where ``info`` holds ``sigma_s``, ``J_s``,
    the extra mass flux, the viscous coefficient ``int f v^2/Lambda`` and
    the pressure.
    """
    _require_parts(E)
    eta = _eta(eta)
    f_closure = grid.check_phase(f_closure, "f_closure")
    g = grid
    x = ExtendedState(g, rho, u, s, f_closure)
    E_rho, E_u, E_s, E_f = E.parts(x)
    _check_temperature(E_s)
    E_f = np.broadcast_to(np.asarray(E_f, dtype=float), g.shape)
    Dp = g.diff_r_forward
    v = g.v[None, :]
    lam = float(Lambda)
    f_face = _face_avg_r(f_closure)
    Q = (Dp(E_rho)[:, None] + Dp(eta.d1(f_closure) * E_s[:, None]) + v * Dp(E_u)[:, None] + Dp(E_f))
    visc = g.integrate_v(f_face * v * v) / lam
    if np.any(visc < 0):
        raise DomainError("negative viscous coefficient")
    if off_diagonal:
        mass_flux = g.integrate_v(f_face * Q) / lam
        mom_flux = g.integrate_v(f_face * v * Q) / lam
    else:
        mass_flux = Dp(E_rho) * g.integrate_v(f_face) / lam
        mom_flux = Dp(E_u) * visc
    J_s = -g.integrate_v(_face_avg_r(eta(f_closure)) * Q) / lam
    Es_face = _face_avg_r(E_s)
    sigma_face = g.integrate_v(f_face * Q * Q) / (lam * Es_face)
    sigma_s = 0.5 * (sigma_face + np.roll(sigma_face, 1))
    er, eu, es = pg_euler_part(x, E)
    rho_t = er + g.div_r_faces(mass_flux)
    u_t = eu + g.div_r_faces(mom_flux)
    s_t = es - g.div_r_faces(J_s) + sigma_s
    info = {"sigma_s": sigma_s, "J_s": J_s, "extra_mass_flux": mass_flux,
            "viscous_coefficient": visc, "nu": float(np.mean(visc)),
            "p": hydro_closure(x, E, eta).p}
    return rho_t, u_t, s_t, info
