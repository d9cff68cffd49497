"""Hamiltonian, gradient and GENERIC vector fields for the kinetic level.

The Hamiltonian part is discretized directly as a vector field in flux
form (periodic central differences in r, face-based divergence in v), so
mass and energy are conserved to round-off and the bracket properties hold
at stencil order.  The Fokker-Planck part uses the same face quantities as
:func:`~mesothermo.functionals.fokker_planck_dissipation`, which makes its
entropy production a sum of squares.

Dictionary between conjugates: with ``f* = Phi_f`` (entropic
representation) the energetic conjugate is ``E_f = -f*/e*`` where ``e*`` is
the conjugate of energy; all dissipative terms here are written with
``f*``.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, NumericalBlowup, StabilityError
from .functionals import (DissipationPotential, Functional, boltzmann_entropy, number,
                          thermo_potential)
from .grid import ExtendedState, PhaseGrid, log_mean
from .steppers import STEPPERS

__all__ = [
    "BoundaryFluxWarning",
    "KineticBracket",
    "Integrator",
    "Diagnostics",
    "EvolveResult",
    "hamiltonian_rhs",
    "gradient_rhs",
    "fokker_planck_rhs",
    "fp_flux",
    "fp_entropy_production",
    "fp_boundary_flux",
    "generic_rhs",
    "transport_dt_max",
    "fp_dt_max",
    "evolve",
]

RK4_IMAG_LIMIT = 2.8  # imaginary-axis extent of the RK4 stability region (2 sqrt 2)
RK4_REAL_LIMIT = 2.78


class BoundaryFluxWarning(UserWarning):
    """Velocity-space flux at the truncation boundary is not negligible."""


@dataclass(frozen=True)
class KineticBracket:
    """Discrete one-particle kinetic Poisson bracket.

    ``evaluate(A_f, B_f, f) = sum f (dA/dr dB/dv - dB/dr dA/dv) dr dv`` with
    periodic central differences in r and :meth:`PhaseGrid.grad_v` in v.
    """

    grid: PhaseGrid

    def evaluate(self, A_f, B_f, f) -> float:
        g = self.grid
        A_f, B_f, f = (g.check_phase(a) for a in (A_f, B_f, f))
        rA, rB = g.d_dr(A_f), g.d_dr(B_f)
        vA, vB = g.grad_v(A_f), g.grad_v(B_f)
        return g.integrate(f * (rA * vB - rB * vA))

    def vector_field(self, f, E_f) -> np.ndarray:
        """``-d/dr(f dE_f/dv) + d/dv(f dE_f/dr)`` in divergence form."""
        g = self.grid
        f = g.check_phase(f)
        E_f = np.broadcast_to(np.asarray(E_f, dtype=float), g.shape)
        return -g.d_dr(f * g.grad_v(E_f)) + g.d_dv(f * g.d_dr(E_f))


def hamiltonian_rhs(f, E: Functional, grid: PhaseGrid) -> np.ndarray:
    """Vlasov-type Hamiltonian vector field generated by the energy ``E``."""
    return KineticBracket(grid).vector_field(f, E.derivative(f))


def gradient_rhs(x, Xi: DissipationPotential, Phi: Functional):
    """``-Xi_{x*}(x, x*)`` evaluated at ``x* = Phi_x(x)``."""
    return -np.asarray(Xi.derivative_wrt_conjugate(x, Phi.derivative(x)))


def _fp_potential(grid, E, multipliers, k_B, f_min):
    E_star, N_star = multipliers
    return thermo_potential(boltzmann_entropy(grid, k_B, f_min), E, number(grid), E_star, N_star)


def fp_flux(f, fstar, grid: PhaseGrid, Lambda: float, temperature=None) -> np.ndarray:
    """Face flux ``Lambda T f_face (f*_{j+1} - f*_j)/dv`` with log-mean ``f_face``."""
    f = np.asarray(f, dtype=float)
    mob = float(Lambda) * log_mean(f[:, 1:], f[:, :-1])
    if temperature is not None:
        mob = mob * grid.check_spatial(temperature, "temperature")[:, None]
    return mob * grid.diff_v_faces(fstar)


def fokker_planck_rhs(f, E: Functional, Lambda: float, multipliers, grid: PhaseGrid,
                      k_B: float = 1.0, f_min: float | None = None, temperature=None,
                      warn_threshold: float | None = 1e-8) -> np.ndarray:
    """``d/dv(Lambda f d f*/dv)`` with ``f* = Phi_f(f; E*, N*)``.

    The discrete Maxwellian ``exp(-1 - N*/k_B - E* E_f/k_B)`` is an exact
    fixed point.  A warning is issued when the flux the operator would
    push through the truncated velocity ends exceeds ``warn_threshold``
    times ``Lambda max f``.
    """
    f = grid.check_phase(f)
    Phi = _fp_potential(grid, E, multipliers, k_B, f_min)
    fstar = Phi.derivative(f)
    if warn_threshold is not None:
        edge = fp_boundary_flux(f, fstar, grid, Lambda)
        if edge > warn_threshold * float(Lambda) * max(float(np.max(np.abs(f))), 1e-300):
            warnings.warn("velocity boundary flux is not negligible; increase v_max",
                          BoundaryFluxWarning, stacklevel=2)
    return grid.div_v_faces(fp_flux(f, fstar, grid, Lambda, temperature))


def fp_entropy_production(f, E: Functional, Lambda: float, multipliers, grid: PhaseGrid,
                          k_B: float = 1.0, f_min: float | None = None, temperature=None) -> float:
    """``sigma = sum Lambda T f_face (d f*/dv)^2 dv dr``, equal to ``-dPhi/dt``."""
    f = grid.check_phase(f)
    fstar = _fp_potential(grid, E, multipliers, k_B, f_min).derivative(f)
    flux = fp_flux(f, fstar, grid, Lambda, temperature)
    return float(np.sum(flux * grid.diff_v_faces(fstar)) * grid.dr * grid.dv)


def fp_boundary_flux(f, fstar, grid: PhaseGrid, Lambda: float) -> float:
    """Magnitude of ``Lambda f df*/dv`` in the two outermost velocity cells."""
    gv = grid.grad_v(fstar)
    f = np.asarray(f)
    return float(Lambda) * float(max(np.max(np.abs(f[:, 0] * gv[:, 0])),
                                     np.max(np.abs(f[:, -1] * gv[:, -1]))))


def generic_rhs(f, grid: PhaseGrid, E: Functional, Xi: DissipationPotential | None = None,
                Phi: Functional | None = None, bracket: KineticBracket | None = None) -> np.ndarray:
    """Hamiltonian part generated by ``E`` plus gradient part ``-Xi_{x*}(Phi_x)``."""
    bracket = bracket or KineticBracket(grid)
    out = bracket.vector_field(f, E.derivative(f))
    if Xi is not None:
        out = out + gradient_rhs(f, Xi, Phi)
    return out


def transport_dt_max(grid: PhaseGrid, E_f) -> float:
    """Advisory RK4 bound for central-difference advection driven by ``E_f``."""
    E_f = np.broadcast_to(np.asarray(E_f, dtype=float), grid.shape)
    rate = (np.max(np.abs(grid.grad_v(E_f))) / grid.dr
            + np.max(np.abs(grid.d_dr(E_f))) / grid.dv)
    return np.inf if rate == 0 else RK4_IMAG_LIMIT / float(rate)


def fp_dt_max(grid: PhaseGrid, Lambda: float, E_star: float, m: float = 1.0, k_B: float = 1.0) -> float:
    """Advisory RK4 bound for the Fokker-Planck operator (diffusion plus drift)."""
    rate = 4.0 * Lambda * k_B / grid.dv ** 2 + Lambda * abs(E_star) * grid.v_max / (m * grid.dv)
    return RK4_REAL_LIMIT / rate


@dataclass
class Integrator:
    """Fixed-step explicit integrator.

    ``dt_max`` is an advisory stability bound; stepping above it raises
    :class:`StabilityError` unless ``override`` is set.
    """

    scheme: str = "rk4"
    dt: float = 1e-3
    dt_max: float | None = None
    override: bool = False
    step_count: int = 0
    hooks: list = field(default_factory=list)

    def __post_init__(self):
        if self.scheme not in STEPPERS:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {sorted(STEPPERS)}")
        if self.dt < 0:
            raise ValueError("dt must be nonnegative")

    def check(self):
        if self.dt_max is not None and self.dt > self.dt_max and not self.override:
            raise StabilityError(f"dt = {self.dt:.3e} exceeds the advisory bound "
                                 f"{self.dt_max:.3e}", self.dt, self.dt_max)

    def step(self, rhs: Callable, x):
        x = STEPPERS[self.scheme](rhs, x, self.dt)
        self.step_count += 1
        for hook in self.hooks:
            hook(self.step_count, x)
        return x


class Diagnostics:
    """Time series of named scalar diagnostics, one row per recorded step."""

    def __init__(self, names):
        self.names = ["t"] + list(names)
        self.rows: list[list[float]] = []

    def record(self, t: float, values: dict):
        if self.rows and not t > self.rows[-1][0]:
            raise ValueError(f"diagnostic time {t} is not after {self.rows[-1][0]}")
        self.rows.append([float(t)] + [float(values[n]) for n in self.names[1:]])

    def column(self, name: str) -> np.ndarray:
        i = self.names.index(name)
        return np.array([r[i] for r in self.rows])

    def __len__(self):
        return len(self.rows)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.names)
            for r in self.rows:
                w.writerow([repr(v) for v in r])


@dataclass
class EvolveResult:
    times: np.ndarray
    states: list
    final: object
    diagnostics: Diagnostics


def _finite(x) -> bool:
    if isinstance(x, ExtendedState):
        return x.is_finite()
    return bool(np.all(np.isfinite(x)))


def evolve(x0, rhs: Callable, integrator: Integrator, t_end: float,
           diagnostics: dict | None = None, stride: int = 1, keep_every: int | None = None) -> EvolveResult:
    """Integrate ``x' = rhs(x)`` from 0 to ``t_end`` with fixed steps.

    ``diagnostics`` maps column names to callables of the state; they are
    recorded at step 0 and every ``stride`` steps (and at the last step).
    States are kept every ``keep_every`` steps when given.  ``dt = 0``
    returns the initial state unchanged.  A NaN or Inf, or a
    :class:`DomainError` raised after the first step, aborts with
    :class:`NumericalBlowup` carrying the last good state.
    """
    integrator.check()
    diagnostics = diagnostics or {}
    diag = Diagnostics(diagnostics)
    x = x0
    dt = integrator.dt
    n = 0 if dt == 0 else int(round(t_end / dt))
    if n and abs(n * dt - t_end) > 1e-9 * max(abs(t_end), 1.0):
        n = int(np.ceil(t_end / dt))

    def record(k, state):
        diag.record(k * dt, {name: fn(state) for name, fn in diagnostics.items()})

    record(0, x)
    times, states = [0.0], [x]
    for k in range(1, n + 1):
        try:
            xn = integrator.step(rhs, x)
            if not _finite(xn):
                raise NumericalBlowup(f"non-finite state at step {k} (t = {k * dt:.6g})",
                                      last_good=x, time=(k - 1) * dt, step=k - 1)
            if k % stride == 0 or k == n:
                record(k, xn)
        except DomainError as exc:
            # positivity or temperature lost mid-run: report like a blowup
            raise NumericalBlowup(f"state left the domain at step {k} (t = {k * dt:.6g}): {exc}",
                                  last_good=x, time=(k - 1) * dt, step=k - 1) from exc
        x = xn
        if keep_every and (k % keep_every == 0 or k == n):
            times.append(k * dt)
            states.append(x)
    return EvolveResult(np.array(times), states, x, diag)
