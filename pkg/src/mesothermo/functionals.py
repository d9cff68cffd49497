"""Entropy, energy, number, Casimir and dissipation-potential functionals.

Every functional carries an analytic variational derivative.  Derivatives
are returned as *kernels*: arrays of the same shape as the state such that
the first variation is ``pairing(derivative(x), dx)``.  For functionals on
the phase grid the pairing is ``int dr int dv``, so for a local functional
``int int phi(f)`` the kernel is simply ``phi'(f)``.

Finite differences appear only in :func:`gateaux_check`, which is a test
oracle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConstructionError, DomainError
from .grid import ExtendedState, PhaseGrid, log_mean

__all__ = [
    "Functional",
    "DissipationPotential",
    "Eta",
    "StateEnergy",
    "HydroEnergy",
    "euclidean",
    "boltzmann_entropy",
    "kinetic_energy",
    "number",
    "casimir",
    "eta_family",
    "thermo_potential",
    "quadratic_dissipation",
    "projected_dissipation",
    "fokker_planck_dissipation",
    "sackur_tetrode_energy",
    "sackur_tetrode_hydro",
    "kinetic_coupled_energy",
    "gateaux_check",
    "midpoint_convexity_violations",
    "dissipation_property_report",
    "REGISTRY",
    "get_functional",
]


def euclidean(a, b) -> float:
    return float(np.vdot(np.asarray(a, dtype=float), np.asarray(b, dtype=float)))


@dataclass(frozen=True)
class Functional:
    """Scalar functional with its derivative kernel.

    ``hessian_diag`` is optional; when given it returns the diagonal of the
    second variation kernel (only meaningful for local functionals).
    ``declared_constraints`` lists names of functionals this one is known to
    conserve under the dynamics it is paired with; it is wiring metadata
    for tests.
    """

    name: str
    value: Callable
    derivative: Callable
    pairing: Callable = euclidean
    hessian_diag: Callable | None = None
    declared_constraints: tuple = ()

    def __call__(self, x) -> float:
        return self.value(x)


# -- local kinetic functionals ----------------------------------------------

@dataclass(frozen=True)
class Eta:
    """A scalar function ``eta(f)`` with first and second derivatives."""

    name: str
    f: Callable
    d1: Callable
    d2: Callable | None = None
    d1_inverse: Callable | None = None

    def __call__(self, x):
        return self.f(x)


def _positive(f, f_min, what):
    f = np.asarray(f, dtype=float)
    if f_min is not None:
        return np.maximum(f, f_min)
    if np.any(f <= 0):
        idx = tuple(int(i) for i in np.argwhere(f <= 0)[0])
        raise DomainError(f"{what} needs f > 0; f = {f[idx]!r} at cell {idx}", idx)
    return f


def eta_family(name: str, k_B: float = 1.0, h: float = 1.0, f_min: float | None = None) -> Eta:
    """Named ``eta`` choices.

    ``"identity"``: ``f``;  ``"square"``: ``f**2``;  ``"neg_flogf"``:
    ``-f ln f``;  ``"boltzmann"``: ``-k_B f (ln(h^3 f) - 1)``.  Where
    ``eta'`` is invertible its inverse is attached as ``d1_inverse``.
    """
    if name == "identity":
        return Eta(name, lambda f: np.asarray(f, dtype=float),
                   lambda f: np.ones_like(np.asarray(f, dtype=float)),
                   lambda f: np.zeros_like(np.asarray(f, dtype=float)))
    if name == "square":
        return Eta(name, lambda f: np.asarray(f) ** 2, lambda f: 2.0 * np.asarray(f),
                   lambda f: np.full_like(np.asarray(f, dtype=float), 2.0),
                   lambda y: 0.5 * np.asarray(y, dtype=float))
    if name == "neg_flogf":
        def e(f):
            f = _positive(f, f_min, "eta = -f ln f")
            return -f * np.log(f)
        return Eta(name, e, lambda f: -np.log(_positive(f, f_min, "eta'")) - 1.0,
                   lambda f: -1.0 / _positive(f, f_min, "eta''"),
                   lambda y: np.exp(-np.asarray(y, dtype=float) - 1.0))
    if name == "boltzmann":
        h3 = h ** 3

        def e(f):
            f = _positive(f, f_min, "Boltzmann eta")
            return -k_B * f * (np.log(h3 * f) - 1.0)
        return Eta(name, e, lambda f: -k_B * np.log(h3 * _positive(f, f_min, "eta'")),
                   lambda f: -k_B / _positive(f, f_min, "eta''"),
                   lambda y: np.exp(-np.asarray(y, dtype=float) / k_B) / h3)
    raise KeyError(f"unknown eta {name!r}")


def boltzmann_entropy(grid: PhaseGrid, k_B: float = 1.0, f_min: float | None = None) -> Functional:
    """``S(f) = -k_B int int f ln f`` with kernel ``-k_B (ln f + 1)``.

    Without ``f_min`` any ``f <= 0`` raises :class:`DomainError`; with it,
    ``f`` is replaced by ``max(f, f_min)`` before taking logarithms.
    """

    def value(f):
        fp = _positive(f, f_min, "Boltzmann entropy")
        return -k_B * grid.integrate(fp * np.log(fp))

    def derivative(f):
        return -k_B * (np.log(_positive(f, f_min, "Boltzmann entropy")) + 1.0)

    def hess(f):
        return -k_B / _positive(f, f_min, "Boltzmann entropy")

    return Functional("boltzmann", value, derivative, grid.inner, hess)


def kinetic_energy(grid: PhaseGrid, m: float = 1.0) -> Functional:
    ekin = np.broadcast_to(grid.v[None, :] ** 2 / (2.0 * m), grid.shape)
    return Functional("kinetic", lambda f: grid.inner(ekin, f), lambda f: np.array(ekin),
                      grid.inner, lambda f: 0.0)


def number(grid: PhaseGrid) -> Functional:
    return Functional("number", lambda f: grid.integrate(f),
                      lambda f: np.ones(grid.shape), grid.inner, lambda f: 0.0)


def casimir(grid: PhaseGrid, eta, eta_prime: Callable | None = None, name: str | None = None) -> Functional:
    """``C(f) = int int eta(f)`` with kernel ``eta'(f)``.

    ``eta`` may be an :class:`Eta` (which carries its derivatives) or a plain
    callable together with ``eta_prime``.
    """
    if isinstance(eta, Eta):
        e, d1, d2, label = eta.f, eta.d1, eta.d2, eta.name
    else:
        if eta_prime is None:
            raise ConstructionError("casimir needs eta'(f): pass eta_prime or an Eta instance")
        e, d1, d2, label = eta, eta_prime, None, getattr(eta, "__name__", "eta")
    return Functional(name or f"casimir[{label}]", lambda f: grid.integrate(e(f)),
                      lambda f: np.asarray(d1(f), dtype=float), grid.inner, d2)


def thermo_potential(S: Functional, E: Functional, N: Functional, E_star: float,
                     N_star: float) -> Functional:
    """``Phi(x) = -S(x) + E* E(x) + N* N(x)``."""

    def value(x):
        return -S.value(x) + E_star * E.value(x) + N_star * N.value(x)

    def derivative(x):
        return -S.derivative(x) + E_star * E.derivative(x) + N_star * N.derivative(x)

    def hess(x):
        return (-np.asarray(S.hessian_diag(x)) + E_star * np.asarray(E.hessian_diag(x))
                + N_star * np.asarray(N.hessian_diag(x)))

    has_hess = all(F.hessian_diag is not None for F in (S, E, N))
    return Functional(f"Phi[{S.name},{E.name},{N.name}]", value, derivative, S.pairing,
                      hess if has_hess else None)


# -- dissipation potentials ------------------------------------------------

@dataclass(frozen=True)
class DissipationPotential:
    """``Xi(x, x*)`` with its derivative kernel in the conjugate ``x*``.

    ``dissipative_casimirs`` holds the functionals ``C`` declared to satisfy
    ``<C_x, Xi_{x*}> = 0`` and ``Xi_{x*}(x, C_x) = 0``.
    """

    name: str
    value: Callable
    derivative_wrt_conjugate: Callable
    pairing: Callable = euclidean
    dissipative_casimirs: tuple = ()

    def __call__(self, x, xs) -> float:
        return self.value(x, xs)


def _as_operator(Lambda):
    """Return ``(apply, description)`` for scalar, matrix or callable Lambda."""
    if callable(Lambda):
        return Lambda
    L = np.asarray(Lambda, dtype=float)
    if L.ndim == 0:
        if not float(L) > 0:
            raise ConstructionError(f"Lambda must be positive, got {float(L)}")
        return lambda xs: float(L) * np.asarray(xs)
    if L.ndim == 2:
        if L.shape[0] != L.shape[1] or not np.allclose(L, L.T):
            raise ConstructionError("matrix Lambda must be square and symmetric")
        if np.linalg.eigvalsh(L).min() <= 0:
            raise ConstructionError("matrix Lambda must be positive definite")
        return lambda xs: L @ np.asarray(xs)
    raise ConstructionError(f"unsupported Lambda of shape {L.shape}")


def quadratic_dissipation(Lambda, pairing: Callable = euclidean,
                          dissipative_casimirs: Sequence[Functional] = ()) -> DissipationPotential:
    """``Xi(x, x*) = 1/2 <x*, Lambda x*>`` with kernel ``Lambda x*``.

    ``Lambda`` is a positive scalar, a symmetric positive-definite matrix, or
    a callable declared positive definite by the caller.
    """
    apply = _as_operator(Lambda)

    return DissipationPotential(
        "quadratic",
        lambda x, xs: 0.5 * pairing(xs, apply(xs)),
        lambda x, xs: apply(xs),
        pairing,
        tuple(dissipative_casimirs),
    )


def projected_dissipation(Lambda: float, constraints: Sequence[Functional],
                          pairing: Callable = euclidean) -> DissipationPotential:
    """Quadratic potential whose operator annihilates the constraint gradients.

    ``Lambda Q x*`` where ``Q`` is the ``pairing``-orthogonal projector onto
    the complement of ``span{C_x(x)}``.  Every constraint is then a
    dissipative Casimir and the resulting gradient flow keeps it fixed.
    """
    if not float(Lambda) > 0:
        raise ConstructionError(f"Lambda must be positive, got {Lambda}")
    lam = float(Lambda)

    def project(x, xs):
        basis = [np.asarray(C.derivative(x), dtype=float) for C in constraints]
        if not basis:
            return np.asarray(xs, dtype=float)
        gram = np.array([[pairing(a, b) for b in basis] for a in basis])
        rhs = np.array([pairing(a, xs) for a in basis])
        coef = np.linalg.solve(gram, rhs)
        out = np.asarray(xs, dtype=float).copy()
        for c, b in zip(coef, basis):
            out = out - c * b
        return out

    return DissipationPotential(
        "projected_quadratic",
        lambda x, xs: 0.5 * lam * pairing(xs, project(x, xs)),
        lambda x, xs: lam * project(x, xs),
        pairing,
        tuple(constraints),
    )


def _face_mobility(grid, f, face):
    if face == "log":
        f = np.asarray(f, dtype=float)
        return log_mean(f[..., 1:], f[..., :-1])
    return grid.face_v(f)


def fokker_planck_dissipation(grid: PhaseGrid, Lambda: float, temperature=None,
                              face: str = "log") -> DissipationPotential:
    """Discrete ``Xi(f, f*) = 1/2 int int Lambda T f (d f*/dv)^2``.

    The velocity derivative lives on cell faces and ``f`` is averaged onto
    the faces (logarithmic mean by default), so the derivative kernel
    ``-d/dv(Lambda T f d f*/dv)`` is the exact discrete gradient of the sum.
    Number is a dissipative Casimir (its kernel is constant in v).
    """
    if not float(Lambda) > 0:
        raise ConstructionError(f"Lambda must be positive, got {Lambda}")
    lam = float(Lambda)
    T = np.ones(grid.n_r) if temperature is None else grid.check_spatial(temperature, "temperature")

    def mobility(f):
        return lam * T[:, None] * _face_mobility(grid, f, face)

    def value(f, fs):
        g = grid.diff_v_faces(fs)
        return 0.5 * float(np.sum(mobility(f) * g * g) * grid.dr * grid.dv)

    def derivative(f, fs):
        return -grid.div_v_faces(mobility(f) * grid.diff_v_faces(fs))

    return DissipationPotential("fokker_planck", value, derivative, grid.inner, (number(grid),))


# -- field energies for the Poisson-Grad hierarchy ------------------------------

@dataclass(frozen=True)
class HydroEnergy:
    """Energy density ``e(rho, u, s)`` and its three partial derivatives."""

    name: str
    density: Callable
    derivatives: Callable


@dataclass(frozen=True)
class StateEnergy(Functional):
    """Energy of an :class:`ExtendedState` ``(rho, u, s, f)``.

    ``density(x)`` is the spatial energy density ``e(r)`` including the
    distribution-function part, and ``parts(x)`` returns
    ``(E_rho, E_u, E_s, E_f)``.  When the energy is an additive split
    ``E_hydro(rho, u, s) + E_kin(f)`` the ``hydro`` attribute holds the
    hydrodynamic part and ``kinetic_density`` the f-part density.
    """

    density: Callable | None = None
    parts: Callable | None = None
    hydro: HydroEnergy | None = None
    kinetic_density: Callable | None = None
    params: dict = field(default_factory=dict)


def _state_energy(name, grid, density, parts, hydro=None, kinetic_density=None, params=None):
    def value(x):
        return grid.integrate_r(density(x))

    def derivative(x):
        return ExtendedState(grid, *parts(x))

    return StateEnergy(name, value, derivative, lambda a, b: a.inner(b), None, (),
                       density, parts, hydro, kinetic_density, dict(params or {}))


def sackur_tetrode_hydro(m: float = 1.0, k_B: float = 1.0, h: float = 1.0,
                         prefactor: float = 0.5) -> HydroEnergy:
    """Local Sackur-Tetrode hydrodynamic energy density.

    ``e = prefactor * (u^2/(2 rho) + C (rho/m)^{5/3} exp(2/3 (m s/(k_B rho) - 5/2)))``
    with ``C = 3 h^2 / (4 pi m)``.  The ``prefactor`` default of 1/2 is
    kept from the published formula.
    """
    C = 3.0 * h * h / (4.0 * np.pi * m)

    def internal(rho, s):
        if np.any(rho <= 0):
            idx = int(np.argmin(rho))
            raise DomainError(f"Sackur-Tetrode energy needs rho > 0; rho = {rho[idx]!r} at cell {idx}", idx)
        return C * (rho / m) ** (5.0 / 3.0) * np.exp(2.0 / 3.0 * (m * s / (k_B * rho) - 2.5))

    def density(rho, u, s):
        return prefactor * (u * u / (2.0 * rho) + internal(rho, s))

    def derivatives(rho, u, s):
        ei = internal(rho, s)
        E_rho = prefactor * (-u * u / (2.0 * rho * rho)
                             + ei * (5.0 / (3.0 * rho) - 2.0 * m * s / (3.0 * k_B * rho * rho)))
        E_u = prefactor * u / rho
        E_s = prefactor * ei * 2.0 * m / (3.0 * k_B * rho)
        return E_rho, E_u, E_s

    return HydroEnergy("sackur_tetrode_hydro", density, derivatives)


def sackur_tetrode_energy(grid: PhaseGrid, m: float = 1.0, k_B: float = 1.0, h: float = 1.0,
                          hydro_prefactor: float = 0.5, kinetic_prefactor: float = 0.5) -> StateEnergy:
    """Combined hydrodynamic + kinetic energy of the regularized hierarchy.

    ``E = int dr [ hydro_prefactor * (u^2/2rho + ST(rho, s))
    + int dv kinetic_prefactor * v^2/(2m) f ]``.  Both prefactors default
    to 1/2 as printed; ``E_f = kinetic_prefactor * v^2 / (2m)`` and
    ``E_s`` is the temperature field.
    """
    hydro = sackur_tetrode_hydro(m, k_B, h, hydro_prefactor)
    ef = np.broadcast_to(kinetic_prefactor * grid.v[None, :] ** 2 / (2.0 * m), grid.shape)

    def kin_density(f):
        return grid.integrate_v(ef * f)

    def density(x):
        return hydro.density(x.rho, x.u, x.s) + kin_density(x.f)

    def parts(x):
        E_rho, E_u, E_s = hydro.derivatives(x.rho, x.u, x.s)
        return E_rho, E_u, E_s, np.array(ef)

    return _state_energy("sackur_tetrode", grid, density, parts, hydro, kin_density,
                         dict(m=m, k_B=k_B, h=h, hydro_prefactor=hydro_prefactor,
                              kinetic_prefactor=kinetic_prefactor))


def kinetic_coupled_energy(grid: PhaseGrid, kappa: float = 0.1, m: float = 1.0, k_B: float = 1.0,
                           h: float = 1.0) -> StateEnergy:
    """A deliberately non-additive energy used to contrast with the split case.

    ``e = ST_hydro(rho, u, s) + (1 + kappa rho) int dv v^2/(2m) f`` (unit
    prefactors), so ``E_rho`` depends on ``f`` and ``E_f`` on ``rho``.
    """
    hydro = sackur_tetrode_hydro(m, k_B, h, 1.0)
    w = grid.v[None, :] ** 2 / (2.0 * m)

    def density(x):
        return hydro.density(x.rho, x.u, x.s) + (1.0 + kappa * x.rho) * grid.integrate_v(w * x.f)

    def parts(x):
        E_rho, E_u, E_s = hydro.derivatives(x.rho, x.u, x.s)
        E_rho = E_rho + kappa * grid.integrate_v(w * x.f)
        E_f = (1.0 + kappa * x.rho)[:, None] * w
        return E_rho, E_u, E_s, E_f

    return _state_energy("kinetic_coupled", grid, density, parts, params=dict(kappa=kappa, m=m))


# -- finite-difference oracles and property checks -------------------------------

def gateaux_check(F: Functional, x, dx, eps: float = 1e-4) -> float:
    """Relative mismatch between a central difference and ``<F_x, dx>``."""
    fd = (F.value(x + eps * dx) - F.value(x - eps * dx)) / (2.0 * eps)
    an = F.pairing(F.derivative(x), dx)
    return abs(fd - an) / max(abs(an), abs(fd), 1e-300)


def midpoint_convexity_violations(fun: Callable, pairs, tol: float = 1e-12) -> int:
    """Count pairs ``(a, b)`` where ``fun((a+b)/2) > (fun(a)+fun(b))/2``."""
    bad = 0
    for a, b in pairs:
        mid = fun(0.5 * (a + b))
        avg = 0.5 * (fun(a) + fun(b))
        if mid > avg + tol * max(1.0, abs(avg)):
            bad += 1
    return bad


def dissipation_property_report(Xi: DissipationPotential, x, sample_conjugates, rng=None) -> dict:
    """Evaluate the structural properties a dissipation potential must have.

    Returns the magnitudes of ``Xi(x, 0)``, ``Xi_{x*}(x, 0)``, the number of
    midpoint-convexity violations over consecutive pairs in
    ``sample_conjugates``, and for every declared dissipative Casimir the two
    degeneracy pairings.
    """
    xs0 = np.zeros_like(np.asarray(sample_conjugates[0], dtype=float))
    out = {
        "value_at_zero": abs(Xi.value(x, xs0)),
        "derivative_at_zero": float(np.max(np.abs(Xi.derivative_wrt_conjugate(x, xs0)))),
        "convexity_violations": midpoint_convexity_violations(
            lambda xs: Xi.value(x, xs), list(zip(sample_conjugates[:-1], sample_conjugates[1:]))),
        "casimirs": {},
    }
    for C in Xi.dissipative_casimirs:
        Cx = np.asarray(C.derivative(x), dtype=float)
        scale = max(1.0, float(np.max(np.abs(Cx))))
        worst = 0.0
        for xs in sample_conjugates:
            d = Xi.derivative_wrt_conjugate(x, xs)
            worst = max(worst, abs(Xi.pairing(Cx, d)) / (scale * max(1.0, float(np.max(np.abs(d))))))
        at_c = Xi.derivative_wrt_conjugate(x, Cx)
        out["casimirs"][C.name] = {
            "orthogonality": worst,
            "annihilation": abs(Xi.pairing(Cx, at_c)) / scale ** 2,
        }
    return out


# -- registry -----------------------------------------------------------------

REGISTRY = {
    "entropy": {"boltzmann": boltzmann_entropy},
    "energy": {"kinetic": kinetic_energy, "sackur_tetrode": sackur_tetrode_energy,
               "kinetic_coupled": kinetic_coupled_energy},
    "number": {"number": number},
    "eta": {"identity": None, "square": None, "neg_flogf": None, "boltzmann": None},
}


def get_functional(kind: str, name: str, grid: PhaseGrid, **params):
    """Look up a functional factory by kind and name and build it on ``grid``."""
    try:
        table = REGISTRY[kind]
    except KeyError:
        raise KeyError(f"unknown functional kind {kind!r}; choose from {sorted(REGISTRY)}") from None
    if name not in table:
        raise KeyError(f"unknown {kind} {name!r}; choose from {sorted(table)}")
    if kind == "eta":
        return eta_family(name, **params)
    return table[name](grid, **params)
