"""Phase-space grid, quadrature, difference operators and field containers.

The domain is one spatial dimension (periodic, length ``L``) times one
velocity dimension (truncated to ``[-v_max, v_max]`` with zero-flux ends).
All fields are stored at cell centres.  Arrays on the full phase grid have
shape ``(n_r, n_v)``, spatial fields have shape ``(n_r,)``.

Two velocity derivatives are provided because they play different roles:

* :meth:`PhaseGrid.d_dv` differentiates a *flux*.  It is written in
  divergence form over cell faces with the two boundary faces closed, so
  ``integrate_v(d_dv(g))`` vanishes to round-off for any ``g``.
* :meth:`PhaseGrid.grad_v` differentiates a *potential* (``E_f``, ``f*``,
  ``eta'(f)``).  Interior cells use central differences and the two end
  cells use second-order one-sided stencils, so quadratics are
  differentiated exactly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, ShapeError

__all__ = [
    "PhaseGrid",
    "ScalarField",
    "DistFn",
    "ExtendedState",
    "integrate_v",
    "moments",
    "maxwellian",
    "log_mean",
    "write_distribution_csv",
    "read_distribution_csv",
    "write_hydro_csv",
    "read_hydro_csv",
]


@dataclass(frozen=True)
class PhaseGrid:
    """Uniform cell-centred grid on ``[0, L) x [-v_max, v_max]``."""

    n_r: int
    n_v: int
    length_r: float = 1.0
    v_max: float = 8.0

    def __post_init__(self):
        if int(self.n_r) != self.n_r or self.n_r < 1:
            raise ValueError(f"n_r must be a positive integer, got {self.n_r!r}")
        if int(self.n_v) != self.n_v or self.n_v < 2:
            raise ValueError(f"n_v must be an integer >= 2, got {self.n_v!r}")
        if not self.length_r > 0 or not self.v_max > 0:
            raise ValueError("length_r and v_max must be positive")

    @property
    def dr(self) -> float:
        return self.length_r / self.n_r

    @property
    def dv(self) -> float:
        return 2.0 * self.v_max / self.n_v

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.n_r) + 0.5) * self.dr

    @property
    def v(self) -> np.ndarray:
        # symmetric about zero by construction
        j = np.arange(self.n_v)
        return (j - (self.n_v - 1) / 2.0) * self.dv

    @property
    def v_faces(self) -> np.ndarray:
        """Interior cell faces in v (``n_v - 1`` values)."""
        return 0.5 * (self.v[1:] + self.v[:-1])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_v)

    @property
    def v_weights(self) -> np.ndarray:
        """Midpoint quadrature weights in v."""
        return np.full(self.n_v, self.dv)

    @property
    def cell_volume(self) -> float:
        return self.dr * self.dv

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable ``(r[:, None], v[None, :])`` pair."""
        return self.r[:, None], self.v[None, :]

    # -- shape checks ----------------------------------------------------
    def check_phase(self, g, name="array") -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape != self.shape:
            raise ShapeError(f"{name} has shape {g.shape}, grid expects {self.shape}")
        return g

    def check_spatial(self, a, name="field") -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if a.shape != (self.n_r,):
            raise ShapeError(f"{name} has shape {a.shape}, grid expects ({self.n_r},)")
        return a

    # -- quadrature ------------------------------------------------------
    def integrate_v(self, g) -> np.ndarray:
        """``int dv g`` at every spatial cell (midpoint rule)."""
        g = self.check_phase(g)
        return g @ self.v_weights

    def integrate_r(self, a) -> float:
        a = self.check_spatial(a)
        return float(np.sum(a) * self.dr)

    def integrate(self, g) -> float:
        """``int dr int dv g``."""
        return self.integrate_r(self.integrate_v(g))

    def inner(self, a, b) -> float:
        """Phase-space pairing ``<a, b> = int dr int dv a b``."""
        return self.integrate(np.asarray(a) * np.asarray(b))

    def inner_r(self, a, b) -> float:
        return self.integrate_r(np.asarray(a) * np.asarray(b))

    # -- differences in r -------------------------------------------------
    def d_dr(self, a) -> np.ndarray:
        """Periodic second-order central difference along the first axis."""
        a = np.asarray(a, dtype=float)
        if a.shape[0] != self.n_r or a.ndim not in (1, 2) or (a.ndim == 2 and a.shape[1] != self.n_v):
            raise ShapeError(f"cannot differentiate shape {a.shape} in r on grid {self.shape}")
        return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2.0 * self.dr)

    def diff_r_forward(self, a) -> np.ndarray:
        """``(a[i+1] - a[i]) / dr`` on the faces ``i + 1/2`` (periodic)."""
        a = np.asarray(a, dtype=float)
        return (np.roll(a, -1, axis=0) - a) / self.dr

    def div_r_faces(self, flux) -> np.ndarray:
        """Divergence of a flux given on faces ``i + 1/2`` (periodic)."""
        flux = np.asarray(flux, dtype=float)
        return (flux - np.roll(flux, 1, axis=0)) / self.dr

    # -- differences in v -------------------------------------------------
    def face_v(self, g) -> np.ndarray:
        """Arithmetic average onto the ``n_v - 1`` interior faces."""
        g = np.asarray(g, dtype=float)
        return 0.5 * (g[..., 1:] + g[..., :-1])

    def diff_v_faces(self, phi) -> np.ndarray:
        """``(phi[j+1] - phi[j]) / dv`` on the interior faces."""
        phi = np.asarray(phi, dtype=float)
        return (phi[..., 1:] - phi[..., :-1]) / self.dv

    def div_v_faces(self, flux) -> np.ndarray:
        """Divergence of an interior-face flux with zero flux through both ends."""
        flux = np.asarray(flux, dtype=float)
        pad = [(0, 0)] * (flux.ndim - 1) + [(1, 1)]
        full = np.pad(flux, pad)
        return (full[..., 1:] - full[..., :-1]) / self.dv

    def d_dv(self, g) -> np.ndarray:
        """Conservative derivative of a flux ``g`` in v (zero-flux ends)."""
        g = self.check_phase(g)
        return self.div_v_faces(self.face_v(g))

    def grad_v(self, phi) -> np.ndarray:
        """Derivative of a potential in v; exact for quadratics."""
        phi = np.asarray(phi, dtype=float)
        if phi.shape[-1] != self.n_v:
            raise ShapeError(f"cannot differentiate shape {phi.shape} in v on grid {self.shape}")
        h = self.dv
        out = np.empty_like(phi)
        out[..., 1:-1] = (phi[..., 2:] - phi[..., :-2]) / (2.0 * h)
        if self.n_v >= 3:
            out[..., 0] = (-3.0 * phi[..., 0] + 4.0 * phi[..., 1] - phi[..., 2]) / (2.0 * h)
            out[..., -1] = (3.0 * phi[..., -1] - 4.0 * phi[..., -2] + phi[..., -3]) / (2.0 * h)
        else:
            out[..., 0] = out[..., -1] = (phi[..., 1] - phi[..., 0]) / h
        return out

    def broadcast_v(self, a) -> np.ndarray:
        """Spatial field repeated along v."""
        return np.broadcast_to(self.check_spatial(a)[:, None], self.shape)


def log_mean(a, b) -> np.ndarray:
    """Logarithmic mean ``(a - b) / (ln a - ln b)`` for positive arrays.

    Falls back to a series expansion where ``a`` and ``b`` nearly coincide.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = a / b
        lm = (a - b) / np.log(x)
        # (x-1)/ln x ~ 1 + u/2 - u^2/12 with u = x - 1
        u = x - 1.0
        series = b * (1.0 + u / 2.0 - u * u / 12.0 + u ** 3 / 24.0)
    out = np.where(np.abs(u) < 1e-4, series, lm)
    return np.where((a == 0) | (b == 0), 0.0, out)


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScalarField:
    """Values on the spatial cells of ``grid``."""

    grid: PhaseGrid
    values: np.ndarray

    def __post_init__(self):
        vals = self.grid.check_spatial(self.values, "ScalarField values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("ScalarField values must be finite")
        object.__setattr__(self, "values", _readonly(vals))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


@dataclass(frozen=True)
class DistFn:
    """One-particle distribution ``f(r, v)`` sampled at cell centres."""

    grid: PhaseGrid
    values: np.ndarray
    require_nonnegative: bool = False

    def __post_init__(self):
        vals = self.grid.check_phase(self.values, "DistFn values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("DistFn values must be finite")
        if self.require_nonnegative and np.any(vals < 0):
            idx = np.unravel_index(np.argmin(vals), vals.shape)
            raise DomainError(f"negative distribution value {vals[idx]:.3e} at cell {idx}", idx)
        object.__setattr__(self, "values", _readonly(vals))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.values)


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """Poisson-Grad state ``(rho, u, s, f)``.

    Supports ``+``, ``-`` and scalar ``*`` so that the time integrators can
    treat it like an array.
    """

    grid: PhaseGrid
    rho: np.ndarray
    u: np.ndarray
    s: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        g = self.grid
        for name in ("rho", "u", "s"):
            object.__setattr__(self, name, g.check_spatial(getattr(self, name), name))
        object.__setattr__(self, "f", g.check_phase(self.f, "f"))

    def _combine(self, other, op):
        if isinstance(other, ExtendedState):
            if other.grid != self.grid:
                raise ShapeError("states live on different grids")
            return ExtendedState(self.grid, op(self.rho, other.rho), op(self.u, other.u),
                                 op(self.s, other.s), op(self.f, other.f))
        return ExtendedState(self.grid, op(self.rho, other), op(self.u, other),
                             op(self.s, other), op(self.f, other))

    def __add__(self, other):
        return self._combine(other, np.add)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __mul__(self, c):
        if isinstance(c, ExtendedState):
            return NotImplemented
        return self._combine(c, np.multiply)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self._combine(c, np.true_divide)

    def components(self):
        return self.rho, self.u, self.s, self.f

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(c)) for c in self.components())

    def copy(self) -> "ExtendedState":
        return ExtendedState(self.grid, *(np.array(c) for c in self.components()))

    def inner(self, other: "ExtendedState") -> float:
        """Pairing summed over the four components with grid weights."""
        g = self.grid
        return (g.inner_r(self.rho, other.rho) + g.inner_r(self.u, other.u)
                + g.inner_r(self.s, other.s) + g.inner(self.f, other.f))

    def hydro_fields(self):
        g = self.grid
        return ScalarField(g, self.rho), ScalarField(g, self.u), ScalarField(g, self.s)


def integrate_v(g, grid: PhaseGrid | None = None) -> ScalarField:
    """``int dv g`` as a :class:`ScalarField`."""
    if grid is None:
        if not isinstance(g, DistFn):
            raise TypeError("grid is required when g is a plain array")
        grid = g.grid
    return ScalarField(grid, grid.integrate_v(np.asarray(g)))


def moments(f, eta: Callable[[np.ndarray], np.ndarray], grid: PhaseGrid | None = None,
            f_min: float | None = None):
    """Hydrodynamic fields ``rho = int f``, ``u = int v f``, ``s = int eta(f)``.

    ``eta`` is applied cell-wise.  If it produces a non-finite value the
    offending cell is reported, unless ``f_min`` is given in which case
    ``f`` is floored at ``f_min`` before evaluating ``eta``.
    """
    if grid is None:
        grid = f.grid
    fa = grid.check_phase(np.asarray(f))
    rho = grid.integrate_v(fa)
    u = grid.integrate_v(fa * grid.v[None, :])
    arg = np.maximum(fa, f_min) if f_min is not None else fa
    with np.errstate(divide="ignore", invalid="ignore"):
        ev = np.asarray(eta(arg), dtype=float)
    bad = ~np.isfinite(ev)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DomainError(f"eta(f) is not finite at cell {idx} (f = {fa[idx]!r})", idx)
    s = grid.integrate_v(ev)
    return ScalarField(grid, rho), ScalarField(grid, u), ScalarField(grid, s)


def maxwellian(grid: PhaseGrid, rho=1.0, mean=0.0, theta=1.0, m=1.0) -> np.ndarray:
    """Local Maxwellian ``rho / sqrt(2 pi theta/m) exp(-m (v - mean)^2 / 2 theta)``.

    ``rho``, ``mean`` and ``theta`` may be scalars or spatial fields.
    """
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (grid.n_r,))[:, None]
    mean = np.broadcast_to(np.asarray(mean, dtype=float), (grid.n_r,))[:, None]
    theta = np.broadcast_to(np.asarray(theta, dtype=float), (grid.n_r,))[:, None]
    v = grid.v[None, :]
    return rho * np.sqrt(m / (2.0 * np.pi * theta)) * np.exp(-m * (v - mean) ** 2 / (2.0 * theta))


# -- CSV snapshots -----------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def write_distribution_csv(path, grid: PhaseGrid, f) -> None:
    """Write ``f`` as rows ``r, v, f`` (r-major order)."""
    fa = grid.check_phase(np.asarray(f))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "v", "f"])
        for i, ri in enumerate(grid.r):
            for j, vj in enumerate(grid.v):
                w.writerow([_fmt(ri), _fmt(vj), _fmt(fa[i, j])])


def _grid_from_centres(r, v) -> PhaseGrid:
    n_r, n_v = len(r), len(v)
    dr = 2.0 * r[0] if n_r == 1 else (r[-1] - r[0]) / (n_r - 1)
    dv = (v[-1] - v[0]) / (n_v - 1)
    return PhaseGrid(n_r, n_v, length_r=dr * n_r, v_max=dv * n_v / 2.0)


def read_distribution_csv(path):
    """Inverse of :func:`write_distribution_csv`; returns ``(grid, f)``."""
    data = np.genfromtxt(path, delimiter=",", names=True)
    if set(data.dtype.names) != {"r", "v", "f"}:
        raise ValueError(f"{path}: expected columns r, v, f; got {data.dtype.names}")
    r = np.unique(data["r"])
    v = np.unique(data["v"])
    grid = _grid_from_centres(r, v)
    return grid, data["f"].reshape(len(r), len(v))


def write_hydro_csv(path, grid: PhaseGrid, rho, u, s, **extra) -> None:
    cols = {"rho": rho, "u": u, "s": s, **extra}
    arrays = {k: grid.check_spatial(np.asarray(c), k) for k, c in cols.items()}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", *arrays])
        for i, ri in enumerate(grid.r):
            w.writerow([_fmt(ri), *(_fmt(a[i]) for a in arrays.values())])


def read_hydro_csv(path, n_v: int = 2, v_max: float = 1.0):
    """Read a hydro snapshot; returns ``(grid, columns)``.

    Hydro files carry no velocity information, so ``n_v`` and ``v_max`` of
    the returned grid are taken from the arguments.
    """
    data = np.genfromtxt(path, delimiter=",", names=True)
    r = np.atleast_1d(data["r"])
    n_r = len(r)
    dr = 2.0 * r[0] if n_r == 1 else (r[-1] - r[0]) / (n_r - 1)
    grid = PhaseGrid(n_r, n_v, length_r=dr * n_r, v_max=v_max)
    return grid, {k: np.atleast_1d(data[k]) for k in data.dtype.names if k != "r"}
