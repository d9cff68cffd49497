"""Scenario configuration: JSON in, validated dataclasses out, JSON back."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError
from .functionals import REGISTRY

__all__ = [
    "RUN_SCENARIOS",
    "REDUCE_SCENARIOS",
    "COUPLING_MODES",
    "GridConfig",
    "PhysicsConfig",
    "IntegratorConfig",
    "ScenarioConfig",
    "default_config",
    "load_config",
]

RUN_SCENARIOS = ("free-transport", "fp-relaxation", "generic-kinetic", "diffusion-closure",
                 "pg-hierarchy", "pg-regularized", "ce-viscosity", "reduced-hydro")
REDUCE_SCENARIOS = ("maxent", "flux-closure")
COUPLING_MODES = ("full", "diagonal", "decoupled")


@dataclass
class GridConfig:
    n_r: int = 64
    n_v: int = 64
    length_r: float = 1.0
    v_max: float = 8.0


@dataclass
class PhysicsConfig:
    entropy: str = "boltzmann"
    energy: str = "kinetic"
    eta: str = "boltzmann"
    casimirs: list = field(default_factory=lambda: ["square", "neg_flogf"])
    Lambda: float = 1.0
    epsilon: float = 1.0
    E_star: float = 1.0
    N_star: float = 0.5 * math.log(2.0 * math.pi) - 1.0
    m: float = 1.0
    k_B: float = 1.0
    h: float = 1.0
    hydro_prefactor: float = 0.5
    kinetic_prefactor: float = 0.5
    kappa: float = 0.1
    f_min: float | None = None


@dataclass
class IntegratorConfig:
    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    stride: int = 1
    override_stability: bool = False
    snapshot_times: list = field(default_factory=list)


@dataclass
class ScenarioConfig:
    """Everything a scenario needs.

    ``initial`` holds scenario-specific initial-condition parameters and
    ``multipliers`` the ``E_star``/``N_star`` lists of a reduction grid.
    """

    scenario: str
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    coupling: str = "diagonal"
    initial: dict = field(default_factory=dict)
    multipliers: dict = field(default_factory=dict)
    output_dir: str = "out"
    seed: int = 0

    # -- construction ------------------------------------------------------
    @classmethod
    def from_dict(cls, data: dict, command: str = "run") -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        if "scenario" not in data:
            raise ConfigError("missing required field 'scenario'")
        kw = dict(data)
        kw["grid"] = _sub(GridConfig, data.get("grid", {}), "grid")
        kw["physics"] = _sub(PhysicsConfig, data.get("physics", {}), "physics")
        integ = data.get("integrator", {})
        if command == "run" and data["scenario"] in _TIME_DEPENDENT:
            for name in ("dt", "t_end"):
                if not isinstance(integ, dict) or name not in integ:
                    raise ConfigError(f"missing required field 'integrator.{name}'")
        kw["integrator"] = _sub(IntegratorConfig, integ, "integrator")
        cfg = cls(**kw)
        cfg.validate(command)
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    # -- validation --------------------------------------------------------
    def validate(self, command: str = "run") -> None:
        allowed = RUN_SCENARIOS if command == "run" else REDUCE_SCENARIOS
        if self.scenario not in allowed:
            raise ConfigError(f"unknown scenario {self.scenario!r} for '{command}'; "
                              f"choose from {', '.join(allowed)}")
        g = self.grid
        for name in ("n_r", "n_v"):
            val = getattr(g, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < 1:
                raise ConfigError(f"grid.{name} must be a positive integer, got {val!r}")
        if g.n_v < 2:
            raise ConfigError("grid.n_v must be at least 2")
        for name in ("length_r", "v_max"):
            _positive(getattr(g, name), f"grid.{name}")
        p = self.physics
        if p.entropy not in REGISTRY["entropy"]:
            raise ConfigError(f"physics.entropy {p.entropy!r} is not registered")
        if p.energy not in REGISTRY["energy"]:
            raise ConfigError(f"physics.energy {p.energy!r} is not registered")
        for name in [p.eta] + list(p.casimirs):
            if name not in REGISTRY["eta"]:
                raise ConfigError(f"eta {name!r} is not registered")
        for name in ("Lambda", "m", "k_B", "h"):
            _positive(getattr(p, name), f"physics.{name}")
        if not (isinstance(p.epsilon, (int, float)) and 0 < p.epsilon <= 1):
            raise ConfigError(f"physics.epsilon must lie in (0, 1], got {p.epsilon!r}")
        for name in ("E_star", "N_star", "hydro_prefactor", "kinetic_prefactor", "kappa"):
            _finite(getattr(p, name), f"physics.{name}")
        if p.f_min is not None:
            _positive(p.f_min, "physics.f_min")
        it = self.integrator
        if it.scheme not in ("rk4", "euler"):
            raise ConfigError(f"integrator.scheme must be 'rk4' or 'euler', got {it.scheme!r}")
        if command == "run" and self.scenario in _TIME_DEPENDENT:
            _positive(it.dt, "integrator.dt")
            _positive(it.t_end, "integrator.t_end")
        if not isinstance(it.stride, int) or it.stride < 1:
            raise ConfigError(f"integrator.stride must be a positive integer, got {it.stride!r}")
        if (not isinstance(it.snapshot_times, list)
                or not all(isinstance(t, (int, float)) and 0 <= t for t in it.snapshot_times)):
            raise ConfigError("integrator.snapshot_times must be a list of nonnegative times")
        if self.coupling not in COUPLING_MODES:
            raise ConfigError(f"coupling must be one of {', '.join(COUPLING_MODES)}, got {self.coupling!r}")
        if not isinstance(self.initial, dict):
            raise ConfigError("initial must be an object")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if self.multipliers:
            for key in ("E_star", "N_star"):
                vals = self.multipliers.get(key)
                if (not isinstance(vals, list) or not vals
                        or not all(isinstance(v, (int, float)) and math.isfinite(v) for v in vals)):
                    raise ConfigError(f"multipliers.{key} must be a nonempty list of numbers")
                if any(b <= a for a, b in zip(vals, vals[1:])):
                    raise ConfigError(f"multipliers.{key} must be strictly increasing")
            if any(v <= 0 for v in self.multipliers["E_star"]):
                raise ConfigError("multipliers.E_star must be positive (normalizable Maxwellian)")


_TIME_DEPENDENT = ("free-transport", "fp-relaxation", "generic-kinetic", "diffusion-closure",
                   "pg-hierarchy", "pg-regularized")


def _positive(val, name):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val) or val <= 0:
        raise ConfigError(f"{name} must be a positive number, got {val!r}")


def _finite(val, name):
    if isinstance(val, bool) or not isinstance(val, (int, float)) or not math.isfinite(val):
        raise ConfigError(f"{name} must be a finite number, got {val!r}")


def _sub(cls, data, label):
    if not isinstance(data, dict):
        raise ConfigError(f"{label} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown field(s) in {label}: {', '.join(unknown)}")
    return cls(**data)


def default_config(scenario: str) -> ScenarioConfig:
    """Reference configuration of each scenario."""
    G, P, I = GridConfig, PhysicsConfig, IntegratorConfig
    table = {
        "free-transport": dict(grid=G(128, 128, 8.0, 4.0), integrator=I(dt=1e-3, t_end=1.0, stride=10),
                               initial={"amplitude": 0.05, "drift": 0.5}),
        "fp-relaxation": dict(grid=G(1, 256, 1.0, 8.0), integrator=I(dt=2e-3, t_end=14.0, stride=10),
                              initial={"theta0": 1.3, "drift": 0.3}),
        "generic-kinetic": dict(grid=G(32, 96, 2 * math.pi, 8.0),
                                integrator=I(dt=2e-3, t_end=2.0, stride=10),
                                initial={"amplitude": 0.2, "theta0": 1.3}),
        "diffusion-closure": dict(grid=G(256, 2, 1.0, 1.0), integrator=I(dt=1e-5, t_end=0.1, stride=100),
                                  initial={"amplitude": 1.0, "width": 0.05, "centre": 0.5}),
        "pg-hierarchy": dict(grid=G(32, 48, 1.0, 6.0), physics=P(energy="sackur_tetrode"),
                             integrator=I(dt=1e-3, t_end=0.05, stride=5), initial={"amplitude": 0.01}),
        "pg-regularized": dict(grid=G(32, 48, 1.0, 6.0), physics=P(energy="sackur_tetrode", Lambda=0.5),
                               integrator=I(dt=1e-3, t_end=0.05, stride=5), initial={"amplitude": 0.01}),
        "ce-viscosity": dict(grid=G(4, 256, 1.0, 8.0), initial={"u_star_gradient": 1e-5}),
        "reduced-hydro": dict(grid=G(32, 64, 1.0, 6.0), physics=P(energy="sackur_tetrode", Lambda=0.1),
                              initial={"amplitude": 0.1}),
        "maxent": dict(grid=G(2, 256, 1.0, 8.0),
                       multipliers={"E_star": [0.75, 1.0, 1.25, 1.5], "N_star": [-0.5, 0.0, 0.5]}),
        "flux-closure": dict(grid=G(64, 128, 1.0, 8.0), initial={"amplitude": 0.3}),
    }
    if scenario not in table:
        raise ConfigError(f"no default configuration for scenario {scenario!r}")
    return ScenarioConfig(scenario, **table[scenario])


def load_config(path, command: str = "run") -> ScenarioConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return ScenarioConfig.from_dict(data, command)
