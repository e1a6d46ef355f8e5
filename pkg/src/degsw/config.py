"""Run configuration: TOML loading with field-precise validation, presets, initial data."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
import sys
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # stdlib parser arrived in 3.11
    import tomli as tomllib

import numpy as np
import tomli_w

from .grid import Grid2D, seam_max
from .model import ModelError, ModelSpec, RegularizationParams, State, Variant, convert, initial_state

PROFILE_KINDS = {
    "algebraic": ("sigma", "amplitude"),
    "gaussian": ("width", "amplitude"),
    "constant": ("level",),
    "compact": ("radius", "amplitude"),
}
U0_KINDS = {
    "zero": (),
    "single-mode": ("mode", "amplitude"),
    "compact-bump": ("center", "radius", "amplitude"),
}


class ConfigError(ValueError):
    pass


@dataclass
class Profile:
    """Initial density rho0 (height h0 for the shallow-water variants)."""

    kind: str = "algebraic"
    sigma: float = 2.0
    amplitude: float = 1.0
    width: float = 1.0
    level: float = 1.0
    radius: float = 1.0


@dataclass
class Velocity0:
    kind: str = "single-mode"
    mode: int = 1
    amplitude: float = 0.01
    center: list[float] = field(default_factory=lambda: [0.0, 0.0])
    radius: float = 1.0


@dataclass
class ScenarioParams:
    profile: Profile = field(default_factory=Profile)
    u0: Velocity0 = field(default_factory=Velocity0)
    n: int = 128
    box_length: float = 8 * math.pi
    model: ModelSpec = field(default_factory=ModelSpec)
    reg: RegularizationParams = field(default_factory=RegularizationParams)

    @property
    def grid(self) -> Grid2D:
        return Grid2D(self.n, self.box_length)


@dataclass
class RunConfig:
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    horizon: float = 0.5
    dt: float = 1e-3
    tol: float = 1e-8
    max_sweeps: int = 30
    width: int = 8
    scheme: str = "crank-nicolson"
    metric: str = "picard"
    out: str = "runs"
    ceiling: float = 1e3
    seed: int = 0
    retries: int = 4
    deltas: list[float] = field(default_factory=lambda: [1e-2, 5e-3, 2.5e-3])
    perturbation: float = 1e-3
    samples: int = 100
    lab_n: int = 64

    def validate(self) -> RunConfig:
        validate_scenario(self.scenario)
        if not self.dt > 0:
            raise ConfigError(f"run.dt: must be > 0, got {self.dt}")
        if not self.horizon >= self.dt:
            raise ConfigError(f"run.horizon: must be >= dt ({self.dt}), got {self.horizon}")
        if not self.tol > 0:
            raise ConfigError(f"run.tol: must be > 0, got {self.tol}")
        if self.max_sweeps < 1:
            raise ConfigError(f"run.max_sweeps: must be >= 1, got {self.max_sweeps}")
        if self.width < 2 or self.width % 2:
            raise ConfigError(f"run.width: interpolation stencil must be even and >= 2, got {self.width}")
        if self.scheme not in ("crank-nicolson", "implicit-euler"):
            raise ConfigError(f"run.scheme: expected crank-nicolson or implicit-euler, got {self.scheme!r}")
        if self.metric not in ("picard", "stability"):
            raise ConfigError(f"run.metric: expected picard or stability, got {self.metric!r}")
        if not self.ceiling > 0:
            raise ConfigError(f"monitors.ceiling: must be > 0, got {self.ceiling}")
        if self.retries < 0:
            raise ConfigError(f"run.retries: must be >= 0, got {self.retries}")
        if not self.deltas or any(d <= 0 for d in self.deltas):
            raise ConfigError("continuation.deltas: must be a nonempty list of positive numbers")
        if any(b > a for a, b in zip(self.deltas, self.deltas[1:])):
            raise ConfigError("continuation.deltas: must be non-increasing")
        if not self.perturbation > 0:
            raise ConfigError(f"stability.perturbation: must be > 0, got {self.perturbation}")
        if self.samples < 1:
            raise ConfigError(f"inequalities.samples: must be >= 1, got {self.samples}")
        return self


def validate_scenario(sc: ScenarioParams) -> None:
    p = sc.profile
    if p.kind not in PROFILE_KINDS:
        raise ConfigError(f"scenario.profile.kind: unknown {p.kind!r}; options {sorted(PROFILE_KINDS)}")
    if p.kind == "algebraic":
        bound = max(1.0, 1.0 / (sc.model.gamma - 1.0))
        if not p.sigma > bound:
            raise ConfigError(f"scenario.profile.sigma: need σ>max{{1, 1/(γ−1)}} = {bound:g} "
                              f"for γ={sc.model.gamma:g}, got σ={p.sigma:g}")
    for name in ("amplitude", "width", "radius"):
        if name in PROFILE_KINDS[p.kind] and not getattr(p, name) > 0:
            raise ConfigError(f"scenario.profile.{name}: must be > 0, got {getattr(p, name)}")
    if p.kind == "constant" and not p.level > 0:
        raise ConfigError(f"scenario.profile.level: must be > 0, got {p.level}")
    if p.kind == "compact" and sc.model.uses_psi and sc.reg.delta == 0:
        raise ConfigError("scenario.profile.kind: a compact profile touches vacuum; "
                          "use variant LaplacianOnly or a positive regularization.delta")
    v = sc.u0
    if v.kind not in U0_KINDS:
        raise ConfigError(f"scenario.u0.kind: unknown {v.kind!r}; options {sorted(U0_KINDS)}")
    if v.kind == "compact-bump":
        if len(v.center) != 2:
            raise ConfigError(f"scenario.u0.center: need two coordinates, got {v.center}")
        if not v.radius > 0:
            raise ConfigError(f"scenario.u0.radius: must be > 0, got {v.radius}")
    try:
        Grid2D(sc.n, sc.box_length)
    except ValueError as exc:
        raise ConfigError(f"scenario.n / scenario.box_length: {exc}") from exc


# initial data ---------------------------------------------------------------

def chord_radius_sq(grid: Grid2D) -> np.ndarray:
    """Smooth periodic stand-in for |x|^2 about the box centre."""
    X, Y = grid.centered_mesh()
    L = grid.box_length
    c = L / math.pi
    return c * c * (np.sin(math.pi * X / L) ** 2 + np.sin(math.pi * Y / L) ** 2)


def _bump(s: np.ndarray) -> np.ndarray:
    """exp(1 - 1/(1-s)) on s < 1, zero elsewhere; s is (r/R)^2."""
    out = np.zeros_like(s)
    inside = s < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return out


def density_profile(sc: ScenarioParams) -> np.ndarray:
    g = sc.grid
    p = sc.profile
    r2 = chord_radius_sq(g)
    if p.kind == "algebraic":
        return p.amplitude / (1.0 + r2**p.sigma)
    if p.kind == "gaussian":
        return p.amplitude * np.exp(-r2 / (2 * p.width**2))
    if p.kind == "constant":
        return np.full(g.shape, p.level)
    if p.kind == "compact":
        return p.amplitude * _bump(r2 / p.radius**2)
    raise ConfigError(f"scenario.profile.kind: unknown {p.kind!r}")


def velocity_profile(sc: ScenarioParams) -> np.ndarray:
    g = sc.grid
    v = sc.u0
    if v.kind == "zero":
        return np.zeros((2,) + g.shape)
    x1, x2 = g.mesh()
    L = g.box_length
    if v.kind == "single-mode":
        w = 2 * math.pi * v.mode / L
        return v.amplitude * np.stack([np.sin(w * x2), np.sin(w * x1)])
    # swirl inside a compactly supported bump
    d1 = (x1 - v.center[0] + L / 2) % L - L / 2
    d2 = (x2 - v.center[1] + L / 2) % L - L / 2
    b = _bump((d1**2 + d2**2) / v.radius**2)
    return v.amplitude * b * np.stack([-d2, d1]) / v.radius


def build_state(sc: ScenarioParams) -> State:
    validate_scenario(sc)
    phi0 = convert(density_profile(sc), "rho->phi", sc.model)
    return initial_state(sc.grid, phi0, velocity_profile(sc), sc.model, sc.reg)


def profile_seam(sc: ScenarioParams) -> float:
    """Largest density within three cells of the periodic seam (far-field diagnostic)."""
    return seam_max(sc.grid, density_profile(sc))


def perturbed_pair(sc: ScenarioParams, eps: float, mode: int = 1) -> tuple[State, State]:
    """Base state and one with phi0 -> phi0 (1 + eps cos(2 pi mode x1 / L))."""
    g = sc.grid
    phi0 = convert(density_profile(sc), "rho->phi", sc.model)
    u0 = velocity_profile(sc)
    x1, _ = g.mesh()
    phi1 = phi0 * (1.0 + eps * np.cos(2 * math.pi * mode * x1 / g.box_length))
    return (initial_state(g, phi0, u0, sc.model, sc.reg),
            initial_state(g, phi1, u0, sc.model, sc.reg))


# presets ----------------------------------------------------------------------

def _smooth_small() -> RunConfig:
    sc = ScenarioParams(Profile("algebraic", sigma=2.0, amplitude=1.0),
                        Velocity0("single-mode", mode=1, amplitude=0.01),
                        n=128, box_length=4 * math.pi)
    return RunConfig(sc, horizon=0.1, dt=1e-3)


def _near_vacuum() -> RunConfig:
    sc = ScenarioParams(Profile("algebraic", sigma=2.0, amplitude=1.0),
                        Velocity0("single-mode", mode=1, amplitude=0.01),
                        n=64, box_length=8 * math.pi)
    return RunConfig(sc, horizon=0.05, dt=1e-3, deltas=[1e-2, 5e-3, 2.5e-3])


def _vacuum_laplacian() -> RunConfig:
    model = ModelSpec.for_variant(Variant.LAPLACIAN_ONLY)
    sc = ScenarioParams(Profile("compact", radius=2.0, amplitude=1.0),
                        Velocity0("compact-bump", center=[0.0, 0.0], radius=1.5, amplitude=0.05),
                        n=64, box_length=2 * math.pi, model=model)
    return RunConfig(sc, horizon=0.05, dt=1e-3)


def _stability_pair() -> RunConfig:
    sc = ScenarioParams(Profile("algebraic", sigma=2.0, amplitude=1.0),
                        Velocity0("single-mode", mode=1, amplitude=0.01),
                        n=64, box_length=4 * math.pi)
    return RunConfig(sc, horizon=0.05, dt=1e-3, perturbation=1e-3)


PRESETS = {
    "smooth-small": _smooth_small,
    "near-vacuum": _near_vacuum,
    "vacuum-laplacian": _vacuum_laplacian,
    "stability-pair": _stability_pair,
}


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]().validate()


def preset_scenario(name: str) -> ScenarioParams:
    return preset_config(name).scenario


# (de)serialization ---------------------------------------------------------------

_RUN_KEYS = {
    "run": ("horizon", "dt", "tol", "max_sweeps", "width", "scheme", "metric", "out", "seed",
            "retries"),
    "monitors": ("ceiling",),
    "continuation": ("deltas",),
    "stability": ("perturbation",),
    "inequalities": ("samples", "lab_n"),
}


def to_dict(cfg: RunConfig) -> dict[str, Any]:
    sc = cfg.scenario
    out: dict[str, Any] = {
        "scenario": {
            "n": sc.n,
            "box_length": sc.box_length,
            "profile": dataclasses.asdict(sc.profile),
            "u0": dataclasses.asdict(sc.u0),
        },
        "model": {"gamma": sc.model.gamma, "A": sc.model.A, "alpha": sc.model.alpha,
                  "beta": sc.model.beta, "variant": sc.model.variant.value},
        "regularization": {"delta": sc.reg.delta},
    }
    if sc.reg.eps_vac is not None:
        out["regularization"]["eps_vac"] = sc.reg.eps_vac
    for table, keys in _RUN_KEYS.items():
        out[table] = {k: getattr(cfg, k) for k in keys}
    return out


def dumps(cfg: RunConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def _take(table: dict, cls, path: str):
    names = {f.name for f in dataclasses.fields(cls)}
    extra = sorted(set(table) - names)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}: unknown key (allowed: {', '.join(sorted(names))})")
    return table


def _numeric(path: str, value, kind):
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    if not isinstance(value, kind):
        raise ConfigError(f"{path}: expected {kind.__name__}, got {value!r}")
    return value


def _typed(cls, table: dict, path: str):
    """Build a dataclass from a TOML table with per-field type checks."""
    _take(table, cls, path)
    kw = {}
    hints = {f.name: f.type for f in dataclasses.fields(cls)}
    for key, value in table.items():
        hint = str(hints[key])
        p = f"{path}.{key}"
        if hint == "float":
            kw[key] = _numeric(p, value, float)
        elif hint == "int":
            kw[key] = _numeric(p, value, int)
        elif hint == "str":
            kw[key] = _numeric(p, value, str)
        elif hint.startswith("list"):
            if not isinstance(value, list):
                raise ConfigError(f"{p}: expected an array, got {value!r}")
            kw[key] = [_numeric(p, x, float) for x in value]
        else:
            kw[key] = value
    return kw


def from_dict(data: dict[str, Any]) -> RunConfig:
    known = {"preset", "scenario", "model", "regularization", *_RUN_KEYS}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"{extra[0]}: unknown table (allowed: {', '.join(sorted(known))})")
    base = preset_config(data["preset"]) if "preset" in data else RunConfig()
    sc_t = dict(data.get("scenario", {}))
    prof_t = sc_t.pop("profile", {})
    u0_t = sc_t.pop("u0", {})
    for key in sc_t:
        if key not in ("n", "box_length"):
            raise ConfigError(f"scenario.{key}: unknown key (allowed: box_length, n, profile, u0)")
    profile = dataclasses.replace(base.scenario.profile, **_typed(Profile, prof_t, "scenario.profile"))
    u0 = dataclasses.replace(base.scenario.u0, **_typed(Velocity0, u0_t, "scenario.u0"))
    n = _numeric("scenario.n", sc_t.get("n", base.scenario.n), int)
    box = _numeric("scenario.box_length", sc_t.get("box_length", base.scenario.box_length), float)

    m = data.get("model", {})
    bm = base.scenario.model
    allowed = {"gamma", "A", "alpha", "beta", "variant"}
    for key in m:
        if key not in allowed:
            raise ConfigError(f"model.{key}: unknown key (allowed: {', '.join(sorted(allowed))})")
    variant = m.get("variant", bm.variant.value)
    try:
        variant = Variant(variant)
    except ValueError:
        raise ConfigError(f"model.variant: unknown {variant!r}; options "
                          f"{', '.join(v.value for v in Variant)}") from None
    try:
        if "variant" in m and variant is not Variant.FULL_Q:
            kw = {k: _numeric(f"model.{k}", m[k], float) for k in ("gamma", "alpha", "beta") if k in m}
            model = ModelSpec.for_variant(variant, A=_numeric("model.A", m.get("A", bm.A), float))
            model = model.with_(**kw) if kw else model
        else:
            model = ModelSpec(
                gamma=_numeric("model.gamma", m.get("gamma", bm.gamma), float),
                A=_numeric("model.A", m.get("A", bm.A), float),
                alpha=_numeric("model.alpha", m.get("alpha", bm.alpha), float),
                beta=_numeric("model.beta", m.get("beta", bm.beta), float),
                variant=variant)
    except ModelError as exc:
        msg = str(exc)
        if msg.startswith("alpha/beta"):
            msg = msg.replace("alpha/beta: need alpha>0, alpha+beta>=0", "α>0, α+β≥0 violated")
            raise ConfigError(f"model.alpha / model.beta: {msg}") from None
        raise ConfigError(f"model.{msg}") from None

    r = data.get("regularization", {})
    for key in r:
        if key not in ("delta", "eps_vac"):
            raise ConfigError(f"regularization.{key}: unknown key (allowed: delta, eps_vac)")
    try:
        reg = RegularizationParams(
            _numeric("regularization.delta", r.get("delta", base.scenario.reg.delta), float),
            (_numeric("regularization.eps_vac", r["eps_vac"], float) if "eps_vac" in r
             else base.scenario.reg.eps_vac))
    except ModelError as exc:
        raise ConfigError(f"regularization.{exc}") from None

    sc = ScenarioParams(profile, u0, n, box, model, reg)
    kw = {}
    hints = {f.name: str(f.type) for f in dataclasses.fields(RunConfig)}
    for table, keys in _RUN_KEYS.items():
        t = data.get(table, {})
        for key, value in t.items():
            if key not in keys:
                raise ConfigError(f"{table}.{key}: unknown key (allowed: {', '.join(keys)})")
            p = f"{table}.{key}"
            h = hints[key]
            if h == "float":
                kw[key] = _numeric(p, value, float)
            elif h == "int":
                kw[key] = _numeric(p, value, int)
            elif h == "str":
                kw[key] = _numeric(p, value, str)
            else:
                if not isinstance(value, list):
                    raise ConfigError(f"{p}: expected an array, got {value!r}")
                kw[key] = [_numeric(p, x, float) for x in value]
    cfg = dataclasses.replace(base, scenario=sc, **kw)
    return cfg.validate()


def loads(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"parse error: {exc}") from None
    return from_dict(data)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    try:
        return loads(path.read_text())
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps(cfg))
