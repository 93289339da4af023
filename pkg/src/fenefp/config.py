"""Run configuration: TOML/JSON parsing, validation, key=value overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .geometry import (ConditionBError, ModelParams, kappa_corotational,
                       kappa_shear, kappa_zero)
from .scenarios import G_LIBRARY, Resolution, default_gamma, nonunique_resolution

SCENARIOS = ("equilibrium", "relax", "shear", "corotational",
             "nonunique", "sweep", "check")
F0_CHOICES = ("equilibrium", "perturbed", "bump")
OUTPUT_ROOT_ENV = "FENEFP_OUTPUT_ROOT"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str
    n: int = 2
    b: float = 4.0
    horizon: float = 1.0
    kappa_type: str = "zero"            # zero | shear | corotational
    kappa_rate: float = 1.0
    f0: str = "equilibrium"             # equilibrium | perturbed | bump
    f0_eps: float = 0.3
    gamma: float | None = None          # nonunique only; window midpoint if None
    g1: str = "t_r2"                    # nonunique forcing pair
    g2: str = "2*t_r2"
    b_list: list = field(default_factory=lambda: [2.0, 2.5, 3.0, 4.0, 6.0])
    resolution: Resolution | None = None
    outdir: str = "out"
    plots: bool = True

    def model_params(self) -> ModelParams:
        if self.kappa_type == "zero":
            kap = kappa_zero()
        elif self.kappa_type == "shear":
            kap = kappa_shear(self.kappa_rate)
        elif self.kappa_type == "corotational":
            kap = kappa_corotational(self.kappa_rate)
        else:
            raise ConfigError(f"unknown kappa type '{self.kappa_type}'")
        try:
            return ModelParams(n=self.n, b=self.b, kappa=kap, horizon=self.horizon)
        except (ConditionBError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def effective_resolution(self) -> Resolution:
        if self.resolution is not None:
            return self.resolution
        if self.scenario == "nonunique":
            return nonunique_resolution()
        return Resolution()

    def effective_gamma(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return default_gamma(self.model_params())

    def output_dir(self) -> Path:
        root = os.environ.get(OUTPUT_ROOT_ENV)
        out = Path(self.outdir)
        if root and not out.is_absolute():
            out = Path(root) / out
        return out

    def to_dict(self) -> dict:
        res = self.effective_resolution()
        return {
            "scenario": self.scenario,
            "model": {"n": self.n, "b": self.b, "horizon": self.horizon,
                      "kappa": {"type": self.kappa_type, "rate": self.kappa_rate}},
            "f0": {"kind": self.f0, "eps": self.f0_eps},
            "nonunique": {"gamma": self.gamma, "g1": self.g1, "g2": self.g2},
            "sweep": {"b_list": list(self.b_list)},
            "resolution": {"K_r": res.K_r, "K_theta": res.K_theta,
                           "n_radial": res.n_radial, "n_angular": res.n_angular,
                           "n_timesteps": res.n_timesteps},
            "outputs": {"dir": self.outdir, "plots": self.plots},
        }


def _coerce(text: str):
    """Parse an override value with TOML literal rules, falling back to str."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply dotted key=value overrides onto the nested config dict."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        key, _, raw = item.partition("=")
        parts = key.strip().split(".")
        node = data
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override '{key}' descends through a non-table")
        node[parts[-1]] = _coerce(raw.strip())
    return data


def load_config_dict(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table/object")
    return data


def _get(d: dict, key: str, typ, default, where: str):
    if key not in d:
        return default
    v = d[key]
    if typ is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if typ is not None and not isinstance(v, typ):
        raise ConfigError(f"{where}.{key} must be {typ.__name__}, got {v!r}")
    return v


def parse_config(data: dict) -> RunConfig:
    scenario = data.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"scenario must be one of {', '.join(SCENARIOS)}; got {scenario!r}")

    model = data.get("model", {})
    if not isinstance(model, dict):
        raise ConfigError("model must be a table")
    kappa = model.get("kappa", {})
    if not isinstance(kappa, dict):
        raise ConfigError("model.kappa must be a table")

    f0 = data.get("f0", {})
    if isinstance(f0, str):
        f0 = {"kind": f0}
    nonu = data.get("nonunique", {})
    sweep = data.get("sweep", {})
    outputs = data.get("outputs", {})

    cfg = RunConfig(
        scenario=scenario,
        n=_get(model, "n", int, 2, "model"),
        b=_get(model, "b", float, 4.0, "model"),
        horizon=_get(model, "horizon", float, 1.0, "model"),
        kappa_type=_get(kappa, "type", str, _default_kappa(scenario), "model.kappa"),
        kappa_rate=_get(kappa, "rate", float, 1.0, "model.kappa"),
        f0=_get(f0, "kind", str, _default_f0(scenario), "f0"),
        f0_eps=_get(f0, "eps", float, 0.3, "f0"),
        gamma=_get(nonu, "gamma", float, None, "nonunique"),
        g1=_get(nonu, "g1", str, "t_r2", "nonunique"),
        g2=_get(nonu, "g2", str, "2*t_r2", "nonunique"),
        b_list=_get(sweep, "b_list", list, [2.0, 2.5, 3.0, 4.0, 6.0], "sweep"),
        outdir=_get(outputs, "dir", str, "out", "outputs"),
        plots=_get(outputs, "plots", bool, True, "outputs"),
    )

    res = data.get("resolution")
    if res is not None:
        if not isinstance(res, dict):
            raise ConfigError("resolution must be a table")
        base = cfg.effective_resolution()
        cfg.resolution = Resolution(
            K_r=_get(res, "K_r", int, base.K_r, "resolution"),
            K_theta=_get(res, "K_theta", int, base.K_theta, "resolution"),
            n_radial=_get(res, "n_radial", int, base.n_radial, "resolution"),
            n_angular=_get(res, "n_angular", int, base.n_angular, "resolution"),
            n_timesteps=_get(res, "n_timesteps", int, base.n_timesteps, "resolution"),
        )
    _validate(cfg)
    return cfg


def _default_kappa(scenario: str) -> str:
    return {"shear": "shear", "corotational": "corotational"}.get(scenario, "zero")


def _default_f0(scenario: str) -> str:
    return {"relax": "perturbed", "shear": "bump", "corotational": "bump"}.get(
        scenario, "equilibrium")


def _validate(cfg: RunConfig) -> None:
    res = cfg.effective_resolution()
    for name in ("K_r", "K_theta", "n_radial", "n_angular", "n_timesteps"):
        v = getattr(res, name)
        if not isinstance(v, int) or v < (0 if name == "K_theta" else 1):
            raise ConfigError(f"resolution.{name} = {v!r} is out of range")
    if cfg.scenario != "sweep" and cfg.b <= 2.0:
        raise ConfigError(f"model.b = {cfg.b} violates the requirement b > 2")
    if cfg.scenario == "sweep":
        if not cfg.b_list or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool)
                for x in cfg.b_list):
            raise ConfigError("sweep.b_list must be a non-empty list of numbers")
    if cfg.f0 not in F0_CHOICES:
        raise ConfigError(f"f0.kind must be one of {', '.join(F0_CHOICES)}")
    if cfg.horizon <= 0:
        raise ConfigError("model.horizon must be positive")
    if cfg.scenario == "nonunique":
        p = cfg.model_params()
        lo = max(p.beta, -1.0)
        gamma = cfg.gamma if cfg.gamma is not None else default_gamma(p)
        if not (lo < gamma < 1.0):
            raise ConfigError(
                f"nonunique.gamma = {gamma} outside the window ({lo}, 1)")
        for spec in (cfg.g1, cfg.g2):
            name = spec.split("*", 1)[-1].strip()
            if name not in G_LIBRARY:
                raise ConfigError(
                    f"unknown boundary forcing '{spec}'; library: "
                    f"{', '.join(sorted(G_LIBRARY))}")
    cfg.model_params()  # surfaces b/kappa problems as ConfigError


def load_config(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    data = load_config_dict(path)
    if overrides:
        data = apply_overrides(data, overrides)
    return parse_config(data)
