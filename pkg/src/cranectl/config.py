"""Scenario configuration: dataclasses, YAML presets and validation.

A configuration file is YAML with the keys of ``presets/slow.yaml``.
Loading starts from a preset (``slow`` unless the file names another
one under ``preset:``) and overlays the file, so a file only needs the
keys it changes.
"""
from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import yaml

from .errors import ConfigError, InvalidParameter
from .mpc import MpcConfig
from .observer import block_gain
from .sfb import SfbConfig, block_feedback
from .swing import SwingControlConfig, SwingObserverConfig
from .traj import LspbSpec, MinTimeSpec, TransitionPlan, validate_spec

PRESETS = ("slow", "fast")
CONTROLLERS = ("sfb", "mpc")
FEEDFORWARD = ("none", "computed-torque", "dob")
SCENARIOS = {
    "I": ("none", False),
    "II": ("computed-torque", False),
    "III": ("computed-torque", True),
}


@dataclass(frozen=True)
class TrajectoryConfig:
    x: LspbSpec
    y: LspbSpec
    hoist: MinTimeSpec | None
    v_max: float = 0.3
    a_max: float = 0.2

    def plan(self, mode: str = "3D") -> TransitionPlan:
        y = self.y
        if mode == "2D":
            y = LspbSpec(y.q_0, y.q_0, 0.0, 0.0, y.t_b, y.t_f)
        return TransitionPlan(self.x, y, self.hoist, self.v_max, self.a_max)

    def diagnostics(self, T_s: float) -> list[str]:
        out = []
        for name, spec in (("x", self.x), ("y", self.y), ("hoist", self.hoist)):
            if spec is not None:
                out += [f"{name}: {m}" for m in validate_spec(spec, self.v_max, self.a_max, T_s)]
        return out


@dataclass(frozen=True)
class PlantConfig:
    inertia_scale: float = 1.0
    damping_scale: float = 1.0
    friction_scale: float = 1.0
    encoder_counts: int = 0
    position_noise: float = 0.0
    angle_noise: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a closed-loop run depends on.

    ``feedforward`` and ``swing_control`` are resolved from ``scenario``
    unless given explicitly; an explicit value must agree with the
    scenario (Scenario I has neither, II only feedforward, III both; in
    II and III the feedforward source is computed-torque or dob).
    """

    controller: str = "sfb"
    scenario: str = "III"
    feedforward: str = "computed-torque"
    swing_control: bool = True
    mode: str = "3D"
    load_mass: float = 0.8
    repetitions: int = 2
    rest: float = 1.0
    T_s: float = 0.01
    substeps: int = 10
    seed: int = 0
    trajectory: TrajectoryConfig = None  # type: ignore[assignment]
    swing: SwingControlConfig = field(default_factory=SwingControlConfig)
    swing_observer: SwingObserverConfig = field(default_factory=SwingObserverConfig)
    sfb: SfbConfig = field(default_factory=SfbConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    plant: PlantConfig = field(default_factory=PlantConfig)
    preset: str = "slow"

    def __post_init__(self) -> None:
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {tuple(SCENARIOS)}")
        if self.feedforward not in FEEDFORWARD:
            raise ConfigError(f"feedforward must be one of {FEEDFORWARD}")
        ff, sw = SCENARIOS[self.scenario]
        if (self.feedforward == "none") != (ff == "none") or self.swing_control != sw:
            raise ConfigError(f"feedforward={self.feedforward!r}, swing_control="
                              f"{self.swing_control} contradict scenario {self.scenario}")
        if self.mode not in ("2D", "3D"):
            raise ConfigError("mode must be 2D or 3D")
        if not self.load_mass >= 0:
            raise ConfigError("load_mass must be >= 0")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not self.rest > 0:
            raise ConfigError("rest must be > 0")
        if not self.T_s > 0 or self.substeps < 1:
            raise ConfigError("need T_s > 0 and substeps >= 1")
        if self.trajectory is None:
            raise ConfigError("trajectory missing")
        if abs(self.swing_observer.T_s - self.T_s) > 1e-15:
            raise ConfigError("swing observer T_s differs from T_s")
        n = self.rest / self.T_s
        if abs(n - round(n)) > 1e-9:
            raise ConfigError("rest must be a multiple of T_s")

    @property
    def label(self) -> str:
        return (f"{self.preset}-{self.controller}-{self.scenario}-{self.feedforward}"
                f"-m{self.load_mass:g}-{self.mode}")

    def with_(self, **kw: Any) -> "ScenarioConfig":
        """Copy with fields replaced; a new ``scenario`` re-derives the
        feedforward and swing defaults unless those are given too."""
        data = {f: getattr(self, f) for f in self.__dataclass_fields__}
        if "scenario" in kw:
            ff, sw = SCENARIOS[kw["scenario"]]
            if "feedforward" not in kw:
                cur = self.feedforward
                kw["feedforward"] = ff if (ff == "none" or cur == "none") else cur
            kw.setdefault("swing_control", sw)
        data.update(kw)
        return ScenarioConfig(**data)

    def to_dict(self) -> dict:
        """Plain nested dict in the file schema (round-trips through load)."""
        t = self.trajectory
        sfb, mpc, sw, so = self.sfb, self.mpc, self.swing, self.swing_observer
        return {
            "preset": self.preset,
            "controller": self.controller,
            "scenario": self.scenario,
            "feedforward": self.feedforward,
            "swing_control": "on" if self.swing_control else "off",
            "mode": self.mode,
            "load_mass": self.load_mass,
            "repetitions": self.repetitions,
            "rest": self.rest,
            "T_s": self.T_s,
            "substeps": self.substeps,
            "seed": self.seed,
            "trajectory": {
                "x": _spec_dict(t.x), "y": _spec_dict(t.y),
                "hoist": None if t.hoist is None else _spec_dict(t.hoist),
                "v_max": t.v_max, "a_max": t.a_max,
            },
            "swing": {"k_theta": list(sw.k_theta), "v_l_max": sw.v_l_max,
                      "observer_L": list(so.L_x)},
            "sfb": {
                "K": [[float(sfb.K[i, 2 * i]), float(sfb.K[i, 2 * i + 1])] for i in range(3)],
                "L": [[float(sfb.L[2 * i, i]), float(sfb.L[2 * i + 1, i])] for i in range(3)],
                "L_w": [float(v) for v in np.diag(sfb.L_w)],
            },
            "mpc": {k: (list(v) if isinstance(v, tuple) else v)
                    for k, v in asdict(mpc).items() if k not in ("tol", "max_iter")},
            "plant": asdict(self.plant),
        }


def _spec_dict(spec: LspbSpec | MinTimeSpec) -> dict:
    if isinstance(spec, LspbSpec):
        return {"q_0": spec.q_0, "q_f": spec.q_f, "a": spec.a, "v_m": spec.v_m,
                "t_b": spec.t_b, "t_f": spec.t_f}
    return {"q_0": spec.q_0, "q_f": spec.q_f, "a": spec.a, "t_f": spec.t_f}


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def preset_dict(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files("cranectl").joinpath("presets").joinpath(f"{name}.yaml").read_text()
    data = yaml.safe_load(text)
    data["preset"] = name
    return data


def _onoff(v: Any) -> bool | None:
    if v is None:
        return None
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {v!r}")


_TOP = {"preset", "controller", "scenario", "feedforward", "swing_control", "mode",
        "load_mass", "repetitions", "rest", "T_s", "substeps", "seed", "trajectory",
        "swing", "sfb", "mpc", "plant"}


def from_dict(data: Mapping) -> ScenarioConfig:
    """Build a config from a (possibly partial) dict over its preset."""
    unknown = set(data) - _TOP
    if unknown:
        raise ConfigError(f"unknown keys: {sorted(unknown)}")
    d = _merge(preset_dict(data.get("preset") or "slow"), data)
    try:
        scenario = str(d["scenario"])
        if scenario not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {tuple(SCENARIOS)}")
        ff_default, sw_default = SCENARIOS[scenario]
        ff = d.get("feedforward") or ff_default
        sw = _onoff(d.get("swing_control"))
        sw = sw_default if sw is None else sw
        T_s = float(d["T_s"])
        tr = d["trajectory"]
        hoist = tr.get("hoist")
        traj = TrajectoryConfig(
            LspbSpec(**{k: float(v) for k, v in tr["x"].items()}),
            LspbSpec(**{k: float(v) for k, v in tr["y"].items()}),
            None if hoist is None else MinTimeSpec(**{k: float(v) for k, v in hoist.items()}),
            float(tr.get("v_max", 0.3)), float(tr.get("a_max", 0.2)))
        s = d["swing"]
        L_obs = tuple(float(v) for v in s.get("observer_L", (1.0, 25.0)))
        swing = SwingControlConfig(tuple(float(v) for v in s["k_theta"]),
                                   float(s["v_l_max"]), enabled=sw)
        sobs = SwingObserverConfig(L_obs, L_obs, T_s)
        f = d["sfb"]
        sfb = SfbConfig(block_feedback(f["K"]), block_gain(f["L"]), np.diag(f["L_w"]))
        mp = dict(d["mpc"])
        for k in ("Q", "R", "u_min", "u_max", "y_min", "y_max"):
            if k in mp:
                mp[k] = tuple(float(v) for v in mp[k])
        mpc = MpcConfig(**mp)
        plant = PlantConfig(**d.get("plant", {}))
        return ScenarioConfig(
            controller=str(d["controller"]), scenario=scenario, feedforward=str(ff),
            swing_control=sw, mode=str(d["mode"]), load_mass=float(d["load_mass"]),
            repetitions=int(d["repetitions"]), rest=float(d["rest"]), T_s=T_s,
            substeps=int(d["substeps"]), seed=int(d["seed"]), trajectory=traj,
            swing=swing, swing_observer=sobs, sfb=sfb, mpc=mpc, plant=plant,
            preset=str(d.get("preset", "slow")))
    except ConfigError:
        raise
    except (InvalidParameter, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_config(path: str | Path | None = None, preset: str | None = None,
                overrides: Mapping | None = None) -> ScenarioConfig:
    """Config from a YAML file and/or preset, with optional overrides."""
    data: dict = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError:
            raise
        try:
            loaded = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        data = loaded
    if preset is not None:
        data = {**data, "preset": preset}
    if overrides:
        data = _merge(data, overrides)
    return from_dict(data)


def preset(name: str, **overrides: Any) -> ScenarioConfig:
    return load_config(preset=name, overrides=overrides)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
