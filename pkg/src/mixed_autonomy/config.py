"""Scenario, training and experiment configuration, with a JSON file format.

An experiment file is a single JSON object::

    {
      "profile": "desk",
      "network": {"topology": "two_way", "rows": 2, "cols": 1},
      "inflows": "standard",            # or [[f_h, f_v], ...]
      "penetration": 0.333,
      "control": {"kind": "none"},      # signal | max_pressure | priority
      "idm": {"noise_sigma": 0.2},
      "train": {"batch_size": 32},
      "seed": 0,
      "eval_seeds": 10
    }

Keys left out take the defaults of the dataclasses below; ``profile``
selects the defaults of ``horizon`` and the training scale.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .dynamics import AvLimits, IdmParams
from .network import NetworkSpec
from .signals import (
    Control,
    MaxPressureControl,
    NoControl,
    PriorityControl,
    SignalControl,
    SignalPlan,
)

# (f_h, f_v) pairs in veh/hr/lane.
INFLOW_PAIRS: tuple[tuple[int, int], ...] = (
    (1000, 400), (1000, 550), (1000, 700), (1000, 850),
    (850, 400), (850, 550), (850, 700), (850, 850), (850, 1000),
    (700, 700), (700, 850), (700, 1000),
    (550, 850), (550, 1000),
    (400, 850), (400, 1000),
)
INFLOW_LEVELS = (400, 550, 700, 850, 1000)

PROFILES = {
    "desk": {"horizon": 500, "batch_size": 32, "max_updates": 60},
    "full": {"horizon": 2000, "batch_size": 640, "max_updates": 200},
}


class ConfigError(ValueError):
    """Malformed configuration; the message names the offending key."""


@dataclass(frozen=True)
class ScenarioConfig:
    network: NetworkSpec = NetworkSpec()
    f_h: float = 700.0
    f_v: float = 700.0
    penetration: float = 1 / 3
    delta_t: float = 0.5
    warmup_steps: int = 100
    horizon: int = 500
    seed: int = 0
    idm: IdmParams = IdmParams()
    av_limits: AvLimits = AvLimits()
    control: Control = NoControl()
    t_gap: float = 3.0

    def __post_init__(self):
        if self.f_h < 0 or self.f_v < 0:
            raise ValueError("inflow rates must be non-negative")
        if not 0.0 <= self.penetration <= 1.0:
            raise ValueError("penetration must lie in [0, 1]")
        if not self.delta_t > 0:
            raise ValueError("delta_t must be positive")
        if self.warmup_steps < 0 or self.horizon < 0:
            raise ValueError("warmup_steps and horizon must be non-negative")
        if self.idm.v0 != self.network.speed_limit_mps:
            # desired speed always tracks the speed limit
            object.__setattr__(self, "idm", dataclasses.replace(self.idm, v0=self.network.speed_limit_mps))

    def replace(self, **changes) -> ScenarioConfig:
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    lr: float = 0.001
    lambda_o: float = 1.0
    lambda_c: float = 5.0
    batch_size: int = 32
    max_updates: int = 60
    checkpoint_interval: int = 5
    rms_decay: float = 0.99
    rms_eps: float = 1e-8
    norm_eps: float = 1e-4
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_updates < 0:
            raise ValueError("max_updates must be >= 0")
        if self.checkpoint_interval < 1:
            raise ValueError("checkpoint_interval must be >= 1")


@dataclass(frozen=True)
class ExperimentSpec:
    """One file's worth of settings: a scenario family plus run options."""

    base: ScenarioConfig = ScenarioConfig()
    inflows: tuple[tuple[float, float], ...] = ((700.0, 700.0),)
    train: TrainConfig = TrainConfig()
    profile: str = "desk"
    eval_seeds: int = 10
    eval_base_seed: int = 1000

    def scenarios(self) -> list[ScenarioConfig]:
        return [self.base.replace(f_h=float(fh), f_v=float(fv)) for fh, fv in self.inflows]


# ---------------------------------------------------------------------------
# dict / JSON conversion


def control_to_dict(control: Control) -> dict:
    if isinstance(control, SignalControl):
        return {"kind": "signal", **dataclasses.asdict(control.plan)}
    if isinstance(control, MaxPressureControl):
        return {"kind": "max_pressure", "tau_min": control.tau_min}
    if isinstance(control, PriorityControl):
        return {"kind": "priority", "heading": control.heading}
    return {"kind": "none"}


def control_from_dict(d: dict) -> Control:
    d = dict(d)
    kind = d.pop("kind", "none")
    try:
        if kind == "none":
            return NoControl()
        if kind == "signal":
            return SignalControl(SignalPlan(**d))
        if kind == "max_pressure":
            return MaxPressureControl(**d)
        if kind == "priority":
            return PriorityControl(**d)
    except TypeError as exc:
        raise ConfigError(f"control: {exc}") from None
    raise ConfigError(f"control.kind: unknown control {kind!r}")


def _build(cls, d, key):
    if not isinstance(d, dict):
        raise ConfigError(f"{key}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ConfigError(f"{key}.{unknown[0]}: unknown key")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from None


_SCENARIO_KEYS = {"penetration", "delta_t", "warmup_steps", "horizon", "seed", "t_gap"}
_TOP_KEYS = _SCENARIO_KEYS | {
    "profile", "network", "inflows", "control", "idm", "av_limits", "train", "eval_seeds", "eval_base_seed",
}


def experiment_from_dict(d: dict) -> ExperimentSpec:
    if not isinstance(d, dict):
        raise ConfigError("<root>: expected a JSON object")
    unknown = sorted(set(d) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    profile = d.get("profile", "desk")
    if profile not in PROFILES:
        raise ConfigError(f"profile: expected one of {sorted(PROFILES)}, got {profile!r}")
    scale = PROFILES[profile]

    network = _build(NetworkSpec, d.get("network", {}), "network")
    inflows = d.get("inflows", [[700, 700]])
    if inflows == "standard":
        inflows = INFLOW_PAIRS
    try:
        inflows = tuple((float(fh), float(fv)) for fh, fv in inflows)
    except (TypeError, ValueError):
        raise ConfigError("inflows: expected 'standard' or a list of [f_h, f_v] pairs") from None
    if not inflows:
        raise ConfigError("inflows: at least one inflow configuration is required")

    scenario_kw = {k: d[k] for k in _SCENARIO_KEYS if k in d}
    scenario_kw.setdefault("horizon", scale["horizon"])
    try:
        base = ScenarioConfig(
            network=network,
            idm=_build(IdmParams, d.get("idm", {}), "idm"),
            av_limits=_build(AvLimits, d.get("av_limits", {}), "av_limits"),
            control=control_from_dict(d.get("control", {"kind": "none"})),
            **scenario_kw,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"scenario: {exc}") from None

    train_kw = {"batch_size": scale["batch_size"], "max_updates": scale["max_updates"], "seed": base.seed}
    train_kw.update(d.get("train", {}))
    train = _build(TrainConfig, train_kw, "train")
    return ExperimentSpec(
        base=base,
        inflows=inflows,
        train=train,
        profile=profile,
        eval_seeds=int(d.get("eval_seeds", 10)),
        eval_base_seed=int(d.get("eval_base_seed", 1000)),
    )


def experiment_to_dict(spec: ExperimentSpec) -> dict:
    b = spec.base
    return {
        "profile": spec.profile,
        "network": {**dataclasses.asdict(b.network), "topology": b.network.topology.value},
        "inflows": [list(p) for p in spec.inflows],
        "penetration": b.penetration,
        "delta_t": b.delta_t,
        "warmup_steps": b.warmup_steps,
        "horizon": b.horizon,
        "seed": b.seed,
        "t_gap": b.t_gap,
        "idm": dataclasses.asdict(b.idm),
        "av_limits": dataclasses.asdict(b.av_limits),
        "control": control_to_dict(b.control),
        "train": dataclasses.asdict(spec.train),
        "eval_seeds": spec.eval_seeds,
        "eval_base_seed": spec.eval_base_seed,
    }


def load_experiment(path) -> ExperimentSpec:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        d = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"<root>: invalid JSON ({exc})") from None
    return experiment_from_dict(d)


def save_experiment(spec: ExperimentSpec, path) -> None:
    Path(path).write_text(json.dumps(experiment_to_dict(spec), indent=2) + "\n")

