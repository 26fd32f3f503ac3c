"""Run configuration: a YAML (or JSON) document validated into a :class:`RunConfig`."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .errors import ConfigError

COMMANDS = ("run", "compare", "tune", "replicate-paper", "doubling")
ALGORITHMS = ("vq", "ogd-proj", "primal-dual")
TUNER_MODES = ("minimax", "regret-subject-to-violation", "violation-subject-to-regret")
PAPER_T = 5000


@dataclass(frozen=True)
class AlgorithmConfig:
    kind: str = "vq"
    theta_exp: float = 0.5
    label: Optional[str] = None
    primal_scale: float = 1.0
    dual_scale: float = 1.0
    reg_scale: float = 1.0
    step: Optional[float] = None


@dataclass(frozen=True)
class InstanceConfig:
    """Inline instance; omitted entirely when instances come from seeds."""

    A: tuple
    b: tuple
    lower: Optional[tuple] = None
    upper: Optional[tuple] = None
    center: Optional[tuple] = None
    radius: Optional[float] = None
    D: Optional[float] = None
    beta: Optional[float] = None
    G: Optional[float] = None
    R: Optional[float] = None
    epsilon: Optional[float] = None
    slater_point: Optional[tuple] = None


@dataclass(frozen=True)
class TunerConfig:
    mode: str = "minimax"
    z0: Optional[float] = None
    D: Optional[float] = None
    G: Optional[float] = None
    R: Optional[float] = None
    beta: Optional[float] = None
    epsilon: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    command: str = "run"
    T: int = PAPER_T
    seeds: tuple = (42,)
    n: int = 2
    m: int = 3
    algorithm: AlgorithmConfig = field(default_factory=AlgorithmConfig)
    algorithms: tuple = ()
    instance: Optional[InstanceConfig] = None
    tuner: TunerConfig = field(default_factory=TunerConfig)
    out: str = "out"
    plots: bool = True

    def compared(self) -> tuple:
        """Algorithms for compare / replicate-paper."""
        if self.algorithms:
            return self.algorithms
        return (
            AlgorithmConfig("vq"),
            AlgorithmConfig("ogd-proj"),
            AlgorithmConfig("primal-dual", theta_exp=0.5),
            AlgorithmConfig("primal-dual", theta_exp=2.0 / 3.0),
        )


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected a mapping, got {type(data).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(
            "unknown key(s): " + ", ".join(f"{path}.{k}" if path else k for k in unknown)
        )
    return {k: _tuplify(v) for k, v in data.items()}


def _number(value, path, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _algorithm(data, path) -> AlgorithmConfig:
    if isinstance(data, str):
        data = {"kind": data}
    kw = _build(AlgorithmConfig, data, path)
    cfg = AlgorithmConfig(**kw)
    if cfg.kind not in ALGORITHMS:
        raise ConfigError(f"{path}.kind: must be one of {ALGORITHMS}, got {cfg.kind!r}")
    if not 0.0 < _number(cfg.theta_exp, f"{path}.theta_exp") < 1.0:
        raise ConfigError(f"{path}.theta_exp: must lie in (0, 1)")
    for name in ("primal_scale", "dual_scale"):
        if not _number(getattr(cfg, name), f"{path}.{name}") > 0:
            raise ConfigError(f"{path}.{name}: must be positive")
    if _number(cfg.reg_scale, f"{path}.reg_scale") < 0:
        raise ConfigError(f"{path}.reg_scale: must be non-negative")
    if cfg.step is not None and not _number(cfg.step, f"{path}.step") > 0:
        raise ConfigError(f"{path}.step: must be positive")
    return cfg


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"<root>: expected a mapping, got {type(data).__name__}")
    data = dict(data)
    if "seed" in data:
        if "seeds" in data:
            raise ConfigError("give either seed or seeds, not both")
        data["seeds"] = [data.pop("seed")]
    kw = _build(RunConfig, data, "")
    if "algorithm" in kw:
        kw["algorithm"] = _algorithm(data["algorithm"], "algorithm")
    if "algorithms" in kw:
        kw["algorithms"] = tuple(
            _algorithm(a, f"algorithms[{i}]") for i, a in enumerate(data["algorithms"] or [])
        )
    if kw.get("instance") is not None:
        inst = _build(InstanceConfig, data["instance"], "instance")
        missing = [k for k in ("A", "b") if k not in inst]
        if missing:
            raise ConfigError("instance: missing " + ", ".join(f"instance.{k}" for k in missing))
        has_box = "lower" in inst or "upper" in inst
        has_ball = "center" in inst or "radius" in inst
        if has_box == has_ball:
            raise ConfigError("instance: give either lower/upper (box) or center/radius (ball)")
        kw["instance"] = InstanceConfig(**inst)
    if "tuner" in kw:
        kw["tuner"] = TunerConfig(**_build(TunerConfig, data["tuner"], "tuner"))
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"command: must be one of {COMMANDS}, got {cfg.command!r}")
    if _number(cfg.T, "T", int) < 1:
        raise ConfigError("T: must be at least 1")
    if not cfg.seeds:
        raise ConfigError("seeds: must be non-empty")
    for i, s in enumerate(cfg.seeds):
        if _number(s, f"seeds[{i}]", int) < 0:
            raise ConfigError(f"seeds[{i}]: must be non-negative")
    if _number(cfg.n, "n", int) < 1 or _number(cfg.m, "m", int) < 1:
        raise ConfigError("n and m must be at least 1")
    if not isinstance(cfg.plots, bool):
        raise ConfigError("plots: expected true or false")
    if not isinstance(cfg.out, str) or not cfg.out:
        raise ConfigError("out: expected a directory path")
    if cfg.tuner.mode not in TUNER_MODES:
        raise ConfigError(f"tuner.mode: must be one of {TUNER_MODES}")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML/JSON document, filling defaults."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if data is None:
        data = {}
    return config_from_dict(data)


def _plain(v):
    if dataclasses.is_dataclass(v):
        return {k: _plain(x) for k, x in dataclasses.asdict(v).items() if x is not None}
    if isinstance(v, (tuple, list)):
        return [_plain(x) for x in v]
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items() if x is not None}
    return v


def serialize_config(cfg: RunConfig) -> str:
    data = _plain(cfg)
    if not data.get("algorithms"):
        data.pop("algorithms", None)
    return yaml.safe_dump(data, sort_keys=True)


def override(cfg: RunConfig, **changes) -> RunConfig:
    """Apply non-None command-line overrides and re-validate."""
    changes = {k: v for k, v in changes.items() if v is not None}
    new = dataclasses.replace(cfg, **changes)
    validate(new)
    return new
