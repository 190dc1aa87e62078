"""Declarative scenario description, defaults and validation."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

from .anchor import AnchorMarker, TrackingModel
from .guidance import GuidanceConfig
from .locomotion import GatingConfig


class ConfigError(ValueError):
    pass


class Mode(str, enum.Enum):
    ANCHORPLAY = "AnchorPlay"
    BASELINE = "BaselineAlwaysOn"


class Planner(str, enum.Enum):
    DISTRIBUTED = "distributed"
    NAIVE = "naive"


@dataclass(frozen=True)
class MotionProfile:
    """Ground-truth child motion. Probabilities are per tick."""

    speed_mean: float = 0.8
    speed_jitter: float = 0.1
    heading_noise: float = 0.3
    heading_tau: float = 1.0
    pause_prob: float = 0.002
    dash_prob: float = 0.001
    pause_duration: tuple[float, float] = (0.5, 3.0)
    dash_duration: tuple[float, float] = (0.5, 1.5)
    look_duration: tuple[float, float] = (2.5, 4.5)
    accel_max: float = 1.0
    arrive_tolerance: float = 0.25
    gait_amplitude: float = 3.0
    imu_noise: float = 0.05
    gyro_noise: float = 0.01

    def validate(self) -> None:
        for name in ("speed_mean", "heading_tau", "accel_max", "arrive_tolerance", "gait_amplitude"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigError(f"motion.{name} must be finite and > 0, got {v}")
        for name in ("speed_jitter", "heading_noise", "imu_noise", "gyro_noise"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigError(f"motion.{name} must be finite and >= 0, got {v}")
        if self.speed_jitter >= self.speed_mean:
            raise ConfigError("motion.speed_jitter must be below motion.speed_mean")
        if not (0 <= self.pause_prob and 0 <= self.dash_prob and self.pause_prob + self.dash_prob <= 1):
            raise ConfigError("motion.pause_prob and motion.dash_prob must be probabilities summing to <= 1")
        for name in ("pause_duration", "dash_duration", "look_duration"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"motion.{name} must be an interval 0 < lo <= hi")


def default_markers() -> list[AnchorMarker]:
    return [
        AnchorMarker("A", (1.5, 1.5)), AnchorMarker("B", (4.0, 1.5)), AnchorMarker("C", (6.5, 1.5)),
        AnchorMarker("D", (1.5, 4.5)), AnchorMarker("E", (4.0, 4.5)), AnchorMarker("F", (6.5, 4.5)),
    ]


@dataclass(frozen=True)
class ScenarioConfig:
    room: tuple[float, float] = (8.0, 6.0)
    markers: tuple[AnchorMarker, ...] = field(default_factory=lambda: tuple(default_markers()))
    n_agents: int = 4
    path_length: int = 4
    tick_dt: float = 0.01
    duration: float = 300.0
    motion: MotionProfile = field(default_factory=MotionProfile)
    gating: GatingConfig = field(default_factory=GatingConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    tracking: TrackingModel = field(default_factory=TrackingModel)
    mode: Mode = Mode.ANCHORPLAY
    planner: Planner = Planner.DISTRIBUTED
    seed: int = 1
    search_radius: float = 0.75
    crowd_radius: float = 1.0
    contact_radius: float = 0.4
    v_eps: float = 0.05
    strict: bool = True

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / self.tick_dt))

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.tick_dt

    def validate(self) -> "ScenarioConfig":
        w, h = self.room
        if not (w > 0 and h > 0):
            raise ConfigError("room dimensions must be > 0")
        if not (self.tick_dt > 0 and math.isfinite(self.tick_dt)):
            raise ConfigError("tick_dt must be > 0")
        if not self.duration >= self.tick_dt:
            raise ConfigError("duration must be >= tick_dt")
        if self.n_agents < 1:
            raise ConfigError("n_agents must be >= 1")
        if self.path_length < 1:
            raise ConfigError("path_length must be >= 1")
        if self.n_agents > len(self.markers):
            raise ConfigError(
                f"n_agents ({self.n_agents}) must not exceed the number of markers ({len(self.markers)})")
        ids = [m.id for m in self.markers]
        if len(set(ids)) != len(ids):
            raise ConfigError("marker ids must be unique")
        for m in self.markers:
            x, y = m.position
            if not (0 <= x <= w and 0 <= y <= h):
                raise ConfigError(f"marker {m.id} at {m.position} lies outside the room {self.room}")
        if len(self.markers) == 1 and self.path_length > 1:
            raise ConfigError("a single marker cannot form a repeat-free path")
        for name in ("search_radius", "crowd_radius", "contact_radius", "v_eps"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        self.motion.validate()
        try:
            self.gating.validate()
            self.guidance.validate()
            self.tracking.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        max_step_hz = 2.0 * (self.motion.speed_mean + self.motion.speed_jitter) / self.gating.stride_length
        if self.sample_rate < 4 * max_step_hz:
            raise ConfigError(
                f"tick rate {self.sample_rate:g} Hz is below 4x the fastest step frequency {max_step_hz:g} Hz")
        if self.motion.arrive_tolerance > min(m.detect_radius for m in self.markers):
            raise ConfigError("motion.arrive_tolerance must not exceed marker detect_radius")
        return self

    # -- (de)serialization ---------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        def plain(v):
            if isinstance(v, enum.Enum):
                return v.value
            if isinstance(v, tuple):
                return [plain(x) for x in v]
            if dataclasses.is_dataclass(v):
                return {f.name: plain(getattr(v, f.name)) for f in dataclasses.fields(v)}
            return v

        d = plain(self)
        d["markers"] = [{"id": m.id, "position": list(m.position), "detect_radius": m.detect_radius}
                        for m in self.markers]
        return d

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScenarioConfig":
        data = dict(data)
        unknown = set(data) - {f.name for f in dataclasses.fields(cls)}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs: dict[str, Any] = {}
        try:
            for key, value in data.items():
                if key == "markers":
                    kwargs[key] = tuple(
                        AnchorMarker(str(m["id"]), (float(m["position"][0]), float(m["position"][1])),
                                     float(m.get("detect_radius", 0.5)))
                        for m in value)
                elif key in _SECTIONS:
                    kwargs[key] = _section(_SECTIONS[key], key, value)
                elif key == "mode":
                    kwargs[key] = Mode(value)
                elif key == "planner":
                    kwargs[key] = Planner(value)
                elif key == "room":
                    kwargs[key] = (float(value[0]), float(value[1]))
                elif key in ("n_agents", "path_length", "seed"):
                    if isinstance(value, bool) or int(value) != value:
                        raise ConfigError(f"{key} must be an integer")
                    kwargs[key] = int(value)
                elif key == "strict":
                    kwargs[key] = bool(value)
                else:
                    kwargs[key] = float(value)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError, IndexError) as exc:
            raise ConfigError(f"bad value for config key: {exc}") from exc
        return cls(**kwargs)


_SECTIONS = {"motion": MotionProfile, "gating": GatingConfig, "guidance": GuidanceConfig,
             "tracking": TrackingModel}


def _section(cls, name: str, value: Mapping[str, Any]):
    if not isinstance(value, Mapping):
        raise ConfigError(f"{name} must be a mapping")
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(value) - set(names)
    if unknown:
        raise ConfigError(f"unknown {name} keys: {', '.join(sorted(unknown))}")
    kwargs = {}
    for k, v in value.items():
        if isinstance(getattr(cls(), k), tuple):
            kwargs[k] = tuple(float(x) for x in v)
        else:
            kwargs[k] = float(v)
    return cls(**kwargs)


def standard_scenario(seed: int = 1, **overrides) -> ScenarioConfig:
    """4 agents, 6 markers, 300 s at 100 Hz."""
    return dataclasses.replace(ScenarioConfig(seed=seed), **overrides)
