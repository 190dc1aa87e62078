"""Locomotion controller: cadence monitor, dead reckoning and the stop-and-look gate.

The controller only ever looks at IMU samples. Motion is classified from the
variance of the accelerometer magnitude over a sliding window, with a
hysteresis band so that the classification does not flap. The gating state
machine turns the camera on only after the device has been still for
``dwell_threshold`` seconds and turns it off on the first moving tick.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .constants import DEFAULT_SAMPLE_RATE, GRAVITY, TIME_EPS
from .telemetry import ImuSample


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class GatingConfig:
    dwell_threshold: float = 1.0
    stationary_var_max: float = 0.05
    resume_var_min: float = 0.5
    window: float = 0.5
    stride_length: float = 0.4
    peak_threshold: float = 1.0
    refractory: float = 0.25
    lpf_cutoff: float = 5.0
    cadence_window: float = 2.0

    def validate(self) -> None:
        for name in ("dwell_threshold", "stationary_var_max", "resume_var_min", "window",
                     "stride_length", "peak_threshold", "refractory", "lpf_cutoff",
                     "cadence_window"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"gating.{name} must be finite and > 0, got {v}")
        if self.resume_var_min <= self.stationary_var_max:
            raise ValueError("gating.resume_var_min must exceed gating.stationary_var_max")
        if self.window > self.dwell_threshold:
            raise ValueError("gating.window must not exceed gating.dwell_threshold")


def normalize_angle(a: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.remainder(a, 2.0 * math.pi)
    if r <= -math.pi:
        r += 2.0 * math.pi
    return r


# -- cadence monitor -----------------------------------------------------------

class StepDetector:
    """Streaming peak detector on low-pass filtered accel magnitude.

    A peak is confirmed one sample late, when the filtered signal turns down.
    """

    def __init__(self, config: GatingConfig = GatingConfig()):
        self.threshold = GRAVITY + config.peak_threshold
        self.refractory = config.refractory
        self._rc = 1.0 / (2.0 * math.pi * config.lpf_cutoff)
        self._y = None
        self._y_prev = None
        self._t = None
        self._last_step = -math.inf

    def push(self, t: float, accel_norm: float) -> Optional[float]:
        """Feed one sample; return the time of a newly confirmed step, if any."""
        if self._y is None:
            self._y = accel_norm
            self._t = t
            return None
        dt = t - self._t
        alpha = dt / (self._rc + dt)
        y = self._y + alpha * (accel_norm - self._y)
        step = None
        y1, y0 = self._y, self._y_prev
        if (y0 is not None and y1 > y0 and y1 >= y and y1 > self.threshold
                and self._t - self._last_step >= self.refractory - TIME_EPS):
            step = self._t
            self._last_step = step
        self._y_prev, self._y, self._t = y1, y, t
        return step


def detect_steps(window: Sequence[ImuSample], config: GatingConfig = GatingConfig()) -> list[float]:
    if len(window) < 2:
        raise InsufficientDataError("step detection needs at least 2 samples")
    det = StepDetector(config)
    steps = []
    for s in window:
        hit = det.push(s.t, s.accel_norm)
        if hit is not None:
            steps.append(hit)
    return steps


@dataclass(frozen=True)
class CadenceEstimate:
    steps_per_second: float = 0.0
    last_step_t: Optional[float] = None
    step_count: int = 0
    recent: tuple[float, ...] = ()


def update_cadence(estimate: CadenceEstimate, new_steps: Sequence[float], now: float,
                   window: float = 2.0) -> CadenceEstimate:
    last = estimate.last_step_t
    for s in new_steps:
        if s > now + TIME_EPS:
            raise ValueError(f"step at {s} is later than now={now}")
        if last is not None and s < last:
            raise ValueError(f"out-of-order step {s} < last step {last}")
        last = s
    lo = now - window
    recent = tuple(s for s in (*estimate.recent, *new_steps) if s > lo + TIME_EPS)
    return CadenceEstimate(
        steps_per_second=len(recent) / window,
        last_step_t=last,
        step_count=estimate.step_count + len(new_steps),
        recent=recent,
    )


# -- trajectory calculator ---------------------------------------------------------

@dataclass(frozen=True)
class PoseEstimate:
    position: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0
    speed: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (*self.position, self.heading, self.speed)):
            raise ValueError(f"non-finite pose {self}")
        if self.speed < 0:
            raise ValueError("speed must be non-negative")


def pdr_update(pose: PoseEstimate, step_events: Sequence, gyro_yaw_delta: float,
               stride_length: float = 0.4, steps_per_second: Optional[float] = None) -> PoseEstimate:
    """Rotate by the gyro yaw increment, then advance one stride per step."""
    if not math.isfinite(gyro_yaw_delta):
        raise ValueError("non-finite yaw delta")
    heading = normalize_angle(pose.heading + gyro_yaw_delta)
    x, y = pose.position
    n = len(step_events)
    if n:
        c, s = math.cos(heading), math.sin(heading)
        for _ in range(n):
            x += stride_length * c
            y += stride_length * s
    speed = pose.speed if steps_per_second is None else steps_per_second * stride_length
    return PoseEstimate((x, y), heading, speed)


# -- stationarity -----------------------------------------------------------------

def classify_variance(variance: float, config: GatingConfig, currently_stationary: bool) -> bool:
    if currently_stationary:
        return variance <= config.resume_var_min
    return variance < config.stationary_var_max


def window_span(window: Sequence[ImuSample]) -> float:
    """Time covered by the samples, counting one sample period for the last one."""
    if len(window) < 2:
        return 0.0
    period = (window[-1].t - window[0].t) / (len(window) - 1)
    return window[-1].t - window[0].t + period


def is_stationary(window: Sequence[ImuSample], config: GatingConfig,
                  currently_stationary: bool) -> bool:
    if window_span(window) < config.window - TIME_EPS:
        raise InsufficientDataError(
            f"window spans {window_span(window):.3f} s, need {config.window} s")
    norms = np.array([s.accel_norm for s in window])
    return classify_variance(float(norms.var()), config, currently_stationary)


class StationarityDetector:
    """Sliding-window accel-magnitude variance with the same hysteresis as
    :func:`is_stationary`. Reports moving until the window is full."""

    def __init__(self, config: GatingConfig, sample_rate: float = DEFAULT_SAMPLE_RATE):
        self.config = config
        self.size = max(2, int(round(config.window * sample_rate)))
        self._buf = deque()
        self._sum = 0.0
        self._sumsq = 0.0
        self._since_exact = 0
        self.stationary = False
        self.variance = math.inf

    def push(self, accel_norm: float) -> bool:
        x = accel_norm - GRAVITY
        buf = self._buf
        buf.append(x)
        self._sum += x
        self._sumsq += x * x
        if len(buf) > self.size:
            old = buf.popleft()
            self._sum -= old
            self._sumsq -= old * old
        self._since_exact += 1
        if self._since_exact >= self.size:
            # bound cancellation drift of the running sums
            self._sum = math.fsum(buf)
            self._sumsq = math.fsum(v * v for v in buf)
            self._since_exact = 0
        n = len(buf)
        if n < self.size:
            self.stationary = False
            return False
        mean = self._sum / n
        self.variance = max(0.0, self._sumsq / n - mean * mean)
        self.stationary = classify_variance(self.variance, self.config, self.stationary)
        return self.stationary


# -- stop-and-look state machine -------------------------------------------------------

@dataclass(frozen=True)
class Transit:
    pass


@dataclass(frozen=True)
class Dwelling:
    since: float


@dataclass(frozen=True)
class Anchored:
    anchor_id: Optional[str] = None


MotionState = Union[Transit, Dwelling, Anchored]


class HardwareCommand(enum.Enum):
    CAMERA_ENABLE = "CameraEnable"
    CAMERA_DISABLE = "CameraDisable"


TRANSIT = Transit()


def step_state_machine(state: MotionState, stationary: bool, now: float,
                       anchor_found: Optional[str], config: GatingConfig
                       ) -> tuple[MotionState, list[HardwareCommand]]:
    if isinstance(state, Transit):
        if stationary:
            return Dwelling(now), []
        return state, []
    if isinstance(state, Dwelling):
        if not stationary:
            return TRANSIT, []
        if now - state.since >= config.dwell_threshold - TIME_EPS:
            return Anchored(), [HardwareCommand.CAMERA_ENABLE]
        return state, []
    if isinstance(state, Anchored):
        if not stationary:
            return TRANSIT, [HardwareCommand.CAMERA_DISABLE]
        if anchor_found is not None and anchor_found != state.anchor_id:
            return Anchored(anchor_found), []
        return state, []
    raise TypeError(f"unknown motion state {state!r}")


def state_name(state: MotionState) -> str:
    return type(state).__name__


class LocomotionController:
    """Per-agent controller driven one IMU sample per tick.

    ``observe`` runs the cadence monitor, trajectory calculator and
    stationarity detector; ``advance`` runs the gate and returns the
    hardware commands for this tick. The pose is kept as plain floats and
    only materialized on access; step ticks go through :func:`pdr_update`.
    """

    def __init__(self, config: GatingConfig = GatingConfig(), pose: PoseEstimate = PoseEstimate(),
                 sample_rate: float = DEFAULT_SAMPLE_RATE):
        self.config = config
        self.sample_rate = sample_rate
        self.state: MotionState = TRANSIT
        self.camera_on = False
        self.steps = StepDetector(config)
        self.stillness = StationarityDetector(config, sample_rate)
        self.cadence = CadenceEstimate()
        self._x, self._y = pose.position
        self._heading = pose.heading
        self._speed = pose.speed
        self._last_t: Optional[float] = None

    @property
    def pose(self) -> PoseEstimate:
        return PoseEstimate((self._x, self._y), self._heading, self._speed)

    @property
    def stationary(self) -> bool:
        return self.stillness.stationary

    def observe(self, sample: ImuSample) -> Optional[float]:
        ax, ay, az = sample.accel
        norm = math.sqrt(ax * ax + ay * ay + az * az)
        t = sample.t
        self.stillness.push(norm)
        step = self.steps.push(t, norm)
        dt = 0.0 if self._last_t is None else t - self._last_t
        self._last_t = t
        cad = self.cadence
        window = self.config.cadence_window
        if step is not None or (cad.recent and cad.recent[0] <= t - window + TIME_EPS):
            new_steps = () if step is None else (step,)
            self.cadence = cad = update_cadence(cad, new_steps, t, window)
            pose = pdr_update(self.pose, new_steps, sample.gyro[2] * dt,
                              self.config.stride_length, cad.steps_per_second)
            (self._x, self._y), self._heading, self._speed = pose.position, pose.heading, pose.speed
        else:
            self._heading = normalize_angle(self._heading + sample.gyro[2] * dt)
        return step

    def advance(self, now: float, anchor_found: Optional[str] = None) -> list[HardwareCommand]:
        self.state, cmds = step_state_machine(self.state, self.stillness.stationary, now,
                                              anchor_found, self.config)
        for c in cmds:
            self.camera_on = c is HardwareCommand.CAMERA_ENABLE
        return cmds

    def relocalize(self, position: tuple[float, float]) -> None:
        """Snap the dead-reckoned position to a recognized anchor."""
        self._x, self._y = position
