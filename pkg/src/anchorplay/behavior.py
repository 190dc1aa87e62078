"""Ground-truth child motion and the IMU it produces.

Children walk toward their current waypoint with a wandering heading error,
stop at random, dash at random, and stand still for a while once they reach a
marker. Speed ramps up at ``accel_max`` after a standstill and drops to zero
at once when they stop. The simulated IMU carries the gait bounce whenever
the body is moving, the standing signature otherwise, and the true yaw rate.
"""

from __future__ import annotations

import enum
import math
import random
from typing import NamedTuple

import numpy as np

from .constants import GRAVITY
from .locomotion import normalize_angle
from .scenario import MotionProfile
from .telemetry import ImuSample, gait_vertical_accel


class BehaviorMode(str, enum.Enum):
    WALK = "Walk"
    PAUSE = "Pause"
    DASH = "Dash"


class AgentGroundTruth(NamedTuple):
    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    mode: BehaviorMode = BehaviorMode.WALK
    heading: float = 0.0
    yaw_rate: float = 0.0
    speed_cmd: float = 0.8
    mode_left: float = 0.0
    heading_err: float = 0.0
    gait_phase: float = 0.0
    looking: bool = False
    visits: int = 0

    @property
    def speed(self) -> float:
        return math.hypot(*self.velocity)


class BufferedNormals:
    """Seeded standard-normal stream drawn from numpy in blocks.

    Offers the ``gauss``/``random``/``uniform`` subset of :class:`random.Random`
    used by the behavior and IMU models.
    """

    def __init__(self, seed: int, block: int = 4096):
        self._gen = np.random.default_rng(seed)
        self._block = block
        self._normals: list[float] = []
        self._uniforms: list[float] = []
        self._i = self._j = 0

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        if self._i == len(self._normals):
            self._normals = self._gen.standard_normal(self._block).tolist()
            self._i = 0
        z = self._normals[self._i]
        self._i += 1
        return mu + sigma * z

    def random(self) -> float:
        if self._j == len(self._uniforms):
            self._uniforms = self._gen.random(self._block).tolist()
            self._j = 0
        u = self._uniforms[self._j]
        self._j += 1
        return u

    def uniform(self, a: float, b: float) -> float:
        return a + (b - a) * self.random()


def _hold(agent: AgentGroundTruth, **changes) -> AgentGroundTruth:
    return agent._replace(velocity=(0.0, 0.0), yaw_rate=0.0, gait_phase=0.0, **changes)


def step_agent_behavior(agent: AgentGroundTruth, target: tuple[float, float], dt: float,
                        rng: random.Random | BufferedNormals, motion: MotionProfile = MotionProfile(),
                        room: tuple[float, float] = (8.0, 6.0),
                        stride_length: float = 0.4) -> AgentGroundTruth:
    if dt <= 0:
        raise ValueError("dt must be > 0")
    mode = agent.mode
    u = rng.random()

    if mode is BehaviorMode.PAUSE:
        left = agent.mode_left - dt
        if left > 1e-12:
            return _hold(agent, mode_left=left)
        # pause over: stand for this tick, start walking on the next one
        speed_cmd = motion.speed_mean + motion.speed_jitter * (2.0 * rng.random() - 1.0)
        return _hold(agent, mode=BehaviorMode.WALK, mode_left=0.0, looking=False, speed_cmd=speed_cmd,
                     heading_err=0.0, visits=agent.visits + (1 if agent.looking else 0))

    x, y = agent.position
    tx, ty = target
    if math.hypot(tx - x, ty - y) <= motion.arrive_tolerance:
        lo, hi = motion.look_duration
        return _hold(agent, mode=BehaviorMode.PAUSE, mode_left=rng.uniform(lo, hi), looking=True)

    if mode is BehaviorMode.WALK:
        if u < motion.pause_prob:
            lo, hi = motion.pause_duration
            return _hold(agent, mode=BehaviorMode.PAUSE, mode_left=rng.uniform(lo, hi))
        left = 0.0
        if u < motion.pause_prob + motion.dash_prob:
            mode = BehaviorMode.DASH
            left = rng.uniform(*motion.dash_duration)
    else:
        left = agent.mode_left - dt
        if left <= 1e-12:
            mode, left = BehaviorMode.WALK, 0.0

    err = agent.heading_err * (1.0 - dt / motion.heading_tau)
    if motion.heading_noise:
        err += motion.heading_noise * math.sqrt(dt) * rng.gauss(0.0, 1.0)
    heading = normalize_angle(math.atan2(ty - y, tx - x) + err)

    goal = agent.speed_cmd * (2.0 if mode is BehaviorMode.DASH else 1.0)
    speed = min(agent.speed + motion.accel_max * dt, goal)
    c, s = math.cos(heading), math.sin(heading)
    vx, vy = speed * c, speed * s
    w, h = room
    nx = min(max(x + vx * dt, 0.0), w)
    ny = min(max(y + vy * dt, 0.0), h)

    # positional: position, velocity, mode, heading, yaw_rate, speed_cmd, mode_left,
    # heading_err, gait_phase, looking, visits
    return AgentGroundTruth(
        (nx, ny), (vx, vy), mode, heading, normalize_angle(heading - agent.heading) / dt,
        agent.speed_cmd, left, err, (agent.gait_phase + speed / stride_length * dt) % 1.0,
        False, agent.visits,
    )


def synthesize_imu_from_truth(agent: AgentGroundTruth, t: float, rng: random.Random | BufferedNormals,
                              motion: MotionProfile = MotionProfile()) -> ImuSample:
    """IMU sample at the end of a tick whose motion is described by ``agent``."""
    sd = motion.imu_noise
    if sd:
        nx, ny, nz = rng.gauss(0.0, sd), rng.gauss(0.0, sd), rng.gauss(0.0, sd)
    else:
        nx = ny = nz = 0.0
    if agent.velocity != (0.0, 0.0):
        az = gait_vertical_accel(motion.gait_amplitude, agent.gait_phase)
    else:
        az = GRAVITY
    gz = agent.yaw_rate
    if motion.gyro_noise:
        gz += rng.gauss(0.0, motion.gyro_noise)
    return ImuSample(t, (nx, ny, az + nz), (0.0, 0.0, gz))
