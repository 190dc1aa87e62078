"""Fixed-timestep multi-agent classroom simulation.

Every tick, each agent's ground truth is advanced, turned into one IMU sample,
and fed to that agent's device. In AnchorPlay mode the device runs the
locomotion controller, audio guidance and anchor phase; in baseline mode the
camera is on for the whole run and tracking is re-evaluated every tick
under the motion-dependent loss model. Ground truth is used only for metrics
and invariant checks.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional

import numpy as np

from .anchor import RewardLedger, localized_search, simulate_tracking_init
from .behavior import AgentGroundTruth, BufferedNormals, step_agent_behavior, synthesize_imu_from_truth
from .guidance import compute_cue, cue_schedule
from .locomotion import (Anchored, HardwareCommand, LocomotionController, PoseEstimate,
                         StationarityDetector, state_name)
from .scenario import Mode, Planner, ScenarioConfig
from .waypoints import CrowdingReport, assign_paths, crowding_metrics, extend_path, naive_plan

TRUTH_DECIMALS = 6


class EventKind(str, enum.Enum):
    STATE_CHANGE = "StateChange"
    CAMERA_ENABLE = "CameraEnable"
    CAMERA_DISABLE = "CameraDisable"
    CUE_EMIT = "CueEmit"
    STEP_DETECTED = "StepDetected"
    SEARCH_MISS = "SearchMiss"
    TRACKING_LOSS = "TrackingLoss"
    REWARD = "Reward"
    NEAR_COLLISION = "NearCollision"


@dataclass(frozen=True)
class SimEvent:
    t: float
    agent: int
    kind: EventKind
    payload: dict = field(default_factory=dict)
    tick: int = 0


@dataclass
class SimMetrics:
    camera_duty_cycle: float
    exclusion_violations: int
    tracking_loss_events: int
    rewards_collected: int
    mean_completion_time: Optional[float]
    crowding: CrowdingReport
    near_collision_count: int
    agents_completed: int = 0
    search_misses: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "camera_duty_cycle": self.camera_duty_cycle,
            "exclusion_violations": self.exclusion_violations,
            "tracking_loss_events": self.tracking_loss_events,
            "rewards_collected": self.rewards_collected,
            "mean_completion_time": self.mean_completion_time,
            "agents_completed": self.agents_completed,
            "search_misses": self.search_misses,
            "near_collision_count": self.near_collision_count,
            "crowding": self.crowding.to_dict(),
        }


@dataclass
class Trace:
    """Per-tick ground truth, rounded to the precision written to event logs."""

    times: np.ndarray      # (ticks,)
    positions: np.ndarray  # (ticks, agents, 2)
    speeds: np.ndarray     # (ticks, agents)
    camera: np.ndarray     # (ticks, agents) bool, state at end of tick


class SimResult(NamedTuple):
    events: list[SimEvent]
    metrics: SimMetrics
    trace: Trace
    tracking_init_flags: list[bool]


class InvariantBreach(RuntimeError):
    """A hard run invariant failed; carries the events logged so far."""

    def __init__(self, message: str, events: list[SimEvent]):
        super().__init__(message)
        self.events = events


def _seed(seed: int, *path: int) -> int:
    return int(np.random.SeedSequence([seed, *path]).generate_state(1)[0])


def tick_time(k: int, dt: float) -> float:
    return round(k * dt, 9)


class _AnchorPlayDevice:
    """Locomotion controller, audio guidance and anchor phase for one agent."""

    def __init__(self, agent: int, cfg: ScenarioConfig, pose: PoseEstimate, rng: random.Random,
                 markers: list, by_id: dict):
        self.agent = agent
        self.cfg = cfg
        self.ctrl = LocomotionController(cfg.gating, pose, cfg.sample_rate)
        self.ledger = RewardLedger(agent)
        self.rng = rng
        self.markers = markers
        self.by_id = by_id
        self.tracking_ready = False
        self.miss_logged = False
        self.last_cue = -math.inf
        self.camera_on = False
        self.tracking_flags: list[bool] = []
        self._cue_floor = 1.0 / cfg.guidance.tempo_max - 1e-9

    def tick(self, k: int, t: float, sample, true_pos, target, speed: float, emit) -> tuple[int, int, int]:
        """Returns (tracking losses, rewards, search misses) for this tick."""
        a, ctrl = self.agent, self.ctrl
        losses = rewards = misses = 0
        step = ctrl.observe(sample)
        if step is not None:
            emit(SimEvent(t, a, EventKind.STEP_DETECTED, {"t_step": round(step, 9)}, k))
        found = None
        before = ctrl.state
        if type(before) is Anchored and self.tracking_ready and before.anchor_id is None:
            found = localized_search(PoseEstimate(true_pos), self.markers, self.cfg.search_radius)
            if found is None and not self.miss_logged:
                self.miss_logged = True
                misses = 1
                emit(SimEvent(t, a, EventKind.SEARCH_MISS, {"pos": [round(v, 4) for v in true_pos]}, k))
        cmds = ctrl.advance(t, found)
        after = ctrl.state
        if type(after) is not type(before):
            emit(SimEvent(t, a, EventKind.STATE_CHANGE,
                          {"from": state_name(before), "to": state_name(after)}, k))
        for cmd in cmds:
            if cmd is HardwareCommand.CAMERA_ENABLE:
                self.camera_on = True
                emit(SimEvent(t, a, EventKind.CAMERA_ENABLE, {"speed": speed}, k))
                self.tracking_flags.append(ctrl.stationary)
                outcome = simulate_tracking_init(ctrl.stillness.variance, ctrl.stationary,
                                                 self.rng, self.cfg.tracking)
                if outcome.loss_event:
                    losses += 1
                    emit(SimEvent(t, a, EventKind.TRACKING_LOSS, {}, k))
                self.tracking_ready = outcome.success
            else:
                self.camera_on = False
                self.tracking_ready = False
                self.miss_logged = False
                self.ledger.end_visit()
                emit(SimEvent(t, a, EventKind.CAMERA_DISABLE, {"speed": speed}, k))
        if found is not None and type(after) is Anchored and after.anchor_id == found:
            reward = self.ledger.instantiate_reward(found, t, anchored=True)
            if reward is not None:
                rewards = 1
                emit(SimEvent(t, a, EventKind.REWARD, {"marker": reward.marker}, k))
            ctrl.relocalize(self.by_id[found].position)
        if t - self.last_cue >= self._cue_floor:
            cue = compute_cue(ctrl.pose, target, after, self.cfg.guidance)
            if cue_schedule(cue, t, self.last_cue):
                self.last_cue = t
                emit(SimEvent(t, a, EventKind.CUE_EMIT, {
                    "phase": cue.phase.value, "azimuth": round(cue.azimuth, 4),
                    "distance": round(cue.distance, 4), "tempo": round(cue.tempo, 4)}, k))
        return losses, rewards, misses


class _BaselineDevice:
    """Always-on camera: tracking is re-initialized every tick under the loss model."""

    def __init__(self, agent: int, cfg: ScenarioConfig, rng: random.Random, markers: list):
        self.agent = agent
        self.cfg = cfg
        self.still = StationarityDetector(cfg.gating, cfg.sample_rate)
        self.ledger = RewardLedger(agent)
        self.rng = rng
        self.markers = markers
        self.camera_on = True
        self.tracking_ok = False
        self.present_at: Optional[str] = None
        self.tracking_flags: list[bool] = []

    def tick(self, k: int, t: float, sample, true_pos, target, speed: float, emit) -> tuple[int, int, int]:
        a, still = self.agent, self.still
        losses = rewards = 0
        ax, ay, az = sample.accel
        still.push(math.sqrt(ax * ax + ay * ay + az * az))
        outcome = simulate_tracking_init(still.variance, still.stationary, self.rng, self.cfg.tracking)
        self.tracking_flags.append(still.stationary)
        if outcome.loss_event and self.tracking_ok:
            losses = 1
            emit(SimEvent(t, a, EventKind.TRACKING_LOSS, {"variance": round(min(still.variance, 1e9), 4)}, k))
        self.tracking_ok = outcome.success
        # a visit is physical presence at a marker; recognition needs live tracking
        present = localized_search(PoseEstimate(true_pos), self.markers, self.cfg.search_radius)
        if present != self.present_at:
            self.ledger.end_visit()
            self.present_at = present
        if present is not None and outcome.success:
            reward = self.ledger.instantiate_reward(present, t, anchored=True)
            if reward is not None:
                rewards = 1
                emit(SimEvent(t, a, EventKind.REWARD, {"marker": reward.marker}, k))
        return losses, rewards, 0


def make_plan(config: ScenarioConfig):
    build = assign_paths if config.planner is Planner.DISTRIBUTED else naive_plan
    return build(config.n_agents, list(config.markers), config.path_length, config.seed)


def run_scenario(config: ScenarioConfig) -> SimResult:
    config.validate()
    cfg = config
    dt = cfg.tick_dt
    n_agents = cfg.n_agents
    n_ticks = cfg.n_ticks
    markers = list(cfg.markers)
    by_id = {m.id: m for m in markers}
    anchorplay = cfg.mode is Mode.ANCHORPLAY
    motion, room = cfg.motion, cfg.room
    stride = cfg.gating.stride_length
    v_eps = cfg.v_eps
    strict = anchorplay and cfg.strict

    plan = make_plan(cfg)
    paths = [list(p) for p in plan.paths]
    path_pos = [0] * n_agents
    completed_at: list[Optional[float]] = [None] * n_agents

    spawn_rng = random.Random(_seed(cfg.seed, 0, 0))
    rng_behavior = [BufferedNormals(_seed(cfg.seed, a + 1, 1)) for a in range(n_agents)]
    rng_imu = [BufferedNormals(_seed(cfg.seed, a + 1, 2)) for a in range(n_agents)]
    rng_track = [random.Random(_seed(cfg.seed, a + 1, 3)) for a in range(n_agents)]

    events: list[SimEvent] = []
    emit = events.append
    agents: list[AgentGroundTruth] = []
    devices: list = []
    for a in range(n_agents):
        pos = (spawn_rng.uniform(0.0, room[0]), spawn_rng.uniform(0.0, room[1]))
        tgt = by_id[paths[a][0]].position
        heading = math.atan2(tgt[1] - pos[1], tgt[0] - pos[0])
        speed_cmd = motion.speed_mean + motion.speed_jitter * (2.0 * spawn_rng.random() - 1.0)
        agents.append(AgentGroundTruth(position=pos, heading=heading, speed_cmd=speed_cmd))
        if anchorplay:
            devices.append(_AnchorPlayDevice(a, cfg, PoseEstimate(pos, heading, 0.0), rng_track[a],
                                             markers, by_id))
        else:
            devices.append(_BaselineDevice(a, cfg, rng_track[a], markers))
            emit(SimEvent(0.0, a, EventKind.CAMERA_ENABLE, {"speed": 0.0}, 0))

    pos_rows: list[list[float]] = []
    speed_rows: list[list[float]] = []
    camera_rows: list[list[bool]] = []
    violations = losses = rewards = misses = 0
    contact2 = cfg.contact_radius ** 2
    in_contact: set[tuple[int, int]] = set()
    pairs = list(itertools.combinations(range(n_agents), 2))

    for k in range(1, n_ticks + 1):
        t = tick_time(k, dt)
        prow: list[float] = []
        srow: list[float] = []
        crow: list[bool] = []
        for a in range(n_agents):
            prev = agents[a]
            target = by_id[paths[a][path_pos[a]]].position
            agent = step_agent_behavior(prev, target, dt, rng_behavior[a], motion, room, stride)
            agents[a] = agent
            if agent.visits != prev.visits:
                path_pos[a] += 1
                if path_pos[a] == len(paths[a]):
                    if completed_at[a] is None:
                        completed_at[a] = t
                    if cfg.planner is Planner.DISTRIBUTED:
                        busy = [paths[b][path_pos[b]] for b in range(n_agents) if b != a]
                        paths[a] = extend_path(paths[a][-1], busy, markers, cfg.path_length)
                    path_pos[a] = 0
                target = by_id[paths[a][path_pos[a]]].position
            sample = synthesize_imu_from_truth(agent, t, rng_imu[a], motion)
            vx, vy = agent.velocity
            speed = round(math.sqrt(vx * vx + vy * vy), TRUTH_DECIMALS)
            dev = devices[a]
            dl, dr, dm = dev.tick(k, t, sample, agent.position, target, speed, emit)
            losses += dl
            rewards += dr
            misses += dm

            x, y = agent.position
            prow.append(round(x, TRUTH_DECIMALS))
            prow.append(round(y, TRUTH_DECIMALS))
            srow.append(speed)
            crow.append(dev.camera_on)
            if dev.camera_on and speed > v_eps:
                violations += 1
                if strict:
                    raise InvariantBreach(
                        f"agent {a}: camera enabled at t={t} with ground-truth speed {speed} > {v_eps}", events)

        for i, j in pairs:
            dx = prow[2 * i] - prow[2 * j]
            dy = prow[2 * i + 1] - prow[2 * j + 1]
            if dx * dx + dy * dy <= contact2:
                if (i, j) not in in_contact:
                    in_contact.add((i, j))
                    if srow[i] > v_eps or srow[j] > v_eps:
                        emit(SimEvent(t, i, EventKind.NEAR_COLLISION,
                                      {"other": j, "screen_up": crow[i] or crow[j]}, k))
            else:
                in_contact.discard((i, j))
        pos_rows.append(prow)
        speed_rows.append(srow)
        camera_rows.append(crow)

    positions = np.array(pos_rows, dtype=float).reshape(n_ticks, n_agents, 2)
    camera = np.array(camera_rows, dtype=bool).reshape(n_ticks, n_agents)
    trace = Trace(np.array([tick_time(k, dt) for k in range(1, n_ticks + 1)]), positions,
                  np.array(speed_rows, dtype=float).reshape(n_ticks, n_agents), camera)
    done = [c for c in completed_at if c is not None]
    metrics = SimMetrics(
        camera_duty_cycle=int(camera.sum()) / (n_ticks * n_agents),
        exclusion_violations=violations,
        tracking_loss_events=losses,
        rewards_collected=rewards,
        mean_completion_time=round(sum(done) / len(done), 9) if done else None,
        crowding=crowding_metrics(positions, markers, cfg.crowd_radius, cfg.contact_radius),
        near_collision_count=sum(1 for e in events if e.kind is EventKind.NEAR_COLLISION),
        agents_completed=len(done),
        search_misses=misses,
    )
    flags = [f for d in devices for f in d.tracking_flags]
    return SimResult(events, metrics, trace, flags)
