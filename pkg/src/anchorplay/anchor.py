"""Anchor phase: floor-marker search, tracking initialization and rewards."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol, Sequence

from .locomotion import PoseEstimate


class ContractViolation(AssertionError):
    """A caller broke a gating precondition (e.g. reward outside an anchor visit)."""


@dataclass(frozen=True)
class AnchorMarker:
    id: str
    position: tuple[float, float]
    detect_radius: float = 0.5

    def __post_init__(self):
        if not self.detect_radius > 0:
            raise ValueError(f"marker {self.id}: detect_radius must be > 0")


@dataclass(frozen=True)
class TrackingModel:
    """Per-attempt loss probability ``clamp(k * variance, 0, p_max)`` while moving."""

    k: float = 0.02
    p_max: float = 0.9

    def validate(self) -> None:
        if not (self.k >= 0 and 0 <= self.p_max <= 1):
            raise ValueError("tracking model needs k >= 0 and 0 <= p_max <= 1")

    def loss_probability(self, motion_variance: float) -> float:
        return min(max(self.k * motion_variance, 0.0), self.p_max)


@dataclass(frozen=True)
class TrackingOutcome:
    success: bool
    init_ticks: int
    loss_event: bool


@dataclass(frozen=True)
class RewardEvent:
    agent: int
    marker: str
    t: float


class UniformSource(Protocol):
    def random(self) -> float: ...


STATIONARY_INIT = TrackingOutcome(success=True, init_ticks=1, loss_event=False)


def localized_search(pose: PoseEstimate, markers: Sequence[AnchorMarker],
                     search_radius: float) -> Optional[str]:
    if not search_radius > 0:
        raise ValueError("search_radius must be > 0")
    x, y = pose.position
    best = None
    for m in markers:
        d = math.hypot(m.position[0] - x, m.position[1] - y)
        if d <= min(search_radius, m.detect_radius):
            key = (d, m.id)
            if best is None or key < best:
                best = key
    return None if best is None else best[1]


def simulate_tracking_init(motion_variance: float, stationary: bool, rng: UniformSource,
                           model: TrackingModel = TrackingModel()) -> TrackingOutcome:
    if motion_variance < 0:
        raise ValueError("motion_variance must be >= 0")
    if stationary:
        return STATIONARY_INIT
    lost = rng.random() < model.loss_probability(motion_variance)
    if lost:
        return TrackingOutcome(success=False, init_ticks=0, loss_event=True)
    return TrackingOutcome(success=True, init_ticks=1, loss_event=False)


class RewardLedger:
    """Per-agent visit ledger: at most one reward per marker per visit."""

    def __init__(self, agent: int):
        self.agent = agent
        self._rewarded: set[str] = set()

    def instantiate_reward(self, marker: str, t: float, anchored: bool = True) -> Optional[RewardEvent]:
        if not anchored:
            raise ContractViolation(f"agent {self.agent}: reward for {marker} requested outside an anchored visit")
        if marker in self._rewarded:
            return None
        self._rewarded.add(marker)
        return RewardEvent(self.agent, marker, t)

    def end_visit(self) -> None:
        self._rewarded.clear()

    @property
    def in_visit(self) -> bool:
        return bool(self._rewarded)
