"""Spatial audio cue parameters for transit guidance.

Cues are parameters, not rendered sound: a bearing relative to the current
heading, the remaining distance, a repetition tempo that rises as the target
gets closer, and a phase telling the audio layer what to say.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .locomotion import Anchored, MotionState, PoseEstimate, normalize_angle


class CuePhase(enum.Enum):
    GUIDE = "Guide"
    ARRIVED = "Arrived"
    LOOK_PROMPT = "LookPrompt"
    MUTED = "Muted"


@dataclass(frozen=True)
class GuidanceConfig:
    arrival_radius: float = 0.5
    tempo_min: float = 1.0
    tempo_max: float = 4.0
    tempo_range: float = 6.0

    def validate(self) -> None:
        if not self.arrival_radius > 0:
            raise ValueError("guidance.arrival_radius must be > 0")
        if not 0 < self.tempo_min < self.tempo_max:
            raise ValueError("guidance requires 0 < tempo_min < tempo_max")
        if not self.tempo_range > 0:
            raise ValueError("guidance.tempo_range must be > 0")


@dataclass(frozen=True)
class AudioCue:
    azimuth: float
    distance: float
    tempo: float
    phase: CuePhase


def tempo_for_distance(distance: float, config: GuidanceConfig) -> float:
    frac = min(distance, config.tempo_range) / config.tempo_range
    return config.tempo_max + (config.tempo_min - config.tempo_max) * frac


def compute_cue(pose: PoseEstimate, target: tuple[float, float], state: MotionState,
                config: GuidanceConfig = GuidanceConfig()) -> AudioCue:
    dx = target[0] - pose.position[0]
    dy = target[1] - pose.position[1]
    distance = math.hypot(dx, dy)
    azimuth = normalize_angle(math.atan2(dy, dx) - pose.heading)
    if isinstance(state, Anchored):
        phase = CuePhase.LOOK_PROMPT
    elif distance <= config.arrival_radius:
        phase = CuePhase.ARRIVED
    else:
        phase = CuePhase.GUIDE
    return AudioCue(azimuth, distance, tempo_for_distance(distance, config), phase)


def cue_schedule(cue: AudioCue, now: float, last_emit: float) -> bool:
    """Whether a cue is due, given the time of the previous emission."""
    if cue.phase is CuePhase.MUTED:
        return False
    return now - last_emit >= 1.0 / cue.tempo - 1e-9
