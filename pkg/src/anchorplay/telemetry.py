"""IMU sample types, trace file I/O and deterministic gait synthesis.

Trace files are line-delimited ``t,ax,ay,az,gx,gy,gz`` records. A header line
is optional on input and always written on output; ``#`` starts a comment.
Values are written with 10 significant digits, so a write/load round trip is
exact to that precision.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, NamedTuple, Sequence, Union

import numpy as np

from .constants import DEFAULT_SAMPLE_RATE, GRAVITY

HEADER = "t,ax,ay,az,gx,gy,gz"
FLOAT_FORMAT = "{:.10g}"


class TraceFormatError(ValueError):
    """Raised for malformed or non-monotone IMU trace input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message} at line {line}" if line is not None else message)


class ImuSample(NamedTuple):
    """One accelerometer + gyroscope reading (device frame, gravity included).

    Construction is unchecked so the simulator can build one per tick; data
    from outside goes through :func:`make_sample` or :func:`load_trace`.
    """

    t: float
    accel: tuple[float, float, float]
    gyro: tuple[float, float, float]

    @property
    def accel_norm(self) -> float:
        ax, ay, az = self.accel
        return math.sqrt(ax * ax + ay * ay + az * az)


def make_sample(t: float, accel: Sequence[float], gyro: Sequence[float]) -> ImuSample:
    """Build a sample, enforcing 3-vectors, finite values and t >= 0."""
    if len(accel) != 3 or len(gyro) != 3:
        raise ValueError("accel and gyro must be 3-vectors")
    values = (t, *accel, *gyro)
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"non-finite IMU value in sample at t={t}")
    if t < 0:
        raise ValueError(f"negative timestamp {t}")
    return ImuSample(float(t), tuple(float(v) for v in accel), tuple(float(v) for v in gyro))


@dataclass(frozen=True)
class GaitProfile:
    step_frequency: float = 2.0
    accel_amplitude: float = 3.0
    heading_rate_noise: float = 0.0
    noise_std: float = 0.0
    sample_rate: float = DEFAULT_SAMPLE_RATE

    def validate(self) -> None:
        fields = (self.step_frequency, self.accel_amplitude, self.heading_rate_noise,
                  self.noise_std, self.sample_rate)
        if not all(math.isfinite(v) and v >= 0 for v in fields):
            raise ValueError(f"gait profile fields must be finite and non-negative: {self}")
        if self.step_frequency <= 0:
            raise ValueError("step_frequency must be positive")
        if self.sample_rate < 4 * self.step_frequency:
            raise ValueError(
                f"sample_rate {self.sample_rate} Hz is below 4x step_frequency {self.step_frequency} Hz"
            )


@dataclass(frozen=True)
class Walking:
    profile: GaitProfile
    duration: float


@dataclass(frozen=True)
class Standing:
    duration: float
    noise_std: float = 0.0
    sample_rate: float = DEFAULT_SAMPLE_RATE


TraceSegmentSpec = Union[Walking, Standing]


def gait_vertical_accel(amplitude: float, phase: float) -> float:
    """Vertical specific force for a gait cycle ``phase`` (in cycles).

    A cycle starts in the trough and peaks (heel strike) at half a cycle, so
    steps land strictly inside a segment that begins at phase 0.
    """
    return GRAVITY - amplitude * math.cos(2.0 * math.pi * phase)


def synthesize_trace(segments: Sequence[TraceSegmentSpec], seed: int) -> list[ImuSample]:
    if not segments:
        raise ValueError("at least one segment is required")
    rng = np.random.default_rng(seed)
    out: list[ImuSample] = []
    t0 = 0.0
    for seg in segments:
        if seg.duration <= 0:
            raise ValueError(f"segment duration must be positive: {seg}")
        if isinstance(seg, Walking):
            seg.profile.validate()
            rate = seg.profile.sample_rate
            noise = seg.profile.noise_std
        elif isinstance(seg, Standing):
            if not (seg.noise_std >= 0 and seg.sample_rate > 0):
                raise ValueError(f"invalid standing segment: {seg}")
            rate = seg.sample_rate
            noise = seg.noise_std
        else:
            raise TypeError(f"unknown segment type {type(seg).__name__}")

        n = int(round(seg.duration * rate))
        local_t = np.arange(n) / rate
        accel = np.zeros((n, 3))
        accel[:, 2] = GRAVITY
        gyro = np.zeros((n, 3))
        if isinstance(seg, Walking):
            p = seg.profile
            accel[:, 2] = GRAVITY - p.accel_amplitude * np.cos(2.0 * np.pi * p.step_frequency * local_t)
            gyro[:, 2] = rng.standard_normal(n) * p.heading_rate_noise
        accel += rng.standard_normal((n, 3)) * noise

        times = t0 + local_t
        for i in range(n):
            out.append(ImuSample(float(times[i]), tuple(accel[i].tolist()), tuple(gyro[i].tolist())))
        t0 += n / rate
    return out


def _parse_line(line: str, lineno: int) -> ImuSample | None:
    text = line.split("#", 1)[0].strip()
    if not text:
        return None
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 7:
        raise TraceFormatError(f"expected 7 fields, got {len(parts)}", lineno)
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        if lineno == 1 or parts[0].lower() == "t":
            return None  # header
        raise TraceFormatError("malformed number", lineno) from None
    if not all(math.isfinite(v) for v in vals):
        raise TraceFormatError("non-finite value", lineno)
    if vals[0] < 0:
        raise TraceFormatError("negative timestamp", lineno)
    return ImuSample(vals[0], (vals[1], vals[2], vals[3]), (vals[4], vals[5], vals[6]))


def load_trace(source: Union[bytes, str, IO[bytes], IO[str]]) -> list[ImuSample]:
    """Parse a trace from bytes, text, or an open (binary or text) stream."""
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    samples: list[ImuSample] = []
    for lineno, line in enumerate(io.StringIO(text), 1):
        sample = _parse_line(line, lineno)
        if sample is None:
            continue
        if samples and sample.t <= samples[-1].t:
            raise TraceFormatError("non-monotone timestamp", lineno)
        samples.append(sample)
    return samples


def format_trace(samples: Iterable[ImuSample]) -> str:
    lines = [HEADER]
    for s in samples:
        lines.append(",".join(FLOAT_FORMAT.format(v) for v in (s.t, *s.accel, *s.gyro)))
    return "\n".join(lines) + "\n"


def write_trace(samples: Iterable[ImuSample], dest: IO[str]) -> None:
    dest.write(format_trace(samples))
