"""Independent reference computations used as test oracles.

Nothing here imports the package under test except for plain data types.
"""

from __future__ import annotations

import math

G = 9.81


def gait_grid(freq: float, amp: float, rate: float, duration: float) -> list[float]:
    n = int(round(duration * rate))
    return [G - amp * math.cos(2.0 * math.pi * freq * k / rate) for k in range(n)]


def count_grid_peaks(values: list[float], threshold: float) -> int:
    """Interior local maxima above ``threshold`` on the sample grid."""
    return sum(1 for k in range(1, len(values) - 1)
               if values[k - 1] < values[k] >= values[k + 1] and values[k] > threshold)


def brute_cadence(steps: list[float], now: float, window: float) -> float:
    return sum(1 for s in steps if now - window < s <= now) / window


def scalar_pdr(x: float, y: float, heading: float, yaw: float, n_steps: int, stride: float):
    heading = heading + yaw
    for _ in range(n_steps):
        x = x + stride * math.cos(heading)
        y = y + stride * math.sin(heading)
    return x, y


def population_variance(xs: list[float]) -> float:
    m = sum(xs) / len(xs)
    return sum((v - m) ** 2 for v in xs) / len(xs)


def brute_crowding(positions, markers, crowd_radius: float, contact_radius: float):
    """(max concurrent, pushes) by explicit loops over a (T, N, 2) nested list."""
    best = 0
    pushes = 0
    for frame in positions:
        for mx, my in markers:
            c = sum(1 for px, py in frame if (px - mx) ** 2 + (py - my) ** 2 <= crowd_radius ** 2)
            best = max(best, c)
        for i in range(len(frame)):
            for j in range(i + 1, len(frame)):
                dx = frame[i][0] - frame[j][0]
                dy = frame[i][1] - frame[j][1]
                if dx * dx + dy * dy <= contact_radius ** 2:
                    pushes += 1
    return best, pushes


def trapezoid(values: list[float], dt: float) -> float:
    return sum((values[k] + values[k + 1]) * 0.5 * dt for k in range(len(values) - 1))
