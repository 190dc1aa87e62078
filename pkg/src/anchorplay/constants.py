"""Shared physical constants and non-normative defaults."""

GRAVITY = 9.81  # m/s^2
DEFAULT_SAMPLE_RATE = 100.0  # Hz

# Float slack used when comparing accumulated tick times against thresholds.
TIME_EPS = 1e-9
