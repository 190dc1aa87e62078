"""Locomotion-gated AR interaction pipeline and classroom simulator."""

__version__ = "0.1.0"
