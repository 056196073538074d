"""Beacons: loop-level prediction and proactive co-scheduling at desk scale."""

__version__ = "0.1.0"
