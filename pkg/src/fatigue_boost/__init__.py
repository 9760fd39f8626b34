"""Fatigue recognition from 68-point facial landmarks with a second-order boosted tree classifier."""

__version__ = "0.1.0"
