"""Lensless polarization imaging: forward simulation and physics-based reconstruction."""

__version__ = "0.1.0"
