"""Periodic-orbit laboratory for low-dimensional smooth maps."""

__version__ = "0.1.0"
