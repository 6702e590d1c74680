"""Simulation laboratory and exact oracle for pointer strategies on fair-coin walks."""

__version__ = "0.1.0"
