"""Numerical laboratory for time, position and resonance observables."""

__version__ = "0.1.0"
