"""Oscillatory integrals with D-type phases and Randol maximal functions."""

__version__ = "0.1.0"
