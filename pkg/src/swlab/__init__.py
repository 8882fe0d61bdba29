"""Numerical laboratory for the random walk wetting model on a strip."""

__version__ = "0.1.0"
