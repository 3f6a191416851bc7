"""Numerical total-positivity checks for premium weight functions."""

__version__ = "0.1.0"
