"""Spectral analysis of regular two-point boundary value problems."""

__version__ = "0.1.0"
