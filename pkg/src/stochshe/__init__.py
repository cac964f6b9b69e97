"""Spectral simulation and verification toolkit for the 2D nonlocal stochastic Swift–Hohenberg equation."""

__version__ = "0.1.0"
