"""Planar compressible MHD with far-field vacuum, in Lagrangian mass coordinates."""

__version__ = "0.1.0"
