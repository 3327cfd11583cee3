"""Elliptical raster fire-growth simulation and derivative-free calibration of
rate-of-spread adjustment factors."""

__version__ = "0.1.0"
