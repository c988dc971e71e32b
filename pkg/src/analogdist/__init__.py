"""Analog distance statistics: nearest-neighbour distance laws on attractors,
local dimension estimation, and catalog diagnostics."""

__version__ = "0.1.0"
