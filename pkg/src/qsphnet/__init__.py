"""Hybrid quantum-classical kernel networks for smoothed particle hydrodynamics."""

__version__ = "0.1.0"
