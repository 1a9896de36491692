"""Locally adaptive confidence bands for probability densities."""

__version__ = "0.1.0"
