"""Batch figure rendering for mirrorlangevin experiment outputs."""

__version__ = "0.1.0"
