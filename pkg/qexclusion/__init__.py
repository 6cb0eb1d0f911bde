"""Conclusive single-state exclusion for group-orbit quantum states."""

__version__ = "0.1.0"
