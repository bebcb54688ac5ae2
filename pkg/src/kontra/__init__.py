"""Kontsevich star products for Lie-Poisson structures and trace verification."""

__version__ = "0.1.0"
