"""Spin squeezing of Rydberg-dressed clock atoms in fully and partially filled lattices."""

__version__ = "0.1.0"
