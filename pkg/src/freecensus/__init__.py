"""Aut(F_r) orbit census of cyclic words in free groups."""

__version__ = "0.1.0"
