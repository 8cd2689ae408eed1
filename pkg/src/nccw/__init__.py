"""Toolkit for 1-dimensional NCCW complexes, their homomorphisms and diagonals."""

__version__ = "0.1.0"
