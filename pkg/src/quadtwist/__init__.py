"""Exact verification toolkit for a Galois-twisted Schwarz action on affine 4-space."""

__version__ = "0.1.0"
