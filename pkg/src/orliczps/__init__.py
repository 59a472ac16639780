"""Numerical affine Orlicz Polya-Szego toolkit."""

__version__ = "0.1.0"
