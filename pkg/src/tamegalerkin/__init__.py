"""Galerkin-projection surjection scheme on tame Fourier scales."""

__version__ = "0.1.0"
