"""Lyapunov spectra and Hodge-bundle degrees of hypergeometric local systems."""

__version__ = "0.1.0"
