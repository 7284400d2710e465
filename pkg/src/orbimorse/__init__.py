"""Equivariant Morse theory on global-quotient orbifolds."""

__version__ = "0.1.0"
