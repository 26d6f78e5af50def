"""Numerical and exact toolkit for mean values of long Dirichlet polynomials
with shifted divisor coefficients."""

__version__ = "0.1.0"
