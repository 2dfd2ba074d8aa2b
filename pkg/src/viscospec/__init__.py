"""Fourier-Galerkin solver and verification tools for incompressible
viscoelastic flow with a transported deformation gradient."""

__version__ = "0.1.0"
