"""Boundary-law solvers and finite-volume verifiers for the SOS model on Cayley trees."""

__version__ = "0.1.0"
