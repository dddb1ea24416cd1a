"""Germs of holomorphic diffeomorphisms fixing the origin: jets, words,
pseudogroup dynamics and conformal perturbations."""

__version__ = "0.1.0"
