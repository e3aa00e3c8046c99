"""Regularization-wise double descent in linear models and two-layer networks."""

__version__ = "0.1.0"
