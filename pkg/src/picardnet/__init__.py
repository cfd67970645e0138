"""Explicit network constructions for multilevel Picard approximations of semilinear heat equations."""

__version__ = "0.1.0"
