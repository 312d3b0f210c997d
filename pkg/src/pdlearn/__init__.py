"""Persistence diagrams, persistence images and sparse linear models with inverse analysis."""

__version__ = "0.1.0"
