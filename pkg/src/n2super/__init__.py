"""Exact formal calculus of N=2 superconformal transformations."""

__version__ = "0.1.0"
