"""Mutual information landscapes over correlation domains."""

__version__ = "0.1.0"
