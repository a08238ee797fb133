"""Extending multilinear maps defined on multilinear varieties over prime fields."""

__version__ = "0.1.0"
