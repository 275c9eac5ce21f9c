"""Exact verification toolkit for the Terwilliger algebra of the Johnson geometry incidence graph."""

__version__ = "0.1.0"
