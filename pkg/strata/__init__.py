"""Hierarchical coded computation: layered MDS codes, finishing-time analysis and simulation."""

__version__ = "1.0.0"
