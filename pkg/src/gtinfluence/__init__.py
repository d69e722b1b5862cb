"""Influence spread under the general threshold model."""

__version__ = "0.1.0"
