"""Shared infrastructure for the cavity photon source simulator."""

__version__ = "0.1.0"
