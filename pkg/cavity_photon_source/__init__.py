"""Desk-scale simulator of a fountain-loaded cavity-QED single-photon source."""

__version__ = "0.1.0"
