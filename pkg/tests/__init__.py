"""Test suite for the cavity photon source simulator."""
