"""Finite-dimensional quantum information measures."""
