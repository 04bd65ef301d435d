"""Entanglement witness hierarchy: operator classification, best separable
approximation, and the finer order on entangled states."""

__version__ = "0.1.0"
