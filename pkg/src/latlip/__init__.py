"""Lattice Lipschitz superposition operators on finite measure spaces."""

__version__ = "0.1.0"
