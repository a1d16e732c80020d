"""hct: finite-dimensional Hilbert complexes and discrete de Rham complexes with mixed boundary conditions."""

__version__ = "0.1.0"
