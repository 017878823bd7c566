"""Harmonic measure on the integer lattice: exact solvers, constructions and experiments."""
from .lattice import SiteSet, LatticePath, boundary, clusters, complement_decomposition
from .solver import harmonic_measure_infinity, removal_price, min_removal_price

__version__ = "0.1.0"
