"""Numerical tolerances shared across the package."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    containment: float = 1e-9
    distance: float = 1e-7
    restriction: float = 1e-9
    symmetry: float = 1e-12
    eigen_cache: float = 1e-8


TOL = Tolerances()
