"""Fluctuation algebras of free-fermion lattice states: Wick calculus, symplectic forms, centers and scattering."""

__version__ = "0.1.0"

from .car_wick import GaugeMonomial, GaugePolynomial, quasifree_expectation
from .ccr_weyl import SymplecticSpace, WeylCovariance, build_complex_structure, canonical_basis
from .errors import FluctuonError
from .fluctuation import (
    FluctuationGenerator,
    FluctuationGram,
    build_gram,
    center_kernel,
    covariance,
    symplectic_form,
    time_invariance_drift,
)
from .one_particle import MomentumGrid, OneParticleFunction, OneParticleModel, inner_product
from .scattering import ScatteringProbe, scattering_integral

__all__ = [
    "GaugeMonomial",
    "GaugePolynomial",
    "quasifree_expectation",
    "SymplecticSpace",
    "WeylCovariance",
    "build_complex_structure",
    "canonical_basis",
    "FluctuonError",
    "FluctuationGenerator",
    "FluctuationGram",
    "build_gram",
    "center_kernel",
    "covariance",
    "symplectic_form",
    "time_invariance_drift",
    "MomentumGrid",
    "OneParticleFunction",
    "OneParticleModel",
    "inner_product",
    "ScatteringProbe",
    "scattering_integral",
]
