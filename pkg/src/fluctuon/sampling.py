"""Seeded random one-particle data and observables for tests and experiments."""

from __future__ import annotations

import numpy as np

from .car_wick import GaugeMonomial, GaugePolynomial
from .one_particle import MomentumGrid, OneParticleFunction, OneParticleModel


def make_rng(seed) -> np.random.Generator:
    """PCG64 stream; the same seed gives the same draws on every platform."""
    return np.random.Generator(np.random.PCG64(seed))


def random_function(grid: MomentumGrid, rng, support=None) -> OneParticleFunction:
    vals = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    if support is not None:
        mask = np.zeros(grid.shape, dtype=bool)
        mask[np.asarray(support)] = True
        vals = np.where(mask, vals, 0.0)
    return OneParticleFunction(grid, vals)


def random_model(grid: MomentumGrid, rng, pure: bool = False, dispersion: str = "random") -> OneParticleModel:
    if pure:
        rho = rng.integers(0, 2, size=grid.shape).astype(float)
    else:
        rho = rng.uniform(0.05, 0.95, size=grid.shape)
    if dispersion == "random":
        h = rng.normal(size=grid.shape)
    elif dispersion == "cos":
        h = np.repeat(-np.cos(grid.points)[:, None], grid.spin_dim, axis=1)
    else:
        raise ValueError(f"unknown dispersion kind {dispersion!r}")
    return OneParticleModel(grid, rho, h)


def random_monomial(grid, rng, n_cre: int, n_ann: int, coefficient=None) -> GaugeMonomial:
    if coefficient is None:
        coefficient = complex(rng.normal(), rng.normal())
    return GaugeMonomial([random_function(grid, rng) for _ in range(n_cre)],
                         [random_function(grid, rng) for _ in range(n_ann)], coefficient)


def random_polynomial(grid, rng, max_half_degree: int = 2, n_terms: int = 2) -> GaugePolynomial:
    terms = []
    for _ in range(n_terms):
        n = int(rng.integers(0, max_half_degree + 1))
        terms.append(random_monomial(grid, rng, n, n))
    return GaugePolynomial(grid, terms)


def random_self_adjoint(grid, rng, half_degree: int, n_terms: int = 1) -> GaugePolynomial:
    """``M + M*`` summed over ``n_terms`` random monomials of degree (n, n)."""
    P = GaugePolynomial(grid, [random_monomial(grid, rng, half_degree, half_degree) for _ in range(n_terms)])
    return P + P.adjoint()


def random_quadratic(grid, rng) -> GaugePolynomial:
    """``c a*(f) a(g) + conj(c) a*(g) a(f)``."""
    return random_self_adjoint(grid, rng, 1)
