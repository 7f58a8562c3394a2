"""
Brute-force Fock-space representation of the CAR algebra over momentum modes.

Modes are the flattened ``(k, alpha)`` pairs of a :class:`MomentumGrid`, ordered
``m = k * s + alpha`` and Jordan-Wigner encoded with mode 0 as the most
significant tensor factor.  Single-mode basis is ``(|0>, |1>)`` so that
``a = [[0, 1], [0, 0]]``.  The quasifree density is diagonal in this basis,
``rho_state = kron_m diag(1 - rho_m, rho_m)``.

Everything here is deliberately independent of :mod:`car_wick`: operator
words are multiplied as matrices and traced against the density.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp

from .car_wick import GaugeMonomial, GaugePolynomial
from .errors import CapacityError, DimensionError
from .one_particle import MomentumGrid, OneParticleFunction, OneParticleModel

MAX_MODES = 12

_ANNIHILATE = sp.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
_PARITY = sp.csr_matrix(np.diag([1.0, -1.0]))
_EYE2 = sp.identity(2, format="csr")


def _kron_all(factors):
    return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)


@dataclass(frozen=True, eq=False)
class FockRep:
    """Mode annihilators, occupation-basis density (diagonal) and mode energies."""

    grid: MomentumGrid
    annihilators: tuple
    density_diag: np.ndarray
    energies: np.ndarray

    @property
    def n_modes(self) -> int:
        return len(self.annihilators)

    @property
    def dim(self) -> int:
        return 2 ** self.n_modes

    @property
    def density(self) -> sp.csr_matrix:
        return sp.diags(self.density_diag, format="csr")

    def creation(self, m: int):
        return self.annihilators[m].conj().T.tocsr()

    def smeared_annihilator(self, f: OneParticleFunction):
        """``a(f) = sum_k conj(f_k / sqrt(L)) a_k``."""
        if f.grid != self.grid:
            raise DimensionError("function and representation live on different grids")
        c = f.flat / np.sqrt(self.grid.L)
        out = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for m, a in enumerate(self.annihilators):
            if c[m] != 0:
                out = out + np.conj(c[m]) * a
        return out

    def smeared_creator(self, f: OneParticleFunction):
        return self.smeared_annihilator(f).conj().T.tocsr()


def build_rep(model: OneParticleModel) -> FockRep:
    grid = model.grid
    n = grid.n_modes
    if n > MAX_MODES:
        raise CapacityError(f"{n} modes exceed the oracle capacity of {MAX_MODES}")
    ops = []
    for m in range(n):
        factors = [_PARITY] * m + [_ANNIHILATE] + [_EYE2] * (n - m - 1)
        ops.append(_kron_all(factors).astype(complex).tocsr())
    rho = model.rho.reshape(-1)
    diag = reduce(np.kron, [np.array([1.0 - r, r]) for r in rho])
    return FockRep(grid, tuple(ops), diag, model.dispersion.reshape(-1).copy())


def monomial_matrix(term: GaugeMonomial, rep: FockRep):
    mats = [rep.smeared_creator(f) for f in term.creators] + [rep.smeared_annihilator(f) for f in term.annihilators]
    eye = sp.identity(rep.dim, dtype=complex, format="csr")
    return term.coefficient * reduce(lambda a, b: a @ b, mats, eye)


def polynomial_matrix(P, rep: FockRep):
    if isinstance(P, GaugeMonomial):
        P = GaugePolynomial(rep.grid, [P])
    if P.grid != rep.grid:
        raise DimensionError("polynomial and representation live on different grids")
    out = sp.csr_matrix((rep.dim, rep.dim), dtype=complex)
    for t in P:
        out = out + monomial_matrix(t, rep)
    return out


def trace_with_density(matrix, rep: FockRep) -> complex:
    return complex(np.sum(rep.density_diag * matrix.diagonal()))


def oracle_expectation(P, rep: FockRep) -> complex:
    """``tr(density * matrix(P))``."""
    return trace_with_density(polynomial_matrix(P, rep), rep)


def hamiltonian_diagonal(rep: FockRep) -> np.ndarray:
    """Diagonal of ``H = sum_m h_m a*_m a_m`` assembled from the mode operators."""
    H = sp.csr_matrix((rep.dim, rep.dim), dtype=complex)
    for m, a in enumerate(rep.annihilators):
        H = H + rep.energies[m] * (a.conj().T @ a)
    off = H - sp.diags(H.diagonal())
    assert abs(off).sum() == 0.0, "number operators must be diagonal in the occupation basis"
    return H.diagonal().real


def heisenberg(matrix, rep: FockRep, t: float):
    """``exp(iHt) X exp(-iHt)`` for the quasifree Hamiltonian."""
    phase = np.exp(1j * hamiltonian_diagonal(rep) * t)
    U = sp.diags(phase, format="csr")
    return U @ matrix @ U.conj()


def oracle_evolve(P, rep: FockRep, model: OneParticleModel, t: float) -> complex:
    """Expectation of the Heisenberg-evolved matrix of ``P``."""
    if model.grid != rep.grid:
        raise DimensionError("model and representation live on different grids")
    return trace_with_density(heisenberg(polynomial_matrix(P, rep), rep, t), rep)


def anticommutator_residual(rep: FockRep) -> float:
    """Largest entry of ``{a_j, a_k}`` and ``{a_j, a*_k} - delta_jk``."""
    eye = sp.identity(rep.dim, format="csr")
    worst = 0.0
    for j, aj in enumerate(rep.annihilators):
        for k, ak in enumerate(rep.annihilators):
            r1 = aj @ ak + ak @ aj
            akd = rep.creation(k)
            r2 = aj @ akd + akd @ aj - (eye if j == k else 0 * eye)
            for r in (r1, r2):
                if r.nnz:
                    worst = max(worst, float(abs(r).max()))
    return worst


def momentum_diagonal(rep: FockRep) -> np.ndarray:
    """Diagonal of the lattice momentum ``P = sum_m p_m a*_m a_m``."""
    p = np.repeat(rep.grid.points, rep.grid.spin_dim)
    return reduce(np.add.outer, [np.array([0.0, pm]) for pm in p]).reshape(-1)


def oracle_translate(matrix, rep: FockRep, x: int):
    """``U_x X U_x*`` with ``U_x = exp(i x P)``, which sends ``a(f)`` to ``a(translate(f, x))``."""
    U = sp.diags(np.exp(1j * x * momentum_diagonal(rep)), format="csr")
    return U @ matrix @ U.conj()


def _translation_traces(P, Q, rep: FockRep):
    A = polynomial_matrix(P, rep)
    B = polynomial_matrix(Q, rep)
    prods, comms = [], []
    for x in range(rep.grid.L):
        Bx = oracle_translate(B, rep, x)
        ab, ba = trace_with_density(A @ Bx, rep), trace_with_density(Bx @ A, rep)
        prods.append(ab)
        comms.append(ab - ba)
    return A, B, np.array(prods), np.array(comms)


def oracle_symplectic(P, Q, rep: FockRep) -> complex:
    """``i sum_x tr(density [P, tau_x Q])`` from dense matrices."""
    *_, comms = _translation_traces(P, Q, rep)
    return complex(1j * comms.sum())


def oracle_covariance(P, Q, rep: FockRep) -> float:
    """``Re sum_x [tr(density P tau_x Q) - tr(density P) tr(density Q)]``."""
    A, B, prods, _ = _translation_traces(P, Q, rep)
    mean = trace_with_density(A, rep) * trace_with_density(B, rep)
    return float((prods - mean).sum().real)
