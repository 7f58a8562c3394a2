"""
Finite-dimensional CCR (Weyl) algebra data.

A real vector space carries the antisymmetric form ``sigma(f, g) = f^T S g``.
Weyl operators obey ``W(f) W(g) = exp(-i sigma(f, g) / 2) W(f + g)`` and a
quasifree state is ``omega(W(f)) = exp(-f^T A f)``; positivity of that state
is the matrix inequality ``A - (i/4) S >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import CondensateError, ContractError, DegeneracyError, ParameterError, StateError

__all__ = [
    "SymplecticSpace",
    "ComplexStructure",
    "WeylCovariance",
    "Bogoliubov",
    "canonical_form",
    "build_complex_structure",
    "canonical_basis",
    "split_degenerate",
    "weyl_product",
    "quasifree_weyl_expectation",
    "kms_weyl_covariance",
    "bogoliubov",
    "hamiltonian_flow",
]


def canonical_form(n_pairs: int) -> np.ndarray:
    """Block-diagonal ``[[0, 1], [-1, 0]]`` cells."""
    return np.kron(np.eye(n_pairs), np.array([[0.0, 1.0], [-1.0, 0.0]]))


@dataclass(frozen=True, eq=False)
class SymplecticSpace:
    sigma: np.ndarray
    rank_tol: float = 1e-9

    def __post_init__(self):
        S = np.array(self.sigma, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] == 0:
            raise ContractError(f"sigma must be a non-empty square matrix, got shape {S.shape}")
        if np.abs(S + S.T).max() > 1e-12 * max(1.0, np.abs(S).max()):
            raise ContractError("sigma must be antisymmetric")
        S = 0.5 * (S - S.T)
        S.setflags(write=False)
        object.__setattr__(self, "sigma", S)

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]

    @property
    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.sigma, compute_uv=False)

    @property
    def rank(self) -> int:
        return int(np.sum(self.singular_values >= self.rank_tol))

    @property
    def nondegenerate(self) -> bool:
        return self.rank == self.dim

    def form(self, f, g) -> float:
        return float(np.asarray(f) @ self.sigma @ np.asarray(g))


@dataclass(frozen=True, eq=False)
class ComplexStructure:
    J: np.ndarray
    space: SymplecticSpace

    def inner(self, f, g) -> complex:
        """``<f|g> = sigma(f, J g) + i sigma(f, g)``, complex-linear in ``g`` w.r.t. ``J``."""
        S = self.space.sigma
        return complex(f @ S @ self.J @ g + 1j * (f @ S @ g))

    @property
    def metric(self) -> np.ndarray:
        """Real part ``S J`` of the induced inner product; must be symmetric positive definite."""
        return self.space.sigma @ self.J

    def residuals(self) -> dict:
        S, J = self.space.sigma, self.J
        n = S.shape[0]
        g = self.metric
        return {
            "square": float(np.abs(J @ J + np.eye(n)).max()),
            # sigma(Jf, g) + sigma(f, Jg) = f^T (J^T S + S J) g
            "compatibility": float(np.abs(J.T @ S + S @ J).max()),
            "hermiticity": float(np.abs(g - g.T).max()),
            "min_eig": float(np.linalg.eigvalsh(0.5 * (g + g.T)).min()),
        }


def build_complex_structure(space: SymplecticSpace) -> ComplexStructure:
    """
    ``J = -U`` where ``S = U P`` is the polar factorisation of the form matrix.

    ``U`` commutes with ``S`` and squares to ``-1``; the sign makes
    ``sigma(f, J f) = f^T |S| f`` positive.
    """
    if space.dim % 2 == 1:
        raise DegeneracyError("odd-dimensional spaces admit no complex structure; split off the kernel first")
    if not space.nondegenerate:
        raise DegeneracyError("sigma is singular; use split_degenerate and restrict to the nondegenerate part")
    U, _ = sla.polar(space.sigma)
    return ComplexStructure(-U, space)


def split_degenerate(space: SymplecticSpace, tol: float = 1e-9):
    """
    Orthonormal bases ``(K, R)`` of the kernel of sigma and of its complement.

    Kernel directions are the condensate modes; ``R R^T S R R^T`` reproduces ``S``.
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    _, s, vh = np.linalg.svd(space.sigma)
    null = s < tol
    K = vh[null].T
    R = vh[~null].T
    return K, R


def canonical_basis(space: SymplecticSpace, tol: float = 1e-9):
    """
    Canonical pairs with ``sigma(chi_i, eta_j) = delta_ij`` and vanishing
    ``sigma(chi, chi)``, ``sigma(eta, eta)``.

    Returns ``(chi, eta, kernel)`` as lists of vectors; the number of pairs is
    ``rank / 2``.  Built from the real Schur form of the restriction to the
    nondegenerate part, so each pair spans one invariant plane of ``S``.
    """
    K, R = split_degenerate(space, tol)
    chi, eta = [], []
    if R.shape[1]:
        Sr = R.T @ space.sigma @ R
        T, Z = sla.schur(Sr, output="real")
        i = 0
        while i < T.shape[0]:
            if i + 1 < T.shape[0] and abs(T[i + 1, i]) > 0:
                lam = T[i, i + 1]
                q1, q2 = R @ Z[:, i], R @ Z[:, i + 1]
                if lam < 0:
                    q1, q2, lam = q2, q1, -lam
                chi.append(q1 / np.sqrt(lam))
                eta.append(q2 / np.sqrt(lam))
                i += 2
            else:
                raise DegeneracyError("unpaired real Schur block in the nondegenerate part")
    return chi, eta, [K[:, k] for k in range(K.shape[1])]


def weyl_product(f, g, space: SymplecticSpace):
    """``W(f) W(g) = phase * W(f + g)``; returns ``(phase, f + g)``."""
    f, g = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
    return complex(np.exp(-0.5j * space.form(f, g))), f + g


@dataclass(frozen=True, eq=False)
class WeylCovariance:
    """
    Real symmetric ``A`` with ``omega(W(f)) = exp(-f^T A f)``.

    ``occupations`` and ``condensate_modes`` are filled by the thermal
    constructor; other covariances leave them empty.
    """

    A: np.ndarray
    space: SymplecticSpace
    occupations: np.ndarray = field(default=None)
    condensate_modes: np.ndarray = field(default=None)

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.shape != self.space.sigma.shape:
            raise ContractError("covariance and sigma shapes differ")
        if np.abs(A - A.T).max() > 1e-12 * max(1.0, np.abs(A).max()):
            raise ContractError("covariance must be symmetric")
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        if self.positivity_min_eig < -1e-10:
            raise StateError(f"A - (i/4) sigma has eigenvalue {self.positivity_min_eig:.3e}")

    @property
    def positivity_min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.A - 0.25j * self.space.sigma).min())


def quasifree_weyl_expectation(f, cov: WeylCovariance, condensate=None, tol: float = 1e-9) -> float:
    """
    ``exp(-f^T A f)``.

    If ``condensate`` is given, ``f`` is split into its component ``f0`` in
    the kernel of sigma and the rest; the kernel factor is the caller's
    freely chosen ``condensate(f0)`` and ``A`` is applied to the rest only.
    """
    f = np.asarray(f, dtype=float)
    if condensate is None:
        return float(np.exp(-f @ cov.A @ f))
    K, _ = split_degenerate(cov.space, tol)
    f0 = K @ (K.T @ f)
    fr = f - f0
    return float(np.exp(-fr @ cov.A @ fr) * condensate(f0))


def kms_weyl_covariance(h, beta: float, z: float, condensate_tol: float = 1e-6) -> WeylCovariance:
    """
    Thermal covariance of free bosonic modes with energies ``h``.

    Each mode is one canonical cell with ``A = (1/4)(1 + z e^{-beta h}) / (1 - z e^{-beta h})``,
    i.e. ``(1 + 2 n) / 4`` for the Bose occupation ``n = z e^{-beta h} / (1 - z e^{-beta h})``.
    Modes with ``1 - z e^{-beta h} < condensate_tol`` are flagged as condensate.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if not z > 0:
        raise ParameterError(f"fugacity must be positive, got {z}")
    x = z * np.exp(-beta * h)
    if np.any(x >= 1.0):
        raise CondensateError("z e^{-beta h} >= 1: the mode is on the condensate path; "
                              "treat it as a kernel direction via split_degenerate")
    if z >= 1.0:
        raise ParameterError("fugacity must satisfy z < 1 away from the condensate path")
    occ = x / (1.0 - x)
    a = 0.25 * (1.0 + x) / (1.0 - x)
    space = SymplecticSpace(canonical_form(len(h)))
    return WeylCovariance(np.diag(np.repeat(a, 2)), space, occ, (1.0 - x) < condensate_tol)


@dataclass(frozen=True, eq=False)
class Bogoliubov:
    """Automorphism ``W(f) -> W(T f)`` of the Weyl algebra."""

    T: np.ndarray
    space: SymplecticSpace

    def act(self, f) -> np.ndarray:
        return self.T @ np.asarray(f)

    def on_covariance(self, cov: WeylCovariance) -> WeylCovariance:
        """State transported by the automorphism: ``A -> T^T A T``."""
        return WeylCovariance(self.T.T @ cov.A @ self.T, cov.space)


def bogoliubov(T, space: SymplecticSpace, tol: float = 1e-10) -> Bogoliubov:
    T = np.asarray(T, dtype=float)
    if T.shape != space.sigma.shape:
        raise ContractError("T and sigma shapes differ")
    dev = float(np.abs(T.T @ space.sigma @ T - space.sigma).max())
    if dev > tol:
        raise ContractError(f"T is not symplectic: max |T^T S T - S| = {dev:.3e}")
    return Bogoliubov(T, space)


def hamiltonian_flow(space: SymplecticSpace, H, t: float, tol: float = 1e-9) -> np.ndarray:
    """
    Symplectic flow ``exp(t S_r^{-1} H_r)`` on the nondegenerate part, identity on the kernel.

    ``H`` is a symmetric matrix on the full space; only its compression to the
    nondegenerate part is used.
    """
    K, R = split_degenerate(space, tol)
    Sr = R.T @ space.sigma @ R
    Hr = R.T @ np.asarray(H, dtype=float) @ R
    gen = np.linalg.solve(Sr, 0.5 * (Hr + Hr.T))
    return R @ sla.expm(t * gen) @ R.T + K @ K.T
