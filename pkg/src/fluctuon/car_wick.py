"""
Gauge-invariant polynomials in fermionic creation/annihilation operators and
their quasifree expectation values.

A monomial ``c * a*(c_1) ... a*(c_n) a(d_1) ... a(d_m)`` stores the creator
functions and the annihilator functions in the order they are written.  The
smeared operators follow the one-particle convention of :mod:`one_particle`:
``a*(f)`` is linear and ``a(f)`` antilinear in ``f``, with
``{a(g), a*(f)} = <g|f>``.

For a gauge-invariant quasifree state with symbol ``rho``

    omega(a*(c_1) .. a*(c_n) a(d_1) .. a(d_n)) = det M,
    M_ij = omega(a*(c_i) a(d_{n+1-j})) = <d_{n+1-j}| rho c_i>,

i.e. the determinant of the two-point matrix with the annihilators read from
the right, so that ``omega(a*(f) a(g)) = <g|rho f>``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, ShapeError
from .one_particle import MomentumGrid, OneParticleFunction, OneParticleModel, evolve, inner_product, translate

__all__ = [
    "GaugeMonomial",
    "GaugePolynomial",
    "DEFAULT_MAX_DEGREE",
    "quasifree_expectation",
    "commutator_expectation",
    "adjoint",
    "multiply",
    "normal_order_pattern",
    "word_expectation",
    "two_point_matrix",
]

DEFAULT_MAX_DEGREE = 8


def _sort_with_sign(funcs):
    """Sort anticommuting factors by key; returns (sign, sorted) or (0, None) on repetition."""
    funcs = list(funcs)
    keys = [f.key for f in funcs]
    if len(set(keys)) != len(keys):
        return 0, None
    order = sorted(range(len(funcs)), key=keys.__getitem__)
    # parity of the permutation by cycle counting
    seen = [False] * len(order)
    sign = 1
    for i in range(len(order)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign, tuple(funcs[i] for i in order)


class GaugeMonomial:
    """``coefficient * a*(creators[0]) ... a*(creators[-1]) a(annihilators[0]) ... a(annihilators[-1])``."""

    __slots__ = ("creators", "annihilators", "coefficient")

    def __init__(self, creators: Sequence[OneParticleFunction] = (),
                 annihilators: Sequence[OneParticleFunction] = (), coefficient: complex = 1.0):
        self.creators = tuple(creators)
        self.annihilators = tuple(annihilators)
        self.coefficient = complex(coefficient)
        grids = {f.grid for f in self.creators + self.annihilators}
        if len(grids) > 1:
            raise DimensionError("all functions of a monomial must share one grid")

    @property
    def degree(self) -> tuple[int, int]:
        return len(self.creators), len(self.annihilators)

    @property
    def total_degree(self) -> int:
        return len(self.creators) + len(self.annihilators)

    @property
    def balanced(self) -> bool:
        return len(self.creators) == len(self.annihilators)

    @property
    def key(self):
        return tuple(f.key for f in self.creators), tuple(f.key for f in self.annihilators)

    def adjoint(self) -> "GaugeMonomial":
        return GaugeMonomial(self.annihilators[::-1], self.creators[::-1], np.conj(self.coefficient))

    def map_functions(self, fn) -> "GaugeMonomial":
        return GaugeMonomial([fn(f) for f in self.creators], [fn(f) for f in self.annihilators], self.coefficient)

    def with_coefficient(self, c) -> "GaugeMonomial":
        return GaugeMonomial(self.creators, self.annihilators, c)

    def __repr__(self):
        return f"GaugeMonomial(degree={self.degree}, coefficient={self.coefficient:.6g})"


class GaugePolynomial:
    """
    Complex-linear combination of normal-ordered monomials in canonical form.

    Creators and annihilators inside each term are sorted by content hash
    (with the fermionic sign), identical terms are merged and vanishing ones
    dropped, so two polynomials that differ only by reordering compare equal.
    """

    def __init__(self, grid: MomentumGrid, terms: Iterable[GaugeMonomial] = ()):
        self.grid = grid
        merged: dict = {}
        for term in terms:
            for f in term.creators + term.annihilators:
                if f.grid != grid:
                    raise DimensionError("term function lives on a different grid")
            s1, cre = _sort_with_sign(term.creators)
            s2, ann = _sort_with_sign(term.annihilators)
            if s1 * s2 == 0 or term.coefficient == 0:
                continue
            mono = GaugeMonomial(cre, ann, s1 * s2 * term.coefficient)
            k = mono.key
            if k in merged:
                merged[k] = merged[k].with_coefficient(merged[k].coefficient + mono.coefficient)
            else:
                merged[k] = mono
        self._terms = {k: m for k, m in merged.items() if m.coefficient != 0}

    # -- constructors ---------------------------------------------------
    @classmethod
    def identity(cls, grid: MomentumGrid, coefficient: complex = 1.0) -> "GaugePolynomial":
        return cls(grid, [GaugeMonomial((), (), coefficient)])

    @classmethod
    def monomial(cls, creators, annihilators, coefficient=1.0, grid=None) -> "GaugePolynomial":
        funcs = list(creators) + list(annihilators)
        grid = grid if grid is not None else funcs[0].grid
        return cls(grid, [GaugeMonomial(creators, annihilators, coefficient)])

    @classmethod
    def quadratic(cls, f: OneParticleFunction, g: OneParticleFunction, coefficient=1.0) -> "GaugePolynomial":
        """``a*(f) a(g)``."""
        return cls.monomial([f], [g], coefficient)

    @classmethod
    def hermitian_quadratic(cls, f: OneParticleFunction, g: OneParticleFunction) -> "GaugePolynomial":
        """``a*(f) a(g) + a*(g) a(f)``."""
        return cls(f.grid, [GaugeMonomial([f], [g]), GaugeMonomial([g], [f])])

    # -- container protocol ------------------------------------------------
    @property
    def terms(self) -> list[GaugeMonomial]:
        return list(self._terms.values())

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms.values())

    @property
    def degree(self) -> int:
        """Largest total degree among the terms."""
        return max((t.total_degree for t in self), default=0)

    @property
    def is_quadratic(self) -> bool:
        """All terms of degree (1, 1) or scalar."""
        return all(t.degree in ((1, 1), (0, 0)) for t in self)

    @property
    def is_balanced(self) -> bool:
        return all(t.balanced for t in self)

    def coefficient_of(self, key) -> complex:
        t = self._terms.get(key)
        return 0.0 if t is None else t.coefficient

    # -- algebra -------------------------------------------------------------
    def _combine(self, other, sign):
        if other.grid != self.grid:
            raise DimensionError("grid mismatch in polynomial arithmetic")
        return GaugePolynomial(self.grid, self.terms + [t.with_coefficient(sign * t.coefficient) for t in other])

    def __add__(self, other):
        if np.isscalar(other):
            other = GaugePolynomial.identity(self.grid, other)
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            other = GaugePolynomial.identity(self.grid, other)
        return self._combine(other, -1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c) -> "GaugePolynomial":
        return GaugePolynomial(self.grid, [t.with_coefficient(c * t.coefficient) for t in self])

    def __mul__(self, other):
        if isinstance(other, GaugePolynomial):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def adjoint(self) -> "GaugePolynomial":
        return GaugePolynomial(self.grid, [t.adjoint() for t in self])

    def is_self_adjoint(self, tol: float = 1e-12) -> bool:
        adj = self.adjoint()
        for k in set(self._terms) | set(adj._terms):
            a, b = self.coefficient_of(k), adj.coefficient_of(k)
            if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
                return False
        return True

    def map_functions(self, fn) -> "GaugePolynomial":
        return GaugePolynomial(self.grid, [t.map_functions(fn) for t in self])

    def translate(self, x: int) -> "GaugePolynomial":
        return self.map_functions(lambda f: translate(f, x))

    def evolve(self, model: OneParticleModel, t: float) -> "GaugePolynomial":
        return self.map_functions(lambda f: evolve(f, model, t))

    def allclose(self, other: "GaugePolynomial", tol: float = 1e-12) -> bool:
        for k in set(self._terms) | set(other._terms):
            if abs(self.coefficient_of(k) - other.coefficient_of(k)) > tol:
                return False
        return True

    def __repr__(self):
        return f"GaugePolynomial(L={self.grid.L}, n_terms={len(self)}, degree={self.degree})"


def adjoint(P: GaugePolynomial) -> GaugePolynomial:
    return P.adjoint()


# ---------------------------------------------------------------------------
# normal ordering
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def normal_order_pattern(kinds: tuple) -> tuple:
    """
    Normal-ordering recipe for a word of creators (True) and annihilators (False).

    Returns a tuple of ``(sign, contractions, creators, annihilators)`` where
    positions refer to the input word, ``contractions`` are ``(ann_pos,
    cre_pos)`` pairs each contributing ``<word[ann]|word[cre]>``, and the
    remaining factors are listed in normal order.  Depends only on the kind
    sequence, so it is cached and reused for every numerical realisation.
    """
    terms = [(1, (), (), ())]
    for pos, is_creator in enumerate(kinds):
        new = []
        for sign, con, cre, ann in terms:
            if not is_creator:
                new.append((sign, con, cre, ann + (pos,)))
                continue
            m = len(ann)
            for j in range(m):
                s = sign if (m - 1 - j) % 2 == 0 else -sign
                new.append((s, con + ((ann[j], pos),), cre, ann[:j] + ann[j + 1:]))
            new.append((sign if m % 2 == 0 else -sign, con, cre + (pos,), ann))
        terms = new
    return tuple(terms)


def multiply(P: GaugePolynomial, Q: GaugePolynomial, max_degree: int = DEFAULT_MAX_DEGREE) -> GaugePolynomial:
    """Normal-ordered product ``P Q`` in canonical form."""
    if P.grid != Q.grid:
        raise DimensionError("grid mismatch in multiply")
    if P.degree + Q.degree > max_degree:
        raise CapacityError(f"product degree {P.degree + Q.degree} exceeds the cap {max_degree}")
    out = []
    for tp in P:
        for tq in Q:
            word = tp.creators + tp.annihilators + tq.creators + tq.annihilators
            kinds = (True,) * len(tp.creators) + (False,) * len(tp.annihilators) \
                + (True,) * len(tq.creators) + (False,) * len(tq.annihilators)
            base = tp.coefficient * tq.coefficient
            for sign, con, cre, ann in normal_order_pattern(kinds):
                c = base * sign
                for a, b in con:
                    c *= inner_product(word[a], word[b])
                out.append(GaugeMonomial([word[i] for i in cre], [word[i] for i in ann], c))
    return GaugePolynomial(P.grid, out)


# ---------------------------------------------------------------------------
# expectation values
# ---------------------------------------------------------------------------

def two_point_matrix(C: np.ndarray, D: np.ndarray, rho: np.ndarray, L: int) -> np.ndarray:
    """
    Wick matrix ``M[..., i, j] = <D_{n-1-j}| rho C_i>`` for stacked flat functions.

    ``C`` and ``D`` have shape ``(..., n, N)``; ``rho`` has shape ``(N,)``.
    """
    return np.einsum("...in,n,...jn->...ij", C, rho, np.conj(D[..., ::-1, :])) / L


def _det(M):
    n = M.shape[-1]
    if n == 0:
        return np.ones(M.shape[:-2], dtype=complex)
    if n == 1:
        return M[..., 0, 0]
    if n == 2:
        return M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    return np.linalg.det(M)


def _check_model(P, model):
    if P.grid != model.grid:
        raise DimensionError("polynomial and model live on different grids")


def _monomial_expectation(term: GaugeMonomial, rho_flat, L) -> complex:
    if not term.balanced:
        return 0.0
    if not term.creators:
        return term.coefficient
    C = np.stack([f.flat for f in term.creators])
    D = np.stack([f.flat for f in term.annihilators])
    return term.coefficient * complex(_det(two_point_matrix(C, D, rho_flat, L)))


def quasifree_expectation(P, model: OneParticleModel) -> complex:
    """Expectation of a polynomial (or a single monomial) in the quasifree state ``model``."""
    if isinstance(P, GaugeMonomial):
        P = GaugePolynomial(model.grid, [P])
    _check_model(P, model)
    rho = model.rho.reshape(-1)
    return complex(sum((_monomial_expectation(t, rho, model.grid.L) for t in P), 0.0))


def word_expectation(kinds: tuple, V: np.ndarray, rho: np.ndarray, L: int) -> np.ndarray:
    """
    Batched expectation of an arbitrary operator word.

    ``V`` has shape ``(B, len(kinds), N)`` holding the flat function of each
    factor for ``B`` independent realisations (e.g. a sweep over
    translations).  Returns the ``(B,)`` array of expectations, obtained by
    normal ordering followed by the Wick determinant.
    """
    n_cre = sum(kinds)
    if 2 * n_cre != len(kinds):
        return np.zeros(V.shape[0], dtype=complex)
    G = np.einsum("bin,bjn->bij", np.conj(V), V) / L
    R = np.einsum("bin,n,bjn->bij", V, rho, np.conj(V)) / L
    total = np.zeros(V.shape[0], dtype=complex)
    for sign, con, cre, ann in normal_order_pattern(tuple(kinds)):
        val = np.full(V.shape[0], float(sign), dtype=complex)
        for a, c in con:
            val = val * G[:, a, c]
        if cre:
            M = R[:, list(cre)][:, :, list(ann[::-1])]
            val = val * _det(M)
        total += val
    return total


def _substitution_sum(f1_flat, f2_flat, C, D, rho, L):
    """
    ``omega([a*(f1) a(f2), P])`` for stacked monomials ``P`` with creators ``C``
    and annihilators ``D`` of shape ``(B, n, N)``, unit coefficient.

    The commutator with an even quadratic is a derivation: each creator
    ``a*(c_i)`` is replaced by ``<f2|c_i> a*(f1)`` and each annihilator
    ``a(d_j)`` by ``-<d_j|f1> a(f2)``.
    """
    B, n, _ = C.shape
    total = np.zeros(B, dtype=complex)
    for i in range(n):
        weight = np.einsum("n,bn->b", np.conj(f2_flat), C[:, i]) / L
        Ci = C.copy()
        Ci[:, i] = f1_flat
        total += weight * _det(two_point_matrix(Ci, D, rho, L))
    for j in range(n):
        weight = np.einsum("bn,n->b", np.conj(D[:, j]), f1_flat) / L
        Dj = D.copy()
        Dj[:, j] = f2_flat
        total -= weight * _det(two_point_matrix(C, Dj, rho, L))
    return total


def commutator_expectation(Q, P, model: OneParticleModel) -> complex:
    """
    ``omega([Q, P])`` for a quadratic ``Q = a*(f1) a(f2)`` by the elimination
    (derivation) expansion rather than by forming the products.

    ``Q`` may be a polynomial whose terms are all of degree (1, 1) or scalar;
    ``P`` may be a monomial or a polynomial.
    """
    if isinstance(Q, GaugeMonomial):
        Q = GaugePolynomial(model.grid, [Q])
    if isinstance(P, GaugeMonomial):
        P = GaugePolynomial(model.grid, [P])
    _check_model(Q, model)
    _check_model(P, model)
    if not Q.is_quadratic:
        raise ShapeError("commutator_expectation needs Q built from a*(f) a(g) terms")
    rho = model.rho.reshape(-1)
    L = model.grid.L
    total = 0.0 + 0.0j
    for q in Q:
        if q.degree == (0, 0):
            continue
        f1, f2 = q.creators[0].flat, q.annihilators[0].flat
        for p in P:
            if not p.balanced or not p.creators:
                continue
            C = np.stack([f.flat for f in p.creators])[None]
            D = np.stack([f.flat for f in p.annihilators])[None]
            total += q.coefficient * p.coefficient * _substitution_sum(f1, f2, C, D, rho, L)[0]
    return complex(total)
