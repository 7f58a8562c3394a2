"""
Fluctuation algebra of a product state on a chain of ``n``-level sites.

For single-site generators the symplectic form reduces to
``sigma(m, k) = i tr(rho0 [m, k])``; for two-site generators the translation
sum only picks up the shifts where the supports overlap.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import gcd

import numpy as np

from .ccr_weyl import SymplecticSpace, canonical_basis
from .errors import CapacityError, ContractError, NoWitnessError, PreconditionError

__all__ = [
    "SiteModel",
    "gell_mann_basis",
    "site_symplectic",
    "site_gram",
    "condensate_basis",
    "maximality_witness",
    "quasiperiodicity_report",
    "range_two_gram",
]


def _is_hermitian(m, tol=1e-12):
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.abs(m - m.conj().T).max() <= tol


@dataclass(frozen=True, eq=False)
class SiteModel:
    """Single-site state ``rho0`` and diagonal Hamiltonian ``h = sum_j h_j e_jj``."""

    rho0: np.ndarray
    h_diag: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho0, dtype=complex)
        h = np.asarray(self.h_diag, dtype=float).reshape(-1)
        if not _is_hermitian(rho, 1e-13):
            raise ContractError("rho0 must be hermitian")
        if abs(np.trace(rho) - 1.0) > 1e-13:
            raise ContractError("rho0 must have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-13:
            raise ContractError("rho0 must be positive semidefinite")
        if h.shape[0] != rho.shape[0]:
            raise ContractError("h_diag length must equal the site dimension")
        object.__setattr__(self, "rho0", rho)
        object.__setattr__(self, "h_diag", h)

    @property
    def n(self) -> int:
        return self.rho0.shape[0]

    @property
    def is_diagonal(self) -> bool:
        off = self.rho0 - np.diag(np.diag(self.rho0))
        return float(np.abs(off).max()) <= 1e-13

    @property
    def hamiltonian(self) -> np.ndarray:
        return np.diag(self.h_diag).astype(complex)

    @classmethod
    def tracial(cls, n: int, h_diag=None) -> "SiteModel":
        return cls(np.eye(n) / n, np.zeros(n) if h_diag is None else h_diag)


def gell_mann_basis(n: int) -> list:
    """Generalised Gell-Mann matrices (``n^2 - 1`` traceless hermitians, ``tr(l_a l_b) = 2 delta_ab``)."""
    basis = []
    for j in range(n):
        for k in range(j + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[j, k] = m[k, j] = 1.0
            basis.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[j, k], m[k, j] = -1j, 1j
            basis.append(m)
    for d in range(1, n):
        m = np.zeros((n, n), dtype=complex)
        m[np.arange(d), np.arange(d)] = 1.0
        m[d, d] = -d
        basis.append(m * np.sqrt(2.0 / (d * (d + 1))))
    return basis


def site_symplectic(m, k, site: SiteModel) -> float:
    """``i tr(rho0 [m, k])``."""
    m, k = np.asarray(m, dtype=complex), np.asarray(k, dtype=complex)
    if not (_is_hermitian(m) and _is_hermitian(k)):
        raise ContractError("site generators must be hermitian")
    val = 1j * np.trace(site.rho0 @ (m @ k - k @ m))
    return float(val.real)


def site_gram(site: SiteModel, basis=None) -> np.ndarray:
    basis = gell_mann_basis(site.n) if basis is None else basis
    n = len(basis)
    S = np.zeros((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            S[a, b] = site_symplectic(basis[a], basis[b], site)
            S[b, a] = -S[a, b]
    return S


def condensate_basis(site: SiteModel, tol: float = 1e-9, exploratory: bool = False) -> list:
    """
    Hermitian matrices spanning the kernel of the single-site symplectic form.

    For ``rho0`` diagonal in the Hamiltonian basis the diagonal traceless
    matrices always belong to it; they commute with ``h`` and therefore do
    not move under the dynamics.
    """
    if not site.is_diagonal and not exploratory:
        raise PreconditionError("rho0 is not diagonal in the Hamiltonian basis (pass exploratory=True)")
    basis = gell_mann_basis(site.n)
    S = site_gram(site, basis)
    _, s, vh = np.linalg.svd(S)
    out = []
    for v, sv in zip(vh, s):
        if sv < tol:
            out.append(sum(c * b for c, b in zip(v, basis)))
    return out


def maximality_witness(A, site: SiteModel, threshold: float = 1e-12, n_phases: int = 16):
    """
    Partner ``C = c e_jk + conj(c) e_kj`` with ``sigma(A, C) > 0``.

    Every off-diagonal position of ``A`` is tried with ``c`` in ``(1, i)``
    followed by an ``n_phases``-point phase grid; the strongest pairing wins
    (first in row-major and candidate order on ties).  The sign of ``c`` is
    chosen so that the returned pairing is positive.  Returns
    ``(C, c, (j, k), sigma)``.
    """
    A = np.asarray(A, dtype=complex)
    if not _is_hermitian(A):
        raise ContractError("A must be hermitian")
    n = A.shape[0]
    scale = max(1.0, float(np.abs(A).max()))
    positions = [(j, k) for j in range(n) for k in range(j + 1, n) if abs(A[j, k]) > 1e-12 * scale]
    if not positions:
        raise NoWitnessError("A is diagonal, hence central: no witness exists")
    candidates = [1.0, 1j] + [np.exp(2j * np.pi * q / n_phases) for q in range(n_phases)]
    best = None
    for j, k in positions:
        for c in candidates:
            C = np.zeros((n, n), dtype=complex)
            C[j, k], C[k, j] = c, np.conj(c)
            val = site_symplectic(A, C, site)
            if best is None or abs(val) > abs(best[3]):
                best = (C, c, (j, k), val)
    C, c, jk, val = best
    if abs(val) <= threshold * scale:
        raise NoWitnessError("no off-diagonal partner has a nonvanishing commutator expectation")
    if val < 0:
        C, c, val = 0.0 - C, 0.0 - c, -val
    return C, c, jk, val


def _commensurate_period(freqs, tol=1e-9, max_den=1000):
    freqs = [abs(f) for f in freqs if abs(f) > tol]
    if not freqs:
        return 0.0
    base = freqs[0]
    fracs = []
    for f in freqs:
        r = Fraction(f / base).limit_denominator(max_den)
        if abs(float(r) - f / base) > tol:
            return None
        fracs.append(r)
    den = reduce(lambda a, b: a * b // gcd(a, b), (r.denominator for r in fracs))
    nums = [int(r * den) for r in fracs]
    g = reduce(gcd, nums)
    # all frequencies are integer multiples of base * g / den
    return 2 * np.pi * den / (base * g)


def quasiperiodicity_report(A, site: SiteModel, t_grid, recurrence_tol: float = 0.1) -> dict:
    """
    Track ``A(t) = e^{iht} A e^{-iht}`` on ``t_grid``.

    Reports the Frobenius distances to ``A(0)``, the grid times that are
    local minima of the distance below ``recurrence_tol * |A|`` (near
    recurrences), and the exact period when the Bohr frequencies
    ``h_j - h_k`` of the nonzero entries are commensurate (``None`` if not,
    ``0.0`` if ``A`` does not move).
    """
    A = np.asarray(A, dtype=complex)
    t_grid = np.asarray(list(t_grid), dtype=float)
    h = site.h_diag
    gaps = h[:, None] - h[None, :]
    dist = np.array([np.linalg.norm(A * np.exp(1j * gaps * t) - A) for t in t_grid])
    norm = max(np.linalg.norm(A), 1e-300)
    near = []
    for i in range(1, len(t_grid) - 1):
        if dist[i] <= dist[i - 1] and dist[i] <= dist[i + 1] and dist[i] < recurrence_tol * norm and t_grid[i] > 0:
            near.append(float(t_grid[i]))
    mask = np.abs(A) > 1e-12 * norm
    period = _commensurate_period(gaps[mask])
    return {
        "times": t_grid.tolist(),
        "distances": dist.tolist(),
        "recurrence_times": near,
        "period": period,
        "max_distance": float(dist.max()) if len(dist) else 0.0,
    }


def _two_site_basis(n):
    one = np.eye(n, dtype=complex)
    gm = [one] + gell_mann_basis(n)
    out, labels = [], []
    for a, x in enumerate(gm):
        for b, y in enumerate(gm):
            if a == 0 and b == 0:
                continue
            out.append(np.kron(x, y))
            labels.append((a, b))
    return out, labels


def _embed(op2, offset, n, sites=3):
    left = np.eye(n ** offset)
    right = np.eye(n ** (sites - 2 - offset))
    return np.kron(np.kron(left, op2), right)


def range_two_gram(site: SiteModel, tol: float = 1e-9) -> dict:
    """
    Symplectic gram over two-site generators ``x (x) y`` (identity excluded).

    ``sigma(A, B) = i sum_x omega([A, tau_x B])`` evaluated on three sites
    where the shifts ``x in {-1, 0, 1}`` are the only ones with overlapping
    supports in a product state.
    """
    n = site.n
    if n > 3:
        raise CapacityError("range_two_gram supports n <= 3")
    basis, labels = _two_site_basis(n)
    state = reduce(np.kron, [site.rho0] * 3)
    at0 = [_embed(b, 0, n) for b in basis]
    at1 = [_embed(b, 1, n) for b in basis]
    m = len(basis)
    S = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            c = 0.0
            for a, b in ((at0[i], at0[j]), (at0[i], at1[j]), (at1[i], at0[j])):
                c += np.trace(state @ (a @ b - b @ a))
            S[i, j] = float((1j * c).real)
            S[j, i] = -S[i, j]
    space = SymplecticSpace(S)
    chi, eta, kernel = canonical_basis(space, tol)
    diag_labels = [k for k, (a, b) in enumerate(labels) if _is_diag_label(a, n) and _is_diag_label(b, n)]
    return {
        "dimension": m,
        "sigma": S,
        "rank": space.rank,
        "pair_count": len(chi),
        "kernel_dim": len(kernel),
        "kernel": kernel,
        "diagonal_generators": diag_labels,
        "labels": labels,
    }


def _is_diag_label(a, n):
    # index 0 is the identity, diagonal Gell-Mann matrices are the last n - 1
    return a == 0 or a > n * (n - 1)
