"""
Fluctuation algebra of a translation-invariant quasifree state.

For self-adjoint gauge-invariant observables ``A, B`` on the ``L``-site torus

    sigma(A, B) = i sum_x omega([A, tau_x B])
    w(A, B)     = Re sum_x (omega(A tau_x B) - omega(A) omega(B))

with ``tau_x`` the lattice translation.  Both sums are exact: the matrix
``w - (i/2) sigma`` is the Gram matrix of the centred block averages
``L^{-1/2} sum_x tau_x A`` in the state, so it is positive semidefinite at
every finite ``L``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .car_wick import (
    DEFAULT_MAX_DEGREE,
    GaugePolynomial,
    _substitution_sum,
    quasifree_expectation,
    word_expectation,
)
from .errors import CapacityError, ContractError, DimensionError, NumericError, ParameterError, StateError
from .one_particle import OneParticleFunction, OneParticleModel
from .sampling import make_rng, random_self_adjoint

__all__ = [
    "FluctuationGenerator",
    "FluctuationGram",
    "symplectic_form",
    "covariance",
    "fluctuation_state",
    "build_gram",
    "center_kernel",
    "time_invariance_drift",
    "variance_closed_form",
    "spin_center_enlargement",
    "SpinCenterReport",
]


@dataclass(frozen=True, eq=False)
class FluctuationGenerator:
    """A self-adjoint observable ``A`` paired with the state whose fluctuations it generates."""

    observable: GaugePolynomial
    model: OneParticleModel

    def __post_init__(self):
        if self.observable.grid != self.model.grid:
            raise DimensionError("observable and model live on different grids")
        if not self.observable.is_self_adjoint():
            raise ContractError("fluctuation generators must be self-adjoint")
        mean = quasifree_expectation(self.observable, self.model)
        if abs(mean.imag) > 1e-12 * max(1.0, abs(mean)):
            raise ContractError(f"omega(A) is not real: {mean}")

    @property
    def mean(self) -> float:
        return quasifree_expectation(self.observable, self.model).real

    def evolved(self, t: float) -> "FluctuationGenerator":
        return FluctuationGenerator(self.observable.evolve(self.model, t), self.model)

    def __sub__(self, other):
        _same_model(self, other)
        return FluctuationGenerator(self.observable - other.observable, self.model)

    def __add__(self, other):
        _same_model(self, other)
        return FluctuationGenerator(self.observable + other.observable, self.model)


def _same_model(A, B):
    if A.model is not B.model:
        raise DimensionError("fluctuation generators must share one model")


def _phases(model: OneParticleModel) -> np.ndarray:
    """``exp(i p_k x)`` on the flattened mode axis, shape ``(L, N)``."""
    grid = model.grid
    x = np.arange(grid.L)
    ph = np.exp(1j * np.outer(x, grid.points))
    return np.repeat(ph, grid.spin_dim, axis=1)


def _stack(funcs, n_modes):
    if not funcs:
        return np.zeros((0, n_modes), dtype=complex)
    return np.stack([f.flat for f in funcs])


def translation_sum(P: GaugePolynomial, Q: GaugePolynomial, model: OneParticleModel,
                    max_degree: int = DEFAULT_MAX_DEGREE) -> complex:
    """``sum_x omega(P tau_x Q)``, vectorised over the translation ``x``."""
    if P.degree + Q.degree > max_degree:
        raise CapacityError(f"product degree {P.degree + Q.degree} exceeds the cap {max_degree}")
    N = model.grid.n_modes
    rho = model.rho.reshape(-1)
    ph = _phases(model)
    total = 0.0 + 0.0j
    for tp in P:
        Vp = _stack(tp.creators + tp.annihilators, N)
        for tq in Q:
            kinds = (True,) * len(tp.creators) + (False,) * len(tp.annihilators) \
                + (True,) * len(tq.creators) + (False,) * len(tq.annihilators)
            if 2 * sum(kinds) != len(kinds):
                continue
            Vq = _stack(tq.creators + tq.annihilators, N)
            V = np.concatenate([np.broadcast_to(Vp, (ph.shape[0],) + Vp.shape),
                                ph[:, None, :] * Vq[None]], axis=1)
            vals = word_expectation(kinds, V, rho, model.grid.L)
            total += tp.coefficient * tq.coefficient * vals.sum()
    return complex(total)


def _quadratic_commutator_sum(Q: GaugePolynomial, P: GaugePolynomial, model: OneParticleModel) -> complex:
    """``sum_x omega([Q, tau_x P])`` for quadratic ``Q`` by the derivation expansion."""
    N = model.grid.n_modes
    rho = model.rho.reshape(-1)
    ph = _phases(model)
    total = 0.0 + 0.0j
    for q in Q:
        if q.degree == (0, 0):
            continue
        f1, f2 = q.creators[0].flat, q.annihilators[0].flat
        for p in P:
            if not p.balanced or not p.creators:
                continue
            C = ph[:, None, :] * _stack(p.creators, N)[None]
            D = ph[:, None, :] * _stack(p.annihilators, N)[None]
            total += q.coefficient * p.coefficient * _substitution_sum(f1, f2, C, D, rho, model.grid.L).sum()
    return complex(total)


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise NumericError(f"{what} has an imaginary part {value.imag:.3e}", achieved=abs(value.imag))
    return float(value.real)


def symplectic_form(A: FluctuationGenerator, B: FluctuationGenerator,
                    max_degree: int = DEFAULT_MAX_DEGREE) -> float:
    """``i sum_x omega([A, tau_x B])``."""
    _same_model(A, B)
    a, b, model = A.observable, B.observable, A.model
    if a.is_quadratic:
        comm = _quadratic_commutator_sum(a, b, model)
    elif b.is_quadratic:
        comm = -_quadratic_commutator_sum(b, a, model)
    else:
        # sum_x omega(tau_x B A) = sum_x omega(B tau_{-x} A) on the torus
        comm = translation_sum(a, b, model, max_degree) - translation_sum(b, a, model, max_degree)
    return _real(1j * comm, "sigma")


def covariance(A: FluctuationGenerator, B: FluctuationGenerator,
               max_degree: int = DEFAULT_MAX_DEGREE) -> float:
    """``Re sum_x [omega(A tau_x B) - omega(A) omega(B)]``."""
    _same_model(A, B)
    model = A.model
    s = translation_sum(A.observable, B.observable, model, max_degree)
    return float((s - model.grid.L * A.mean * B.mean).real)


def fluctuation_state(A: FluctuationGenerator, alpha: float) -> float:
    """Characteristic function ``exp(-alpha^2 w(A))`` of the fluctuation state."""
    return float(np.exp(-alpha**2 * covariance(A, A)))


def variance_closed_form(f: OneParticleFunction, model: OneParticleModel) -> float:
    """
    Closed form of ``w(a*(f) a(f))``.

    With ``n_k = sum_a |f_ka|^2`` and ``r_k = sum_a rho_ka |f_ka|^2`` this is
    ``(1/L) sum_k (n_k r_k - r_k^2)``, reducing to
    ``(1/L) sum_k |f_k|^4 rho_k (1 - rho_k)`` for one spin component.
    """
    a2 = np.abs(f.values) ** 2
    n = a2.sum(axis=1)
    r = (model.rho * a2).sum(axis=1)
    return float(np.sum(n * r - r * r) / model.grid.L)


def _workers():
    try:
        return max(1, int(os.environ.get("FLUCTUON_THREADS", "1")))
    except ValueError:
        return 1


@dataclass
class FluctuationGram:
    generators: list
    sigma: np.ndarray
    covariance: np.ndarray
    positivity_min_eig: float = field(init=False)

    def __post_init__(self):
        self.positivity_min_eig = float(np.linalg.eigvalsh(self.covariance + 0.5j * self.sigma).min())

    @property
    def size(self) -> int:
        return self.sigma.shape[0]

    def check(self, tol: float = 1e-10):
        if np.abs(self.sigma + self.sigma.T).max() > 1e-12 * max(1.0, np.abs(self.sigma).max()):
            raise ContractError("sigma is not antisymmetric")
        if np.abs(self.covariance - self.covariance.T).max() > 1e-12 * max(1.0, np.abs(self.covariance).max()):
            raise ContractError("covariance is not symmetric")
        if self.positivity_min_eig < -tol:
            raise StateError(f"cov + (i/2) sigma has eigenvalue {self.positivity_min_eig:.3e}")
        return self

    def rows(self):
        """``(i, j, sigma, covariance)`` in row-major order."""
        n = self.size
        return [(i, j, float(self.sigma[i, j]), float(self.covariance[i, j])) for i in range(n) for j in range(n)]


def build_gram(generators, workers: int | None = None, validate: bool = True,
               max_degree: int = DEFAULT_MAX_DEGREE) -> FluctuationGram:
    """Assemble ``sigma`` and ``w`` over all generator pairs."""
    generators = list(generators)
    if not generators:
        raise ParameterError("build_gram needs at least one generator")
    for g in generators[1:]:
        _same_model(generators[0], g)
    n = len(generators)
    pairs = [(i, j) for i in range(n) for j in range(i, n)]

    def cell(ij):
        i, j = ij
        s = 0.0 if i == j else symplectic_form(generators[i], generators[j], max_degree)
        return s, covariance(generators[i], generators[j], max_degree)

    workers = workers or _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, pairs))
    else:
        results = [cell(p) for p in pairs]
    sigma = np.zeros((n, n))
    cov = np.zeros((n, n))
    for (i, j), (s, c) in zip(pairs, results):
        if i != j:
            sigma[i, j], sigma[j, i] = s, -s
        cov[i, j] = cov[j, i] = c
    gram = FluctuationGram(generators, sigma, cov)
    return gram.check() if validate else gram


def center_kernel(gram: FluctuationGram, tol: float = 1e-9) -> list:
    """
    Orthonormal coefficient vectors spanning the null space of ``sigma``.

    A vector ``v`` represents the generator ``sum_i v_i A_i``; membership is
    decided by singular values below ``tol``.
    """
    if not tol > 0:
        raise ParameterError("kernel tolerance must be positive")
    _, s, vh = np.linalg.svd(gram.sigma)
    return [vh[k].copy() for k in range(len(s)) if s[k] < tol]


def time_invariance_drift(A: FluctuationGenerator, t_grid) -> float:
    """``max_t w(A - tau_t A)``: zero iff ``F(A)`` is pointwise invariant on the grid."""
    t_grid = list(t_grid)
    if not t_grid:
        raise ParameterError("time grid is empty")
    drift = 0.0
    for t in t_grid:
        if t == 0:
            continue
        D = A - A.evolved(t)
        drift = max(drift, covariance(D, D))
    return drift


# ---------------------------------------------------------------------------
# spin sectors
# ---------------------------------------------------------------------------

def _in_sector(f, alpha, grid) -> OneParticleFunction:
    base = np.asarray(f.values[:, 0] if isinstance(f, OneParticleFunction) else f, dtype=complex)
    vals = np.zeros(grid.shape, dtype=complex)
    vals[:, alpha] = base
    return OneParticleFunction(grid, vals)


@dataclass
class SpinCenterReport:
    entries: list
    sigma_tol: float

    @property
    def central_pairs(self):
        return [(e["alpha"], e["beta"]) for e in self.entries if e["central"]]

    def as_dict(self):
        return {"sigma_tol": self.sigma_tol, "entries": self.entries}


def spin_center_enlargement(model: OneParticleModel, f, g, probes=None, t_grid=None,
                            tol: float = 1e-9, degeneracy_tol: float = 1e-12, seed: int = 0) -> SpinCenterReport:
    """
    Test whether cross-sector quadratics ``a*(f_a) a(g_b) + h.c.`` are central.

    ``f`` and ``g`` are momentum profiles (length ``L``) placed into spin
    sectors ``a`` and ``b``.  Each sector pair is reported with its
    degeneracy (equal ``rho`` and ``h``), the largest ``|sigma|`` against the
    probe set, and the time-invariance drift; within-sector quadratics
    (``a == b``) are included for comparison.
    """
    grid = model.grid
    s = grid.spin_dim
    if s < 2:
        raise ParameterError("spin enlargement needs spin_dim >= 2")
    if probes is None:
        rng = make_rng(seed)
        probes = [random_self_adjoint(grid, rng, k) for k in (1, 1, 2, 2)]
    probe_gens = [FluctuationGenerator(P, model) for P in probes]
    t_grid = np.linspace(0.0, 10.0, 11) if t_grid is None else t_grid
    entries = []
    for a in range(s):
        for b in range(a, s):
            degenerate = bool(
                np.max(np.abs(model.rho[:, a] - model.rho[:, b])) <= degeneracy_tol
                and np.max(np.abs(model.dispersion[:, a] - model.dispersion[:, b])) <= degeneracy_tol
            )
            X = FluctuationGenerator(
                GaugePolynomial.hermitian_quadratic(_in_sector(f, a, grid), _in_sector(g, b, grid)), model)
            smax = max(abs(symplectic_form(X, B)) for B in probe_gens)
            drift = time_invariance_drift(X, t_grid)
            entries.append({
                "alpha": a, "beta": b, "degenerate": degenerate,
                "sigma_max": smax, "drift": drift,
                "central": bool(smax <= tol and drift <= tol),
            })
    return SpinCenterReport(entries, tol)
