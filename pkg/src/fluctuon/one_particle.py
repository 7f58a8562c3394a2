"""
Momentum-space one-particle kinematics on the discrete torus.

Conventions used throughout the package:

* momenta ``p_k = 2 pi k / L - pi`` for ``k = 0 .. L-1``;
* ``<f|g> = (1/L) sum_{k, alpha} conj(f) g`` (antilinear in the first slot);
* translation by ``x`` multiplies by ``exp(i p x)``, the sums over ``x``
  run over ``0 .. L-1`` without prefactor;
* time evolution multiplies by ``exp(i h(p) t)``.

With these choices the torus sum ``sum_x <u|v_x><v_x|w>`` collapses exactly to
``(1/L) sum_k ...`` and the fluctuation variance of ``a*(f) a(f)`` reads
``(1/L) sum_k |f_k|^4 rho_k (1 - rho_k)`` for a single spin component.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError

__all__ = [
    "MomentumGrid",
    "OneParticleFunction",
    "OneParticleModel",
    "inner_product",
    "translate",
    "evolve",
    "kms_symbol",
    "fermi_dirac",
]


def _frozen(arr, dtype):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class MomentumGrid:
    """Discrete Brillouin zone of an ``L``-site ring with ``spin_dim`` internal states."""

    L: int
    spin_dim: int = 1

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 2:
            raise ParameterError(f"lattice size must be an integer >= 2, got {self.L!r}")
        if int(self.spin_dim) != self.spin_dim or self.spin_dim < 1:
            raise ParameterError(f"spin_dim must be an integer >= 1, got {self.spin_dim!r}")

    @property
    def points(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.L) / self.L - np.pi

    @property
    def shape(self) -> tuple[int, int]:
        return (self.L, self.spin_dim)

    @property
    def n_modes(self) -> int:
        return self.L * self.spin_dim


class OneParticleFunction:
    """
    Momentum representation ``f(p_k, alpha)`` of a one-particle vector.

    Values are stored as an immutable complex array of shape ``(L, s)``; a
    1-d array of length ``L`` is accepted when ``s == 1``.
    """

    __slots__ = ("grid", "values", "_key")

    def __init__(self, grid: MomentumGrid, values):
        vals = np.asarray(values, dtype=complex)
        if vals.ndim == 1 and grid.spin_dim == 1:
            vals = vals[:, None]
        if vals.shape != grid.shape:
            raise DimensionError(f"values of shape {vals.shape} do not match grid {grid.shape}")
        self.grid = grid
        self.values = _frozen(vals, complex)
        self._key = None

    @property
    def key(self) -> str:
        """Stable content hash, used to order and merge operator terms."""
        if self._key is None:
            h = hashlib.sha1(np.ascontiguousarray(self.values).tobytes())
            h.update(repr(self.grid).encode())
            self._key = h.hexdigest()
        return self._key

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, OneParticleFunction):
            return NotImplemented
        return self.grid == other.grid and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"OneParticleFunction(L={self.grid.L}, s={self.grid.spin_dim}, key={self.key[:8]})"

    def scaled(self, c) -> "OneParticleFunction":
        return OneParticleFunction(self.grid, c * self.values)

    def __add__(self, other):
        _check_grid(self, other)
        return OneParticleFunction(self.grid, self.values + other.values)

    @classmethod
    def mode(cls, grid: MomentumGrid, k: int, alpha: int = 0) -> "OneParticleFunction":
        """Plane wave normalised so that ``<f|f> = 1``."""
        vals = np.zeros(grid.shape, dtype=complex)
        vals[k, alpha] = np.sqrt(grid.L)
        return cls(grid, vals)


@dataclass(frozen=True, eq=False)
class OneParticleModel:
    """Quasifree state (occupation symbol ``rho``) together with its dispersion ``h``."""

    grid: MomentumGrid
    rho: np.ndarray
    dispersion: np.ndarray = field(default=None)

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if rho.ndim == 1 and self.grid.spin_dim == 1:
            rho = rho[:, None]
        if rho.shape != self.grid.shape:
            raise DimensionError(f"rho of shape {rho.shape} does not match grid {self.grid.shape}")
        if np.any(rho < 0.0) or np.any(rho > 1.0) or not np.all(np.isfinite(rho)):
            raise ParameterError("occupation symbol must satisfy 0 <= rho <= 1")
        h = np.zeros(self.grid.shape) if self.dispersion is None else np.asarray(self.dispersion, dtype=float)
        if h.ndim == 1 and self.grid.spin_dim == 1:
            h = h[:, None]
        if h.shape != self.grid.shape:
            raise DimensionError(f"dispersion of shape {h.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(h)):
            raise ParameterError("dispersion must be finite")
        object.__setattr__(self, "rho", _frozen(rho, float))
        object.__setattr__(self, "dispersion", _frozen(h, float))


def _check_grid(f, g):
    if f.grid != g.grid:
        raise DimensionError(f"grid mismatch: {f.grid} vs {g.grid}")


def inner_product(f: OneParticleFunction, g: OneParticleFunction) -> complex:
    """``<f|g> = (1/L) sum conj(f) g``."""
    _check_grid(f, g)
    return complex(np.vdot(f.values, g.values) / f.grid.L)


def translate(f: OneParticleFunction, x: int) -> OneParticleFunction:
    phase = np.exp(1j * f.grid.points * int(x))
    return OneParticleFunction(f.grid, phase[:, None] * f.values)


def evolve(f: OneParticleFunction, model: OneParticleModel, t: float) -> OneParticleFunction:
    _check_grid(f, model)
    if not np.isfinite(t):
        raise ParameterError("time must be finite")
    return OneParticleFunction(f.grid, np.exp(1j * model.dispersion * t) * f.values)


def fermi_dirac(energy, beta, mu=0.0):
    """``1 / (1 + exp(beta (e - mu)))`` evaluated without overflow."""
    x = beta * (np.asarray(energy, dtype=float) - mu)
    e = np.exp(-np.abs(x))
    return np.where(x > 0, e / (1.0 + e), 1.0 / (1.0 + e))


def kms_symbol(grid: MomentumGrid, dispersion, beta: float, mu: float = 0.0) -> OneParticleModel:
    """Equilibrium (Fermi-Dirac) occupation at inverse temperature ``beta``."""
    if not beta > 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    h = np.asarray(dispersion, dtype=float)
    if h.ndim == 1 and grid.spin_dim == 1:
        h = h[:, None]
    return OneParticleModel(grid, fermi_dirac(h, beta, mu), h)
