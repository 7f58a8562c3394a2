"""
Oscillatory integrals governing the perturbed fluctuation dynamics.

The displacement picked up by a bosonic mode under a weak linear coupling is
``i * I(T) * f`` with

    G(t) = int exp(i Phi(p) t) m(p) dp,        I(T) = int_0^T G(t) dt.

Where ``Phi`` vanishes on the support of ``m`` stationary-phase decay of
``G`` is too slow for ``I`` to converge; the equilibrium factor
``1 - exp(-beta Phi)`` vanishes exactly there and restores integrability.

Quadrature is composite Gauss-Legendre with panel counts tied to the total
variation of the phase, checked by panel doubling.  ``I(T)`` is evaluated by
exchanging the order of integration,

    I(T) = int m(p) (exp(i Phi T) - 1) / (i Phi) dp,

which is a single oscillatory integral per ``T``; the direct time quadrature
:func:`time_integral` is kept as an independent cross-check for moderate ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import CapacityError, FloorError, NumericError, ParameterError

__all__ = [
    "ScatteringProbe",
    "ConvergenceVerdict",
    "gaussian_probe",
    "bump_probe",
    "gaussian_closed_form",
    "gaussian_kms_closed_form",
    "gaussian_integral_closed_form",
    "oscillatory_G",
    "fit_power_law",
    "decay_exponent",
    "time_integral",
    "accumulated_integral",
    "scattering_integral",
    "perturbed_mode_evolution",
    "asymptotic_abelianess",
]

_GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
_CHUNK = 1 << 20
# e^{-p^2} < 1e-16 beyond this cutoff
GAUSS_CUTOFF = float(np.sqrt(37.0))


@dataclass(frozen=True, eq=False)
class ScatteringProbe:
    """
    Phase ``Phi``, weight ``m`` on ``[p_min, p_max]`` and optional KMS factor.

    With ``beta`` set, the integrated weight is ``m (1 - exp(-beta Phi))``.
    """

    phase: Callable
    weight: Callable
    interval: tuple
    beta: Optional[float] = None
    name: str = "probe"

    def __post_init__(self):
        a, b = self.interval
        if not b > a:
            raise ParameterError("interval must be increasing")
        if self.beta is not None and not self.beta > 0:
            raise ParameterError("beta must be positive")

    def effective_weight(self, p):
        m = self.weight(p)
        if self.beta is None:
            return m
        return m * -np.expm1(-self.beta * self.phase(p))

    def with_beta(self, beta) -> "ScatteringProbe":
        return ScatteringProbe(self.phase, self.weight, self.interval, beta, self.name)

    def phase_variation(self, n: int = 8193) -> float:
        p = np.linspace(*self.interval, n)
        return float(np.abs(np.diff(self.phase(p))).sum())

    def weight_l1(self, tol: float = 1e-8) -> float:
        """``int |m|``, refined until successive values agree to ``tol`` (relative)."""
        prev = None
        for panels in (64, 128, 256, 512, 1024, 2048):
            val = _integrate(lambda p: np.abs(self.effective_weight(p)), self.interval, panels).real
            if prev is not None and abs(val - prev) <= tol * max(abs(val), 1e-300):
                return val
            prev = val
        raise NumericError("weight is not absolutely integrable to the requested accuracy", achieved=abs(val - prev))


def gaussian_probe(power: int = 2, beta: Optional[float] = None, shift: float = 0.0) -> ScatteringProbe:
    """``Phi = p^power + shift``, ``m = exp(-p^2)`` on the line (truncated where ``m < 1e-16``)."""
    return ScatteringProbe(lambda p: p**power + shift, lambda p: np.exp(-p * p),
                           (-GAUSS_CUTOFF, GAUSS_CUTOFF), beta, f"p{power}-gauss")


def _bump(p):
    p = np.asarray(p, dtype=float)
    inside = np.abs(p) < 1.0
    out = np.zeros_like(p)
    out[inside] = np.exp(-1.0 / (1.0 - p[inside] ** 2))
    return out


def bump_probe(beta: Optional[float] = None) -> ScatteringProbe:
    """``Phi = p`` (no stationary point) with a smooth compactly supported weight on ``(-1, 1)``."""
    return ScatteringProbe(lambda p: p, _bump, (-1.0, 1.0), beta, "p1-bump")


def gaussian_closed_form(t):
    """``int exp(i p^2 t - p^2) dp = sqrt(pi / (1 - i t))``."""
    return np.sqrt(np.pi) / np.sqrt(1.0 - 1j * np.asarray(t, dtype=float))


def gaussian_kms_closed_form(t, beta):
    """Same integral with the factor ``1 - exp(-beta p^2)``."""
    t = np.asarray(t, dtype=float)
    return np.sqrt(np.pi) * (1.0 / np.sqrt(1.0 - 1j * t) - 1.0 / np.sqrt(1.0 + beta - 1j * t))


def gaussian_integral_closed_form(T, beta=None):
    """``int_0^T G(t) dt`` for the Gaussian family (with or without KMS factor)."""
    T = np.asarray(T, dtype=float)
    out = 2j * np.sqrt(np.pi) * (np.sqrt(1.0 - 1j * T) - 1.0)
    if beta is not None:
        out -= 2j * np.sqrt(np.pi) * (np.sqrt(1.0 + beta - 1j * T) - np.sqrt(1.0 + beta))
    return out


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def _integrate(fn, interval, panels: int) -> complex:
    a, b = interval
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    total = 0.0 + 0.0j
    per_chunk = max(1, _CHUNK // _GL_ORDER)
    for s in range(0, panels, per_chunk):
        h = half[s:s + per_chunk, None]
        nodes = mid[s:s + per_chunk, None] + h * _GL_X[None, :]
        total += np.sum(fn(nodes) * (h * _GL_W[None, :]))
    return complex(total)


def _adaptive(fn, interval, oscillation: float, tol: float, max_panels: int = 1 << 24) -> complex:
    panels = int(32 + np.ceil(oscillation / np.pi))
    # the starting grid already resolves the oscillation; ten doublings are ample
    max_panels = min(max_panels, panels << 10)
    coarse = _integrate(fn, interval, panels)
    err = float("inf")
    while True:
        panels *= 2
        if panels > max_panels:
            raise NumericError("oscillatory quadrature did not converge", achieved=err)
        fine = _integrate(fn, interval, panels)
        err = abs(fine - coarse)
        if err <= tol:
            return fine
        coarse = fine


def oscillatory_G(probe: ScatteringProbe, t: float, tol: float = 1e-10) -> complex:
    """``int exp(i Phi(p) t) m(p) dp`` (KMS factor included when ``probe.beta`` is set)."""
    if not np.isfinite(t):
        raise ParameterError("t must be finite")
    osc = probe.phase_variation() * abs(t)

    def integrand(p):
        return np.exp(1j * t * probe.phase(p)) * probe.effective_weight(p)

    val = _adaptive(integrand, probe.interval, osc, tol)
    return val


def fit_power_law(x, y):
    """Least-squares slope of ``log y`` vs ``log x`` with its 95% half-width."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    n = len(lx)
    if n > 2:
        resid = ly - A @ coef
        s2 = resid @ resid / (n - 2)
        se = np.sqrt(s2 / np.sum((lx - lx.mean()) ** 2))
        half = 1.96 * se
    else:
        half = float("inf")
    return float(coef[0]), float(half)


def decay_exponent(probe: ScatteringProbe, t_window, floor: float = 1e-12, with_ci: bool = False):
    """Fitted exponent ``a`` in ``|G(t)| ~ t^a`` over a geometric time window."""
    t_window = np.asarray(t_window, dtype=float)
    if len(t_window) < 20:
        raise ParameterError("t_window needs at least 20 points")
    if np.any(t_window <= 0):
        raise ParameterError("t_window must be positive")
    g = np.array([abs(oscillatory_G(probe, t)) for t in t_window])
    if g.min() < floor:
        raise FloorError(f"|G| fell to {g.min():.2e}, below the floor {floor:.0e}", achieved=float(g.min()))
    slope, half = fit_power_law(t_window, g)
    return (slope, half) if with_ci else slope


def time_integral(probe: ScatteringProbe, T: float, panels_per_unit: float = 4.0) -> complex:
    """``int_0^T G(t) dt`` by direct Gauss-Legendre quadrature in ``t`` (moderate ``T`` only)."""
    if T == 0:
        return 0.0j
    panels = int(np.ceil(T * panels_per_unit)) + 4
    edges = np.linspace(0.0, T, panels + 1)
    total = 0.0 + 0.0j
    for a, b in zip(edges[:-1], edges[1:]):
        nodes = 0.5 * (a + b) + 0.5 * (b - a) * _GL_X
        total += 0.5 * (b - a) * sum(w * oscillatory_G(probe, t) for w, t in zip(_GL_W, nodes))
    return complex(total)


def accumulated_integral(probe: ScatteringProbe, T: float, tol: float = 1e-10) -> complex:
    """``I(T) = int m(p) (exp(i Phi T) - 1) / (i Phi) dp`` computed stably as ``T e^{ix/2} sinc``."""
    if T == 0:
        return 0.0j
    osc = probe.phase_variation() * abs(T)

    def integrand(p):
        x = probe.phase(p) * T
        return T * np.exp(0.5j * x) * np.sinc(x / (2.0 * np.pi)) * probe.effective_weight(p)

    return _adaptive(integrand, probe.interval, osc, tol)


@dataclass
class ConvergenceVerdict:
    """
    Outcome of the ``T -> infinity`` study of ``I(T)``.

    ``tail_sup`` is the largest ``|I(T) - I(T_last)|`` over the final decade of
    the grid; ``growth_exponent`` is the log-log slope of ``|I|`` there;
    ``decay_exponent`` is the slope of ``|G|`` there (integrable iff < -1).
    """

    I_values: list
    tail_sup: float
    growth_exponent: float
    decay_exponent: float
    exponent_ci: float
    verdict: str
    beta: Optional[float] = None
    tail_tol: float = 1e-3
    remainder_estimate: float = field(default=float("nan"))

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "tail_sup": self.tail_sup,
            "tail_tol": self.tail_tol,
            "growth_exponent": self.growth_exponent,
            "decay_exponent": self.decay_exponent,
            "exponent_ci": self.exponent_ci,
            "remainder_estimate": self.remainder_estimate,
            "beta": self.beta,
        }


def scattering_integral(probe: ScatteringProbe, T_grid, tail_tol: float = 1e-3,
                        growth_threshold: float = 0.1) -> ConvergenceVerdict:
    """
    Sweep ``I(T)`` over ``T_grid`` and classify the limit ``T -> infinity``.

    * ``diverged``: ``|I|`` grows monotonically over the final decade with
      fitted exponent above ``growth_threshold``;
    * ``converged``: ``tail_sup <= tail_tol``;
    * ``inconclusive`` otherwise.
    """
    T_grid = np.asarray(T_grid, dtype=float)
    if len(T_grid) < 2 or np.any(np.diff(T_grid) <= 0) or T_grid[0] < 0:
        raise ParameterError("T_grid must be increasing, non-negative, with at least two points")
    I = np.array([accumulated_integral(probe, T) for T in T_grid])
    last = T_grid[-1]
    tail = (T_grid >= last / 10.0) & (T_grid > 0)
    tail_sup = float(np.max(np.abs(I[tail] - I[-1])))
    absI = np.abs(I[tail])
    if tail.sum() >= 3 and absI.min() > 0:
        growth, _ = fit_power_law(T_grid[tail], absI)
        monotone = bool(np.all(np.diff(absI) > 0))
    else:
        growth, monotone = float("nan"), False
    G = np.array([abs(oscillatory_G(probe, T)) for T in T_grid[tail]])
    if tail.sum() >= 3 and G.min() > 0:
        dec, ci = fit_power_law(T_grid[tail], G)
    else:
        dec, ci = float("nan"), float("inf")
    # tail of int |G| beyond T_last under the fitted power law
    remainder = G[-1] * last / abs(dec + 1.0) if dec < -1.0 else float("inf")
    if monotone and growth > growth_threshold:
        verdict = "diverged"
    elif tail_sup <= tail_tol:
        verdict = "converged"
    else:
        verdict = "inconclusive"
    return ConvergenceVerdict([(float(T), complex(v)) for T, v in zip(T_grid, I)], tail_sup, float(growth),
                              float(dec), float(ci), verdict, probe.beta, tail_tol, float(remainder))


def perturbed_mode_evolution(probe: ScatteringProbe, f_coupling: complex, T: float) -> complex:
    """
    c-number displacement ``D(T) = i I(T) f`` of ``b(f_t)`` under the linear
    coupling ``b(g) + b*(g)``; the perturbed evolution converges iff ``D`` does.
    """
    return 1j * accumulated_integral(probe, T) * complex(f_coupling)


# ---------------------------------------------------------------------------
# asymptotic abelianess
# ---------------------------------------------------------------------------

def _gauss_env(p, c, w):
    return np.exp(-0.5 * ((p - c) / w) ** 2)


def asymptotic_abelianess(n_p: int, n_q: int, dispersion: Callable, t_window,
                          centers=None, width: float = 0.5, floor: float = 1e-13) -> dict:
    """
    Decay of the translation-summed term

        J(t) = int prod dp_j prod dq_l W(p, q) exp(i t (sum h(p_j) - sum h(q_l))) delta(sum p - sum q)

    with Gaussian envelopes ``W`` (centres ``centers``, common ``width``).
    The last ``q`` is eliminated through the delta, leaving an
    ``n_p + n_q - 1``-dimensional tensor Gauss-Legendre quadrature (at most 2).
    Reports ``|J(t)|``, the fitted power, and ``no_decay`` when the phase
    vanishes identically on the constraint surface or the fit is flat.
    """
    if n_p < 1 or n_q < 1 or n_p > 2 or n_q > 2:
        raise CapacityError("degrees per side must be 1 or 2")
    dims = n_p + n_q - 1
    if dims > 2:
        raise CapacityError("only terms reducing to at most 2-dimensional quadrature are supported")
    if centers is None:
        centers = np.linspace(-0.6, 0.6, n_p + n_q)
    centers = np.asarray(centers, dtype=float)
    span = 8.0 * width
    axes_c = list(centers[:n_p]) + list(centers[n_p:n_p + n_q - 1])

    def integrand(vars_):
        ps = vars_[:n_p]
        qs = vars_[n_p:]
        q_last = sum(ps) - sum(qs) if qs else sum(ps)
        weight = np.ones_like(vars_[0])
        for v, c in zip(ps, centers[:n_p]):
            weight = weight * _gauss_env(v, c, width)
        for v, c in zip(qs, centers[n_p:]):
            weight = weight * _gauss_env(v, c, width)
        weight = weight * _gauss_env(q_last, centers[-1], width)
        phase = sum(dispersion(v) for v in ps) - sum(dispersion(v) for v in qs) - dispersion(q_last)
        return weight, phase

    # identical-phase check on a coarse grid
    probe_axes = [np.linspace(c - span, c + span, 41) for c in axes_c]
    mesh = np.meshgrid(*probe_axes, indexing="ij")
    wt, ph = integrand(mesh)
    identically_zero = bool(np.max(np.abs(ph)) < 1e-12)
    # steepest phase where the envelope is not negligible sets the panel size
    spacing = [ax[1] - ax[0] for ax in probe_axes]
    grads = np.gradient(ph, *spacing) if dims > 1 else [np.gradient(ph, spacing[0])]
    live = wt > 1e-14 * wt.max()
    grad_scale = max(1e-12, max(float(np.abs(g[live]).max()) for g in grads))

    def J(t):
        # a 16-point panel resolves about two oscillations
        panels = int(16 + np.ceil(grad_scale * abs(t) * 2 * span / (4 * np.pi)))
        edges = [np.linspace(c - span, c + span, panels + 1) for c in axes_c]
        nodes, weights = [], []
        for e in edges:
            h = 0.5 * np.diff(e)[:, None]
            nodes.append(((0.5 * (e[1:] + e[:-1]))[:, None] + h * _GL_X[None, :]).ravel())
            weights.append((h * _GL_W[None, :]).ravel())
        if dims == 1:
            w, ph_ = integrand([nodes[0]])
            return complex(np.sum(weights[0] * w * np.exp(1j * t * ph_)))
        total = 0.0 + 0.0j
        y, wy = nodes[1], weights[1]
        step = max(1, _CHUNK // len(y))
        for s in range(0, len(nodes[0]), step):
            X, Y = np.meshgrid(nodes[0][s:s + step], y, indexing="ij")
            w, ph_ = integrand([X, Y])
            total += np.sum(weights[0][s:s + step, None] * wy[None, :] * w * np.exp(1j * t * ph_))
        return complex(total)

    t_window = np.asarray(t_window, dtype=float)
    values = np.array([J(t) for t in t_window])
    mags = np.abs(values)
    positive = t_window > 0
    if positive.sum() >= 3 and mags[positive].min() > floor:
        slope, half = fit_power_law(t_window[positive], mags[positive])
    else:
        slope, half = float("-inf"), float("nan")
    return {
        "t": t_window.tolist(),
        "abs_J": mags.tolist(),
        "J0": J(0.0),
        "exponent": slope,
        "exponent_ci": half,
        "phase_identically_zero": identically_zero,
        "no_decay": bool(identically_zero or slope > -0.1),
    }
