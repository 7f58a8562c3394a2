import numpy as np
import pytest
from hypothesis import given, strategies as st

from fluctuon.car_wick import GaugeMonomial, GaugePolynomial
from fluctuon.ccr_weyl import SymplecticSpace, split_degenerate
from fluctuon.errors import ContractError, DimensionError, ParameterError
from fluctuon.fluctuation import (
    FluctuationGenerator,
    build_gram,
    center_kernel,
    covariance,
    fluctuation_state,
    spin_center_enlargement,
    symplectic_form,
    time_invariance_drift,
    variance_closed_form,
)
from fluctuon.one_particle import MomentumGrid, OneParticleFunction, OneParticleModel
from fluctuon.sampling import make_rng, random_function, random_model, random_quadratic, random_self_adjoint

seeds = st.integers(0, 2**32 - 1)


def _gen(P, m):
    return FluctuationGenerator(P, m)


def _setup(seed, L=8, s=1, **kw):
    rng = make_rng(seed)
    g = MomentumGrid(L, s)
    return rng, g, random_model(g, rng, **kw)


def test_generator_contract():
    rng, g, m = _setup(0)
    P = GaugePolynomial(g, [GaugeMonomial([random_function(g, rng)], [random_function(g, rng)])])
    with pytest.raises(ContractError):
        FluctuationGenerator(P, m)
    other = random_model(MomentumGrid(4), rng)
    with pytest.raises(DimensionError):
        FluctuationGenerator(random_quadratic(g, rng), other)


def test_generators_must_share_model():
    rng, g, m = _setup(1)
    m2 = random_model(g, rng)
    A, B = _gen(random_quadratic(g, rng), m), _gen(random_quadratic(g, rng), m2)
    with pytest.raises(DimensionError):
        symplectic_form(A, B)


@given(seeds)
def test_antisymmetry_and_self_pairing(seed):
    rng, g, m = _setup(seed)
    A, B = _gen(random_self_adjoint(g, rng, 2), m), _gen(random_self_adjoint(g, rng, 2), m)
    s = symplectic_form(A, B)
    assert abs(s + symplectic_form(B, A)) <= 1e-12 * max(1, abs(s))
    assert abs(symplectic_form(A, A)) <= 1e-12


@given(seeds)
def test_bilinearity(seed):
    rng, g, m = _setup(seed)
    A1, A2 = random_self_adjoint(g, rng, 2), random_self_adjoint(g, rng, 1)
    B = _gen(random_self_adjoint(g, rng, 2), m)
    a, b = rng.normal(size=2)
    lhs = symplectic_form(_gen(A1.scale(a) + A2.scale(b), m), B)
    rhs = a * symplectic_form(_gen(A1, m), B) + b * symplectic_form(_gen(A2, m), B)
    assert abs(lhs - rhs) <= 1e-12 * max(1, abs(lhs))


@given(seeds, st.sampled_from([8, 16]))
def test_quadratic_center(seed, L):
    rng, g, m = _setup(seed, L)
    Q = _gen(random_quadratic(g, rng), m)
    assert abs(symplectic_form(Q, _gen(random_quadratic(g, rng), m))) <= 1e-9
    assert abs(symplectic_form(Q, _gen(random_self_adjoint(g, rng, 2), m))) <= 1e-9
    assert abs(symplectic_form(_gen(random_self_adjoint(g, rng, 3), m), Q)) <= 1e-9


def test_quartic_pair_nonzero():
    rng, g, m = _setup(5, 16, dispersion="cos")
    A, B = _gen(random_self_adjoint(g, rng, 2), m), _gen(random_self_adjoint(g, rng, 2), m)
    assert abs(symplectic_form(A, B)) > 1e-6


def test_covariance_examples():
    rng, g, m = _setup(2)
    assert covariance(_gen(GaugePolynomial.identity(g), m), _gen(GaugePolynomial.identity(g), m)) == 0
    g2 = MomentumGrid(2)
    half = OneParticleModel(g2, [0.5, 0.5])
    f = OneParticleFunction(g2, [1, 1])
    A = _gen(GaugePolynomial.quadratic(f, f), half)
    assert covariance(A, A) == pytest.approx(0.25, abs=1e-15)
    assert fluctuation_state(A, 1.0) == pytest.approx(np.exp(-0.25), abs=1e-15)
    assert fluctuation_state(A, 1.0) == pytest.approx(0.7788007830714049, abs=1e-15)
    assert fluctuation_state(A, 0.0) == 1.0


@given(seeds, st.sampled_from([4, 8, 16]), st.sampled_from([1, 2]))
def test_variance_formula(seed, L, s):
    rng, g, m = _setup(seed, L, s)
    f = random_function(g, rng)
    A = _gen(GaugePolynomial.quadratic(f, f), m)
    assert abs(covariance(A, A) - variance_closed_form(f, m)) <= 1e-12 * max(1, abs(variance_closed_form(f, m)))


@given(seeds)
def test_pure_state_has_no_quadratic_fluctuations(seed):
    rng, g, m = _setup(seed, pure=True)
    A = _gen(random_quadratic(g, rng), m)
    assert abs(covariance(A, A)) <= 1e-12
    assert fluctuation_state(A, 5.0) == pytest.approx(1.0, abs=1e-10)


@given(seeds)
def test_variance_nonnegative(seed):
    rng, g, m = _setup(seed, 6)
    A = _gen(random_self_adjoint(g, rng, int(rng.integers(1, 3)), 2), m)
    assert covariance(A, A) >= -1e-12


def test_gram_single_and_mixed():
    rng, g, m = _setup(3, 16)
    one = build_gram([_gen(random_self_adjoint(g, rng, 2), m)])
    assert one.sigma.shape == (1, 1) and one.sigma[0, 0] == 0
    Q = _gen(random_quadratic(g, rng), m)
    gram = build_gram([Q, _gen(random_self_adjoint(g, rng, 2), m)])
    assert np.abs(gram.sigma[0]).max() <= 1e-9
    with pytest.raises(ParameterError):
        build_gram([])


def test_quartic_gram_full_rank():
    rng, g, m = _setup(4, 16, dispersion="cos")
    gram = build_gram([_gen(random_self_adjoint(g, rng, 2), m) for _ in range(6)])
    assert min(np.linalg.svd(gram.sigma, compute_uv=False)) > 1e-6
    assert center_kernel(gram) == []


def test_kernel_counts_quadratics():
    rng, g, m = _setup(7, 16, dispersion="cos")
    quads = [_gen(random_quadratic(g, rng), m) for _ in range(3)]
    gram_q = build_gram(quads)
    assert len(center_kernel(gram_q)) == 3
    mixed = build_gram(quads + [_gen(random_self_adjoint(g, rng, 2), m) for _ in range(4)])
    kernel = center_kernel(mixed)
    assert len(kernel) == 3
    for v in kernel:
        assert np.abs(mixed.sigma @ v).max() <= 1e-8
    with pytest.raises(ParameterError):
        center_kernel(mixed, 0.0)


def test_kernel_agrees_with_symplectic_split():
    rng, g, m = _setup(8, 16, dispersion="cos")
    gens = [_gen(random_quadratic(g, rng), m), _gen(random_self_adjoint(g, rng, 2), m),
            _gen(random_self_adjoint(g, rng, 2), m)]
    gram = build_gram(gens)
    K, _ = split_degenerate(SymplecticSpace(gram.sigma), 1e-9)
    assert K.shape[1] == 1
    assert abs(abs(K[0, 0]) - 1) < 1e-9


@given(seeds)
def test_gram_positivity(seed):
    rng, g, m = _setup(seed, 8)
    gens = [_gen(random_self_adjoint(g, rng, int(rng.integers(1, 3))), m) for _ in range(4)]
    gram = build_gram(gens)
    assert gram.positivity_min_eig >= -1e-10
    assert np.allclose(gram.sigma, -gram.sigma.T, atol=1e-12)
    assert np.allclose(gram.covariance, gram.covariance.T, atol=1e-12)


def test_gram_threads_match_serial(monkeypatch):
    rng, g, m = _setup(9, 8)
    gens = [_gen(random_self_adjoint(g, rng, 2), m) for _ in range(4)]
    serial = build_gram(gens, workers=1)
    monkeypatch.setenv("FLUCTUON_THREADS", "3")
    threaded = build_gram(gens)
    assert np.array_equal(serial.sigma, threaded.sigma)
    assert np.array_equal(serial.covariance, threaded.covariance)


def test_gram_rows_schema():
    rng, g, m = _setup(10, 8)
    gram = build_gram([_gen(random_quadratic(g, rng), m) for _ in range(2)])
    rows = gram.rows()
    assert len(rows) == 4 and rows[1][:2] == (0, 1)


def test_drift_examples():
    rng, g, m = _setup(11, 16, dispersion="cos")
    Q = _gen(random_quadratic(g, rng), m)
    assert time_invariance_drift(Q, [0.0]) == 0
    assert time_invariance_drift(Q, np.arange(0, 10.01, 0.1)) <= 1e-9
    quartic = _gen(random_self_adjoint(g, rng, 2), m)
    assert time_invariance_drift(quartic, np.linspace(0, 10, 11)) > 1e-6
    with pytest.raises(ParameterError):
        time_invariance_drift(Q, [])


@given(seeds)
def test_quadratic_drift_any_state(seed):
    rng, g, m = _setup(seed, 8)
    Q = _gen(random_self_adjoint(g, rng, 1, n_terms=2), m)
    assert time_invariance_drift(Q, [0.3, 2.0, 7.5]) <= 1e-9


def test_sigma_stable_under_doubling():
    # a quadratic against a quartic: exactly zero at every size
    for L in (8, 16, 32):
        rng, g, m = _setup(12, L)
        Q, B = _gen(random_quadratic(g, rng), m), _gen(random_self_adjoint(g, rng, 2), m)
        assert abs(symplectic_form(Q, B)) <= 1e-9


def _spin_models(L=8, seed=0):
    rng = make_rng(seed)
    g = MomentumGrid(L, 2)
    h = -np.cos(g.points)
    r = rng.uniform(0.1, 0.9, L)
    deg = OneParticleModel(g, np.stack([r, r], 1), np.stack([h, h], 1))
    split = OneParticleModel(g, np.stack([np.full(L, 0.2), np.full(L, 0.8)], 1),
                             np.stack([h, h + 0.3 * np.cos(2 * g.points)], 1))
    f = rng.normal(size=L) + 1j * rng.normal(size=L)
    q = rng.normal(size=L) + 1j * rng.normal(size=L)
    return deg, split, f, q


def test_spin_enlargement_degenerate():
    deg, _, f, q = _spin_models()
    report = spin_center_enlargement(deg, f, q)
    assert (0, 1) in report.central_pairs
    cross = [e for e in report.entries if e["alpha"] != e["beta"]][0]
    assert cross["degenerate"] and cross["sigma_max"] <= 1e-9 and cross["drift"] <= 1e-9


def test_spin_enlargement_split():
    _, split, f, q = _spin_models()
    report = spin_center_enlargement(split, f, q)
    cross = [e for e in report.entries if e["alpha"] != e["beta"]][0]
    assert not cross["degenerate"] and not cross["central"]
    assert cross["drift"] > 1e-6
    assert set(report.central_pairs) == {(0, 0), (1, 1)}


def test_spin_enlargement_needs_two_sectors():
    rng, g, m = _setup(0, 4)
    with pytest.raises(ParameterError):
        spin_center_enlargement(m, np.ones(4), np.ones(4))
