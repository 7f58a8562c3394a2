"""
Acceptance criteria, each run at its stated tolerance.

Every test logs one ``PASS``/``FAIL criterion N`` line (collected in the
terminal summary) before asserting.
"""

import time

import numpy as np
import pytest

from fluctuon.car_wick import GaugePolynomial, quasifree_expectation
from fluctuon.ccr_weyl import SymplecticSpace, build_complex_structure, canonical_basis
from fluctuon.cli import dumps_report, run_experiment
from fluctuon.fluctuation import (
    FluctuationGenerator,
    build_gram,
    covariance,
    spin_center_enlargement,
    symplectic_form,
    time_invariance_drift,
    variance_closed_form,
)
from fluctuon.fock_oracle import build_rep, oracle_expectation
from fluctuon.one_particle import MomentumGrid, OneParticleModel, kms_symbol
from fluctuon.product_chain import SiteModel, condensate_basis, maximality_witness, site_gram
from fluctuon.sampling import (
    make_rng,
    random_function,
    random_model,
    random_polynomial,
    random_quadratic,
    random_self_adjoint,
)
from fluctuon.scattering import (
    decay_exponent,
    gaussian_closed_form,
    gaussian_probe,
    oscillatory_G,
    scattering_integral,
)

T_GRID = np.geomspace(1.0, 1000.0, 31)
BETAS = (0.5, 1.0, 2.0)


def test_criterion_1_wick_matches_fock(criterion_log):
    rng = make_rng(101)
    start = time.perf_counter()
    worst, degrees = 0.0, set()
    for _ in range(200):
        model = random_model(MomentumGrid(int(rng.integers(2, 7))), rng)
        P = random_polynomial(model.grid, rng, max_half_degree=4, n_terms=int(rng.integers(1, 4)))
        degrees.add(P.degree)
        worst = max(worst, abs(quasifree_expectation(P, model) - oracle_expectation(P, build_rep(model))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed <= 60.0
    criterion_log(1, ok, f"max |wick - fock| = {worst:.2e} over 200 polynomials "
                         f"(degrees {sorted(degrees)}), {elapsed:.1f} s")
    assert max(degrees) == 8
    assert ok


def test_criterion_2_quadratics_are_central(criterion_log):
    rng = make_rng(202)
    worst, count = 0.0, 0
    for L in (8, 16, 32):
        grid = MomentumGrid(L)
        for _ in range(5):
            model = random_model(grid, rng)
            A = [FluctuationGenerator(random_quadratic(grid, rng), model) for _ in range(50)]
            B = [FluctuationGenerator(random_self_adjoint(grid, rng, int(rng.integers(1, 5))), model)
                 for _ in range(50)]
            for a in A:
                for b in B:
                    worst = max(worst, abs(symplectic_form(a, b)))
                    count += 1
    ok = worst <= 1e-9
    criterion_log(2, ok, f"max |sigma(A, B)| = {worst:.2e} over {count} pairs, L in (8, 16, 32)")
    assert ok


def test_criterion_3_variance_formula(criterion_log):
    rng = make_rng(303)
    grid = MomentumGrid(16)
    model = random_model(grid, rng)
    worst = 0.0
    for _ in range(100):
        f = random_function(grid, rng)
        A = FluctuationGenerator(GaugePolynomial.quadratic(f, f), model)
        worst = max(worst, abs(covariance(A, A) - variance_closed_form(f, model)))
    pure_worst = 0.0
    for rho in (np.zeros(grid.shape), np.ones(grid.shape), rng.integers(0, 2, grid.shape).astype(float)):
        pure = OneParticleModel(grid, rho, model.dispersion)
        for _ in range(10):
            f = random_function(grid, rng)
            A = FluctuationGenerator(GaugePolynomial.quadratic(f, f), pure)
            pure_worst = max(pure_worst, abs(covariance(A, A)))
    ok = worst <= 1e-12 and pure_worst <= 1e-12
    criterion_log(3, ok, f"max |direct - closed form| = {worst:.2e} (100 f), "
                         f"max |w| for rho in {{0, 1}} = {pure_worst:.2e}")
    assert ok


def test_criterion_4_pointwise_time_invariance(criterion_log):
    rng = make_rng(404)
    t_grid = np.round(np.arange(0, 101) * 0.1, 12)
    grid = MomentumGrid(16)
    quad_drift, quartic_drift = 0.0, np.inf
    for _ in range(3):
        model = random_model(grid, rng)
        for _ in range(5):
            quad_drift = max(quad_drift, time_invariance_drift(FluctuationGenerator(random_quadratic(grid, rng), model), t_grid))
        quartic = FluctuationGenerator(random_self_adjoint(grid, rng, 2), model)
        quartic_drift = min(quartic_drift, time_invariance_drift(quartic, t_grid))
    ok = quad_drift <= 1e-9 and quartic_drift >= 1e-3
    criterion_log(4, ok, f"max quadratic drift = {quad_drift:.2e}, smallest quartic drift = {quartic_drift:.2e}")
    assert ok


def _grams(rng):
    for L in (8, 16):
        grid = MomentumGrid(L)
        models = [random_model(grid, rng), random_model(grid, rng, pure=True),
                  kms_symbol(grid, -np.cos(grid.points), 2.0, 0.3)]
        for model in models:
            gens = [FluctuationGenerator(random_quadratic(grid, rng), model) for _ in range(2)]
            gens += [FluctuationGenerator(random_self_adjoint(grid, rng, k), model) for k in (1, 2, 2, 3)]
            yield build_gram(gens, validate=False, max_degree=12)
    grid = MomentumGrid(6, 2)
    model = random_model(grid, rng)
    yield build_gram([FluctuationGenerator(random_self_adjoint(grid, rng, k), model) for k in (1, 1, 2, 2)],
                     validate=False)


def test_criterion_5_ccr_positivity(criterion_log):
    eigs = [g.positivity_min_eig for g in _grams(make_rng(505))]
    worst = min(eigs)
    ok = worst >= -1e-10
    criterion_log(5, ok, f"min eig(cov + (i/2) sigma) = {worst:.2e} over {len(eigs)} grams")
    assert ok


def test_criterion_6_complex_structure(criterion_log):
    rng = make_rng(606)
    square = compat = pairing = 0.0
    dims = []
    while len(dims) < 50:
        dim = 2 * int(rng.integers(1, 11))
        X = rng.normal(size=(dim, dim))
        space = SymplecticSpace(X - X.T)
        if not space.nondegenerate:
            continue
        dims.append(dim)
        r = build_complex_structure(space).residuals()
        square, compat = max(square, r["square"]), max(compat, r["compatibility"])
        chi, eta, kernel = canonical_basis(space)
        assert not kernel
        C, E, S = np.array(chi), np.array(eta), space.sigma
        pairing = max(pairing, np.abs(C @ S @ E.T - np.eye(len(chi))).max(),
                      np.abs(C @ S @ C.T).max(), np.abs(E @ S @ E.T).max())
    ok = square <= 1e-12 and compat <= 1e-12 and pairing <= 1e-10
    criterion_log(6, ok, f"|J^2 + 1| = {square:.1e}, compatibility {compat:.1e}, "
                         f"pairing {pairing:.1e} over 50 forms (dim {min(dims)}..{max(dims)})")
    assert ok


def test_criterion_7_product_chain(criterion_log):
    rng = make_rng(707)
    kernel_dims, found, tracial = {}, 0, 0.0
    for n in (2, 3, 4, 5):
        d = np.sort(rng.dirichlet(np.ones(n)))
        while np.min(np.diff(d)) < 1e-3:
            d = np.sort(rng.dirichlet(np.ones(n)))
        site = SiteModel(np.diag(d), rng.normal(size=n))
        kernel_dims[n] = len(condensate_basis(site))
        for _ in range(25):
            X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            A = X + X.conj().T
            C, c, jk, val = maximality_witness(A, site)
            found += val > 0
        tracial = max(tracial, float(np.abs(site_gram(SiteModel.tracial(n))).max()))
    ok = all(k == n - 1 for n, k in kernel_dims.items()) and found == 100 and tracial == 0.0
    criterion_log(7, ok, f"kernel dims {kernel_dims}, witnesses {found}/100, tracial gram max {tracial:.1e}")
    assert ok


def test_criterion_8_scattering(criterion_log):
    start = time.perf_counter()
    flat = gaussian_probe()
    oracle = max(abs(oscillatory_G(flat, t) - gaussian_closed_form(t))
                 for t in np.concatenate([[0.0], np.geomspace(0.01, 1000.0, 40)]))
    window = np.geomspace(50.0, 500.0, 20)
    e2 = decay_exponent(gaussian_probe(2), window)
    e3 = decay_exponent(gaussian_probe(3), window)
    verdict = scattering_integral(flat, T_GRID)
    kms = {b: scattering_integral(gaussian_probe(beta=b), T_GRID) for b in BETAS}
    elapsed = time.perf_counter() - start
    checks = {
        "oracle": oracle <= 1e-7,
        "p2": abs(e2 + 0.5) <= 0.05,
        "p3": abs(e3 + 1 / 3) <= 0.05,
        "flat": verdict.verdict == "diverged" and abs(verdict.growth_exponent - 0.5) <= 0.1,
        "kms_flip": all(v.verdict != "diverged" for v in kms.values()),
        "runtime": elapsed <= 180.0,
    }
    ok = all(checks.values())
    criterion_log(8, ok, f"oracle {oracle:.1e}, exponents {e2:.4f} / {e3:.4f}, flat {verdict.verdict} "
                         f"(growth {verdict.growth_exponent:.3f}), KMS verdicts "
                         f"{ {b: v.verdict for b, v in kms.items()} }, {elapsed:.1f} s")
    assert ok, [k for k, v in checks.items() if not v]


@pytest.mark.xfail(strict=True, reason="the KMS-weighted I(T) has a t^{-3/2} tail worth about "
                                       "sqrt(pi) beta T^{-1/2}, far above 1e-3 at T = 10^3")
@pytest.mark.parametrize("beta", BETAS)
def test_criterion_8_kms_tail_at_1e3(criterion_log, beta):
    v = scattering_integral(gaussian_probe(beta=beta), T_GRID)
    ok = v.verdict == "converged" and v.tail_sup <= 1e-3
    criterion_log("8 (KMS tail)", ok, f"beta = {beta}: verdict {v.verdict}, tail_sup = {v.tail_sup:.3e} "
                                      f"over T in [100, 1000] (needs <= 1e-3; analytic "
                                      f"{np.sqrt(np.pi) * beta * (100 ** -0.5 - 1000 ** -0.5):.3e})")
    assert ok


def test_criterion_9_spin_enlargement(criterion_log):
    rng = make_rng(909)
    deg_sigma, deg_drift, split_flags = 0.0, 0.0, []
    for L in (8, 16):
        grid = MomentumGrid(L, 2)
        h = -np.cos(grid.points)
        r = rng.uniform(0.1, 0.9, L)
        f = rng.normal(size=L) + 1j * rng.normal(size=L)
        g = rng.normal(size=L) + 1j * rng.normal(size=L)
        deg = OneParticleModel(grid, np.stack([r, r], 1), np.stack([h, h], 1))
        split = OneParticleModel(grid, np.stack([r, np.clip(r + 0.05, 0, 1)], 1),
                                 np.stack([h, h + 0.3 * np.cos(2 * grid.points)], 1))
        for e in spin_center_enlargement(deg, f, g).entries:
            if e["alpha"] != e["beta"]:
                deg_sigma, deg_drift = max(deg_sigma, e["sigma_max"]), max(deg_drift, e["drift"])
        split_flags += [e["central"] for e in spin_center_enlargement(split, f, g).entries
                        if e["alpha"] != e["beta"]]
    ok = deg_sigma <= 1e-9 and deg_drift <= 1e-9 and not any(split_flags)
    criterion_log(9, ok, f"degenerate cross-sector |sigma| = {deg_sigma:.1e}, drift {deg_drift:.1e}; "
                         f"split cross-sector flagged central: {any(split_flags)}")
    assert ok


def test_criterion_10_full_suite_determinism(criterion_log):
    a, _ = run_experiment("full-suite", overrides={"seed": 1010})
    b, _ = run_experiment("full-suite", overrides={"seed": 1010})
    ok = dumps_report(a) == dumps_report(b) and a["passed"]
    criterion_log(10, ok, f"two full-suite runs identical: {dumps_report(a) == dumps_report(b)}, "
                          f"all experiments passed: {a['passed']}")
    assert ok
