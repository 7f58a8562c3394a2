"""
Command-line experiment runner.

Every subcommand resolves a flat configuration (built-in defaults, then the
experiment's own defaults, then a JSON file, then command-line flags), runs
a set of checks and writes a deterministic JSON report.  Exit codes: 0 when
every check passed, 1 when a check failed or a numeric error occurred, 2 for
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .car_wick import GaugePolynomial, quasifree_expectation
from .ccr_weyl import (
    SymplecticSpace,
    bogoliubov,
    build_complex_structure,
    canonical_basis,
    hamiltonian_flow,
    kms_weyl_covariance,
    split_degenerate,
)
from .errors import FluctuonError
from .fluctuation import (
    FluctuationGenerator,
    build_gram,
    center_kernel,
    covariance,
    fluctuation_state,
    time_invariance_drift,
    variance_closed_form,
)
from .fock_oracle import build_rep, oracle_expectation
from .one_particle import MomentumGrid, OneParticleModel, kms_symbol
from .product_chain import (
    SiteModel,
    condensate_basis,
    maximality_witness,
    quasiperiodicity_report,
    site_gram,
)
from .sampling import make_rng, random_function, random_model, random_polynomial, random_quadratic, random_self_adjoint
from .scattering import (
    bump_probe,
    gaussian_closed_form,
    gaussian_kms_closed_form,
    gaussian_probe,
    oscillatory_G,
    scattering_integral,
)

SCHEMA_VERSION = 1

EXPERIMENTS = ("wick-check", "center-scan", "condensate", "time-invariance",
               "product-chain", "weyl", "scattering")

# key -> (default, validator, help)
_POS_INT = ("positive integer", lambda v: isinstance(v, int) and not isinstance(v, bool) and v > 0)
_NONNEG_INT = ("non-negative integer", lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0)
_POS_REAL = ("positive number", lambda v: isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0)
_REAL = ("number", lambda v: isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v))
_OPT_POS_REAL = ("positive number or null", lambda v: v is None or _POS_REAL[1](v))
_OPT_PATH = ("path string or null", lambda v: v is None or isinstance(v, str))
_OPT_LIST = ("list of numbers or null",
             lambda v: v is None or (isinstance(v, list) and all(_REAL[1](x) for x in v)))
_SEED = ("integer in [0, 2^64)", lambda v: isinstance(v, int) and not isinstance(v, bool) and 0 <= v < 2**64)


def _choice(*opts):
    return (f"one of {', '.join(map(str, opts))}", lambda v: v in opts)


def _rho_spec(v):
    if v in ("random", "pure", "fermi"):
        return True
    return _REAL[1](v) and 0.0 <= v <= 1.0


SCHEMA = {
    "experiment": (None, _choice(*EXPERIMENTS, "full-suite"), "experiment to run"),
    "seed": (0, _SEED, "seed of the PCG64 generator"),
    "L": (8, _POS_INT, "number of lattice sites / momenta"),
    "s": (1, _POS_INT, "internal (spin) dimension"),
    "rho": ("random", ("'random', 'pure', 'fermi' or a number in [0, 1]", _rho_spec), "two-point symbol"),
    "dispersion": ("cos", _choice("cos", "random"), "one-particle energies"),
    "beta": (None, _OPT_POS_REAL, "inverse temperature (Fermi symbol, Weyl KMS covariance, scattering KMS factor)"),
    "mu": (0.0, _REAL, "chemical potential for rho='fermi'"),
    "z": (0.5, ("number in (0, 1)", lambda v: _REAL[1](v) and 0 < v < 1), "fugacity for the Weyl KMS covariance"),
    "degree": (4, _choice(2, 4, 6, 8), "total degree of random non-quadratic generators"),
    "samples": (20, _POS_INT, "number of random samples"),
    "n_quadratic": (2, _NONNEG_INT, "quadratic generators in center-scan"),
    "n_generators": (6, _POS_INT, "total generators in center-scan"),
    "n": (3, _POS_INT, "site dimension for product-chain"),
    "rho0": (None, _OPT_LIST, "diagonal of the site state (normalised; null = random distinct)"),
    "h_diag": (None, _OPT_LIST, "diagonal site Hamiltonian (null = 0, 1, ..., n-1)"),
    "dim": (10, _POS_INT, "dimension of random symplectic forms in weyl"),
    "phase": ("p2", _choice("p1", "p2", "p3"), "scattering phase p^k"),
    "weight": ("gauss", _choice("gauss", "bump"), "scattering weight"),
    "t_max": (10.0, _POS_REAL, "time horizon for drift and G(t) sweeps"),
    "t_points": (101, _POS_INT, "points of the time grid"),
    "T_max": (1000.0, _POS_REAL, "largest T of the I(T) sweep"),
    "T_points": (31, _POS_INT, "points of the geometric T grid from 1 to T_max"),
    "wick_tol": (1e-10, _POS_REAL, "Wick vs Fock tolerance"),
    "sigma_tol": (1e-9, _POS_REAL, "tolerance for vanishing sigma"),
    "kernel_tol": (1e-9, _POS_REAL, "singular-value threshold of the kernel"),
    "positivity_tol": (1e-10, _POS_REAL, "allowed negative eigenvalue of cov + (i/2) sigma"),
    "drift_tol": (1e-9, _POS_REAL, "time-invariance tolerance"),
    "drift_min": (1e-3, _POS_REAL, "drift a generic quartic must exceed"),
    "tail_tol": (1e-3, _POS_REAL, "Cauchy tail tolerance for a converged verdict"),
    "output": ("fluctuon_report.json", ("path string", lambda v: isinstance(v, str)), "JSON report path"),
    "csv": (None, _OPT_PATH, "CSV plot-data path (null = none)"),
    "meta": (None, _OPT_PATH, "run metadata path (null = <output stem>.meta.json)"),
}

EXPERIMENT_DEFAULTS = {
    "wick-check": {"L": 4, "samples": 200},
    "center-scan": {"L": 16},
    "condensate": {"L": 16, "samples": 100},
    "time-invariance": {"L": 16},
    "product-chain": {"samples": 100},
    "weyl": {"samples": 50},
    "scattering": {"t_max": 1000.0},
}


class ConfigError(ValueError):
    pass


def resolve_config(experiment, file_values=None, overrides=None) -> dict:
    cfg = {k: v[0] for k, v in SCHEMA.items()}
    cfg.update(EXPERIMENT_DEFAULTS.get(experiment, {}))
    for source in (file_values or {}, overrides or {}):
        unknown = sorted(set(source) - set(SCHEMA))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        cfg.update(source)
    cfg["experiment"] = experiment
    for key, (_, (desc, ok), _) in SCHEMA.items():
        if not ok(cfg[key]):
            raise ConfigError(f"{key}={cfg[key]!r}: expected {desc}")
    if cfg["L"] < 2:
        raise ConfigError("L must be >= 2")
    if experiment == "wick-check" and cfg["L"] * cfg["s"] > 6:
        raise ConfigError("wick-check needs L * s <= 6 (Fock dimension 2^(L s))")
    if cfg["rho"] == "fermi" and cfg["beta"] is None:
        raise ConfigError("rho='fermi' needs beta")
    if experiment == "center-scan" and cfg["n_quadratic"] > cfg["n_generators"]:
        raise ConfigError("n_quadratic exceeds n_generators")
    if experiment == "weyl" and cfg["dim"] % 2:
        raise ConfigError("weyl needs an even dim")
    if cfg["T_points"] < 3 or cfg["t_points"] < 2:
        raise ConfigError("T_points must be >= 3 and t_points >= 2")
    return cfg


def load_config_file(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _check(value, threshold, passed):
    return {"value": _jsonable(value), "threshold": threshold, "passed": bool(passed)}


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _model(cfg, rng) -> OneParticleModel:
    grid = MomentumGrid(cfg["L"], cfg["s"])
    if cfg["rho"] == "fermi":
        h = np.repeat(-np.cos(grid.points)[:, None], grid.spin_dim, axis=1) if cfg["dispersion"] == "cos" \
            else rng.normal(size=grid.shape)
        return kms_symbol(grid, h, cfg["beta"], cfg["mu"])
    if isinstance(cfg["rho"], str):
        return random_model(grid, rng, pure=cfg["rho"] == "pure", dispersion=cfg["dispersion"])
    base = random_model(grid, rng, dispersion=cfg["dispersion"])
    return OneParticleModel(grid, np.full(grid.shape, float(cfg["rho"])), base.dispersion)


def _t_grid(cfg):
    return np.linspace(0.0, cfg["t_max"], cfg["t_points"])


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_wick_check(cfg):
    rng = make_rng(cfg["seed"])
    worst, rows = 0.0, []
    for i in range(cfg["samples"]):
        model = random_model(MomentumGrid(int(rng.integers(2, cfg["L"] + 1)), cfg["s"]), rng)
        P = random_polynomial(model.grid, rng, max_half_degree=cfg["degree"] // 2, n_terms=3)
        wick = quasifree_expectation(P, model)
        fock = oracle_expectation(P, build_rep(model))
        err = abs(wick - fock)
        worst = max(worst, err)
        rows.append((i, model.grid.L, P.degree, err))
    checks = {"wick_vs_fock": _check(worst, cfg["wick_tol"], worst <= cfg["wick_tol"])}
    series = {"errors": (["sample", "L", "degree", "abs_error"], rows)}
    return checks, {"samples": cfg["samples"], "max_error": worst}, series


def run_center_scan(cfg):
    rng = make_rng(cfg["seed"])
    model = _model(cfg, rng)
    grid = model.grid
    nq = cfg["n_quadratic"]
    gens = [FluctuationGenerator(random_quadratic(grid, rng), model) for _ in range(nq)]
    gens += [FluctuationGenerator(random_self_adjoint(grid, rng, cfg["degree"] // 2), model)
             for _ in range(cfg["n_generators"] - nq)]
    gram = build_gram(gens, validate=False, max_degree=2 * cfg["degree"])
    kernel = center_kernel(gram, cfg["kernel_tol"])
    svals = np.linalg.svd(gram.sigma, compute_uv=False)
    quad_sigma = float(np.abs(gram.sigma[:nq]).max()) if nq else 0.0
    drift = max((time_invariance_drift(g, _t_grid(cfg)) for g in gens[:nq]), default=0.0)
    # every kernel combination must pair to zero with every generator
    leak = max((float(np.abs(gram.sigma @ v).max()) for v in kernel), default=0.0)
    checks = {
        "quadratic_sigma": _check(quad_sigma, cfg["sigma_tol"], quad_sigma <= cfg["sigma_tol"]),
        "kernel_contains_quadratics": _check(len(kernel), nq, len(kernel) >= nq),
        "kernel_leak": _check(leak, 10 * cfg["kernel_tol"], leak <= 10 * cfg["kernel_tol"]),
        "positivity": _check(gram.positivity_min_eig, -cfg["positivity_tol"],
                             gram.positivity_min_eig >= -cfg["positivity_tol"]),
        "quadratic_drift": _check(drift, cfg["drift_tol"], drift <= cfg["drift_tol"]),
    }
    data = {
        "kernel_dim": len(kernel),
        "min_singular_value": float(svals.min()),
        "singular_values": svals,
        "positivity_min_eig": gram.positivity_min_eig,
        "drift_max": drift,
        "sigma": gram.sigma,
        "covariance": gram.covariance,
    }
    return checks, data, {"gram": (["i", "j", "sigma", "covariance"], gram.rows())}


def run_condensate(cfg):
    rng = make_rng(cfg["seed"])
    model = _model(cfg, rng)
    grid = model.grid
    worst, rows = 0.0, []
    for i in range(cfg["samples"]):
        f = random_function(grid, rng)
        A = FluctuationGenerator(GaugePolynomial.quadratic(f, f), model)
        direct, closed = covariance(A, A), variance_closed_form(f, model)
        worst = max(worst, abs(direct - closed))
        rows.append((i, direct, closed))
    pure = random_model(grid, rng, pure=True, dispersion=cfg["dispersion"])
    pure_w, pure_state = 0.0, 1.0
    for _ in range(min(cfg["samples"], 20)):
        A = FluctuationGenerator(random_quadratic(grid, rng), pure)
        pure_w = max(pure_w, abs(covariance(A, A)))
        pure_state = min(pure_state, fluctuation_state(A, 3.0))
    checks = {
        "variance_formula": _check(worst, 1e-12, worst <= 1e-12),
        "pure_state_variance": _check(pure_w, 1e-12, pure_w <= 1e-12),
        "pure_state_expectation_one": _check(pure_state, 1.0 - 1e-12, pure_state >= 1.0 - 1e-12),
    }
    data = {"max_error": worst, "pure_max_variance": pure_w}
    return checks, data, {"variance": (["sample", "direct", "closed_form"], rows)}


def run_time_invariance(cfg):
    rng = make_rng(cfg["seed"])
    model = _model(cfg, rng)
    grid = model.grid
    tg = _t_grid(cfg)
    quad = [FluctuationGenerator(random_quadratic(grid, rng), model) for _ in range(cfg["samples"] // 4 or 1)]
    quartic = FluctuationGenerator(random_self_adjoint(grid, rng, 2), model)
    qdrift = max(time_invariance_drift(A, tg) for A in quad)
    rows = [(float(t), time_invariance_drift(quartic, [t])) for t in tg]
    gdrift = max(r[1] for r in rows)
    checks = {
        "quadratic_drift": _check(qdrift, cfg["drift_tol"], qdrift <= cfg["drift_tol"]),
        "quartic_drift": _check(gdrift, cfg["drift_min"], gdrift >= cfg["drift_min"]),
    }
    data = {"quadratic_drift_max": qdrift, "quartic_drift_max": gdrift}
    return checks, data, {"drift": (["t", "quartic_drift"], rows)}


def run_product_chain(cfg):
    rng = make_rng(cfg["seed"])
    n = cfg["n"]
    if cfg["rho0"] is None:
        d = rng.dirichlet(np.ones(n))
    else:
        if len(cfg["rho0"]) != n or min(cfg["rho0"]) < 0 or sum(cfg["rho0"]) <= 0:
            raise ConfigError("rho0 must list n non-negative numbers with positive sum")
        d = np.asarray(cfg["rho0"], dtype=float) / sum(cfg["rho0"])
    h = np.arange(n, dtype=float) if cfg["h_diag"] is None else np.asarray(cfg["h_diag"], dtype=float)
    if len(h) != n:
        raise ConfigError("h_diag must have n entries")
    site = SiteModel(np.diag(d), h)
    distinct = bool(np.min(np.diff(np.sort(d))) > 1e-9) if n > 1 else True
    kernel = condensate_basis(site, cfg["kernel_tol"])
    found = 0
    for _ in range(cfg["samples"]):
        X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        A = X + X.conj().T
        try:
            maximality_witness(A, site)
            found += 1
        except FluctuonError:
            pass
    tracial = float(np.abs(site_gram(SiteModel.tracial(n, h))).max())
    E = np.zeros((n, n), dtype=complex)
    if n > 1:
        E[0, n - 1] = E[n - 1, 0] = 1.0
    qp = quasiperiodicity_report(E, site, _t_grid(cfg))
    checks = {
        "tracial_gram_zero": _check(tracial, 1e-14, tracial <= 1e-14),
        "witness_found": _check(found, cfg["samples"], found == cfg["samples"]),
    }
    if distinct:
        checks["kernel_dim"] = _check(len(kernel), n - 1, len(kernel) == n - 1)
    data = {"rho0": d, "h_diag": h, "distinct_eigenvalues": distinct, "kernel_dim": len(kernel),
            "period": qp["period"], "recurrence_times": qp["recurrence_times"]}
    return checks, data, {"recurrence": (["t", "distance"], list(zip(qp["times"], qp["distances"])))}


def _random_form(dim, rng):
    X = rng.normal(size=(dim, dim))
    return X - X.T


def run_weyl(cfg):
    rng = make_rng(cfg["seed"])
    worst = {"square": 0.0, "compatibility": 0.0, "pairing": 0.0, "min_metric_eig": np.inf}
    for _ in range(cfg["samples"]):
        dim = 2 * int(rng.integers(1, cfg["dim"] // 2 + 1))
        space = SymplecticSpace(_random_form(dim, rng))
        r = build_complex_structure(space).residuals()
        worst["square"] = max(worst["square"], r["square"])
        worst["compatibility"] = max(worst["compatibility"], r["compatibility"])
        worst["min_metric_eig"] = min(worst["min_metric_eig"], r["min_eig"])
        chi, eta, _ = canonical_basis(space)
        X, Y = np.array(chi), np.array(eta)
        S = space.sigma
        pair = max(np.abs(X @ S @ Y.T - np.eye(len(chi))).max(), np.abs(X @ S @ X.T).max(), np.abs(Y @ S @ Y.T).max())
        worst["pairing"] = max(worst["pairing"], float(pair))
    # thermal covariance and its transport under a Hamiltonian flow
    h = rng.uniform(0.1, 2.0, size=cfg["dim"] // 2)
    cov = kms_weyl_covariance(h, cfg["beta"] or 1.0, cfg["z"])
    X = rng.normal(size=(cfg["dim"], cfg["dim"]))
    T = hamiltonian_flow(cov.space, X @ X.T + np.eye(cfg["dim"]), 0.7)
    moved = bogoliubov(T, cov.space, tol=1e-9).on_covariance(cov)
    # degenerate form: odd dimension leaves at least a one-dimensional kernel
    K, _ = split_degenerate(SymplecticSpace(_random_form(cfg["dim"] + 1, rng)))
    checks = {
        "J_squared": _check(worst["square"], 1e-12, worst["square"] <= 1e-12),
        "J_compatibility": _check(worst["compatibility"], 1e-12, worst["compatibility"] <= 1e-12),
        "J_metric_positive": _check(worst["min_metric_eig"], 0.0, worst["min_metric_eig"] > 0),
        "canonical_pairing": _check(worst["pairing"], 1e-10, worst["pairing"] <= 1e-10),
        "kms_positivity": _check(cov.positivity_min_eig, -cfg["positivity_tol"],
                                 cov.positivity_min_eig >= -cfg["positivity_tol"]),
        "flow_positivity": _check(moved.positivity_min_eig, -cfg["positivity_tol"],
                                  moved.positivity_min_eig >= -cfg["positivity_tol"]),
        "odd_kernel": _check(K.shape[1], 1, K.shape[1] >= 1),
    }
    data = {"worst": worst, "kms_occupations": cov.occupations}
    return checks, data, {}


def _probe(cfg):
    beta = cfg["beta"]
    if cfg["weight"] == "bump":
        if cfg["phase"] != "p1":
            raise ConfigError("the bump weight is paired with phase p1")
        return bump_probe(beta)
    return gaussian_probe(int(cfg["phase"][1]), beta)


def run_scattering(cfg):
    probe = _probe(cfg)
    T_grid = np.geomspace(1.0, cfg["T_max"], cfg["T_points"])
    verdict = scattering_integral(probe, T_grid, tail_tol=cfg["tail_tol"])
    tg = np.linspace(0.0, cfg["t_max"], cfg["t_points"])
    G = [oscillatory_G(probe, t) for t in tg]
    checks = {}
    if cfg["weight"] == "gauss" and cfg["phase"] == "p2":
        ref = gaussian_closed_form(tg) if cfg["beta"] is None else gaussian_kms_closed_form(tg, cfg["beta"])
        err = float(np.max(np.abs(np.array(G) - ref)))
        checks["closed_form"] = _check(err, 1e-7, err <= 1e-7)
        expected = "diverged" if cfg["beta"] is None else "converged"
        checks["verdict"] = _check(verdict.verdict, expected, verdict.verdict == expected)
    series = {
        "G": (["t", "re", "im", "abs"], [(float(t), g.real, g.imag, abs(g)) for t, g in zip(tg, G)]),
        "I": (["T", "re", "im", "abs"], [(T, v.real, v.imag, abs(v)) for T, v in verdict.I_values]),
    }
    data = verdict.as_dict()
    data["probe"] = probe.name
    data["I_values"] = verdict.I_values
    return checks, data, series


RUNNERS = {
    "wick-check": run_wick_check,
    "center-scan": run_center_scan,
    "condensate": run_condensate,
    "time-invariance": run_time_invariance,
    "product-chain": run_product_chain,
    "weyl": run_weyl,
    "scattering": run_scattering,
}


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def emit_plot_data(series, path) -> Path:
    """Write ``(columns, rows)`` as CSV with a header row; rows keep their order."""
    columns, rows = series
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            if len(row) != len(columns):
                raise ValueError(f"row has {len(row)} fields, header has {len(columns)}")
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def _emit_series(all_series: dict, path):
    if path is None or not all_series:
        return []
    path = Path(path)
    if len(all_series) == 1:
        return [str(emit_plot_data(next(iter(all_series.values())), path))]
    return [str(emit_plot_data(s, path.with_name(f"{path.stem}.{name}{path.suffix or '.csv'}")))
            for name, s in all_series.items()]


def _config_for_report(cfg):
    return {k: v for k, v in cfg.items() if k not in ("output", "csv", "meta")}


def run_experiment(experiment, file_values=None, overrides=None) -> tuple[dict, dict]:
    """Run one experiment (or the full suite) and return ``(report, series)``."""
    if experiment == "full-suite":
        parts, series = {}, {}
        for name in EXPERIMENTS:
            sub_file = {k: v for k, v in (file_values or {}).items() if k != "experiment"}
            rep, ser = run_experiment(name, sub_file, overrides)
            parts[name] = rep
            series.update({f"{name}.{k}": v for k, v in ser.items()})
        violations = [f"{n}:{v}" for n, r in parts.items() for v in r["violations"]]
        report = {"schema_version": SCHEMA_VERSION, "experiment": "full-suite", "passed": not violations,
                  "violations": violations, "results": parts}
        return report, series
    cfg = resolve_config(experiment, file_values, overrides)
    report = {"schema_version": SCHEMA_VERSION, "experiment": experiment, "config": _config_for_report(cfg)}
    try:
        checks, data, series = RUNNERS[experiment](cfg)
    except FluctuonError as exc:
        report.update(passed=False, violations=["error"], checks={},
                      error={"type": type(exc).__name__, "message": str(exc),
                             "achieved": getattr(exc, "achieved", None)})
        return report, {}
    violations = sorted(k for k, c in checks.items() if not c["passed"])
    report.update(passed=not violations, violations=violations, checks=checks, data=_jsonable(data))
    return report, series


def dumps_report(report) -> str:
    return json.dumps(_jsonable(report), sort_keys=True, indent=2, allow_nan=True) + "\n"


def _write_outputs(report, series, cfg_paths):
    out = Path(cfg_paths["output"])
    out.write_text(dumps_report(report))
    meta = Path(cfg_paths["meta"]) if cfg_paths.get("meta") else out.with_name(out.stem + ".meta.json")
    written = _emit_series(series, cfg_paths.get("csv"))
    meta.write_text(json.dumps({"timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "version": __version__,
                                "report": str(out), "csv": written}, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _flag_type(key):
    default = SCHEMA[key][0]
    if key in ("rho",):
        return lambda s: s if s in ("random", "pure", "fermi") else float(s)
    if key in ("rho0", "h_diag"):
        return lambda s: [float(x) for x in s.split(",")]
    if key in ("degree", "seed") or isinstance(default, int) and not isinstance(default, bool):
        return int
    if isinstance(default, float) or key == "beta":
        return float
    return str


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    for key in SCHEMA:
        if key == "experiment":
            continue
        common.add_argument("--" + key.replace("_", "-"), dest=key, type=_flag_type(key), default=argparse.SUPPRESS, help=SCHEMA[key][2])
    parser = argparse.ArgumentParser(prog="fluctuon", description="Fluctuation-algebra experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("full-suite",):
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    sub.add_parser("run", parents=[common], help="run the experiment named in the config file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    ns = vars(args)
    command = ns.pop("command")
    config_path = ns.pop("config", None)
    overrides = ns
    try:
        file_values = load_config_file(config_path) if config_path else {}
        experiment = command
        if command == "run":
            experiment = overrides.get("experiment", file_values.get("experiment"))
            if experiment is None:
                raise ConfigError("'run' needs an experiment key in the config file")
        # validate output-related keys through the schema as well
        paths = resolve_config(experiment if experiment != "full-suite" else "weyl", file_values, overrides)
        report, series = run_experiment(experiment, file_values, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    _write_outputs(report, series, paths)
    if report.get("error"):
        err = report["error"]
        print(f"{experiment}: {err['type']}: {err['message']}", file=sys.stderr)
    for v in report["violations"]:
        print(f"violation: {v}", file=sys.stderr)
    print(f"{experiment}: {'passed' if report['passed'] else 'FAILED'} -> {paths['output']}")
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
