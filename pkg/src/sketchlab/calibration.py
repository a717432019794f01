"""Calibration of the unspecified absolute constants against fixed fixtures.

Each constant is chosen from a pre-registered grid on a calibration seed:
the tightest value whose empirical tail stays below half the bound wherever
the bound is informative (below 1). The chosen values, the fixtures' derived
quantities and the pass rates of the embedding constants are written to
``constants.json``. Acceptance checks then re-test on fresh seeds.
"""
from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from . import chaos, embedding, fedsim, geometry
from .regression import gen_regression, fit_sketched, prediction_error, regression_bound_terms, sparse_unit_beta
from .sketch import RandomSource, make_sketch, sample_subgaussian

FIXTURE_SEED = 20240
C1_GRID = (0.25, 0.5, 1.0)
C2_GRID = tuple(2.0 ** -k for k in range(6, -1, -1))  # 1/64 ... 1
HW_GRID = C2_GRID
FED_C_GRID = (0.125, 0.25, 0.5, 1.0, 2.0, 4.0)
EPS_POINTS = 10
MARGIN = 0.5

REGRESSION_FIXTURE = {"d": 64, "n": 512, "b": 32, "s": 8, "sigma": 0.1, "delta": 0.05, "n_probes": 32}
FED_FIXTURE = {"d": 64, "n_g": 16, "n_h": 8, "b": 32, "delta": 0.05}
CHAOS_FIXTURE = {"size": 4, "m": 8, "n": 8, "n_mc": 10_000}
HW_FIXTURE = {"n": 20}


def _src(i: int) -> RandomSource:
    return RandomSource(FIXTURE_SEED, i)


# fixtures ------------------------------------------------------------------

def chaos_fixture_sets():
    """Two fixed 4-element sets of 8 x 8 matrices (entries N(0, 1/8))."""
    f = CHAOS_FIXTURE
    shape = (f["size"], f["m"], f["n"])
    Ms = _src(0).generator().standard_normal(shape) / math.sqrt(f["n"])
    Ns = _src(1).generator().standard_normal(shape) / math.sqrt(f["n"])
    return geometry.MatrixSet(Ms), geometry.MatrixSet(Ns)


def chaos_fixture_profiles():
    Ms, Ns = chaos_fixture_sets()
    n_mc = CHAOS_FIXTURE["n_mc"]
    return (geometry.complexity_profile(Ms, n_mc, _src(2)),
            geometry.complexity_profile(Ns, n_mc, _src(3)))


def hw_fixture_matrix() -> np.ndarray:
    n = HW_FIXTURE["n"]
    return _src(4).generator().standard_normal((n, n)) / math.sqrt(n)


def fed_fixture_sets():
    """Unit gradient-like vectors ``G`` and orthonormal eigenvectors ``H``."""
    f = FED_FIXTURE
    G = _src(5).generator().standard_normal((f["n_g"], f["d"]))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    A = _src(6).generator().standard_normal((f["d"], f["d"]))
    _, vecs = np.linalg.eigh(A + A.T)
    H = vecs[:, -f["n_h"]:].T.copy()
    return G, H


def regression_probes(cfg: dict = REGRESSION_FIXTURE) -> np.ndarray:
    P = _src(7).generator().standard_normal((cfg["n_probes"], cfg["d"]))
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def regression_widths(cfg: dict = REGRESSION_FIXTURE) -> tuple[float, float]:
    """Width surrogates for the probe set and a parameter set of equal size."""
    w = geometry.finite_width_bound(regression_probes(cfg))
    return w, w


def regression_trial(seed: int, trial: int, cfg: dict = REGRESSION_FIXTURE):
    """One trial of the regression fixture; returns ``(error, bound terms)``."""
    base = RandomSource(int(seed), int(trial))
    beta = sparse_unit_beta(cfg["d"], cfg["s"], base.spawn(0))
    inst = gen_regression(cfg["d"], cfg["n"], beta, cfg["sigma"], base.spawn(1))
    fit = fit_sketched(inst, cfg["b"], src=base.spawn(2))
    wB, wX = regression_widths(cfg)
    terms = regression_bound_terms(inst, fit, wB, wX, cfg["delta"])
    return prediction_error(fit, inst, regression_probes(cfg)), terms


# empirical tails -------------------------------------------------------------

def eps_grid(scale: float, points: int = EPS_POINTS) -> np.ndarray:
    return np.linspace(0.0, 5.0, points) * scale


def exceedance(samples: np.ndarray, levels: np.ndarray) -> np.ndarray:
    """Fraction of samples ``>= level`` for each level."""
    s = np.sort(np.asarray(samples))
    return 1.0 - np.searchsorted(s, levels, side="left") / s.size


def _dominated(emp: np.ndarray, bound: np.ndarray, margin: float = MARGIN) -> bool:
    informative = bound < 1.0
    return bool(np.all(emp[informative] <= margin * bound[informative]))


def chaos_tail_table(samples, bt: chaos.BoundTriple, eps: np.ndarray):
    emp = exceedance(samples, bt.threshold + eps)
    bound = np.array([chaos.tail_bound(bt, e) for e in eps])
    return emp, bound


def hw_samples(A: np.ndarray, kind, n: int, src: RandomSource, chunk: int = 20_000) -> np.ndarray:
    """``| ||A xi||^2 - ||A||_F^2 |`` for ``n`` draws from per-chunk streams."""
    fro2 = float(np.sum(A * A))
    out = np.empty(n)
    for c, start in enumerate(range(0, n, chunk)):
        stop = min(start + chunk, n)
        X = sample_subgaussian(src.spawn(c), kind, (stop - start) * A.shape[1]).reshape(stop - start, -1)
        Y = X @ A.T
        out[start:stop] = np.abs(np.einsum("ij,ij->i", Y, Y) - fro2)
    return out


def hw_tail_table(samples, A, c: float, eps: np.ndarray):
    emp = exceedance(samples, eps)
    bound = np.array([chaos.hanson_wright_tail(A, e, c) for e in eps])
    return emp, bound


def hw_eps_grid(A) -> np.ndarray:
    return eps_grid(float(np.linalg.norm(A.T @ A)))


def chaos_eps_grid(bt: chaos.BoundTriple) -> np.ndarray:
    return eps_grid(bt.V)


def fed_trial_errors(seed: int, trials: int) -> np.ndarray:
    G, H = fed_fixture_sets()
    b = FED_FIXTURE["b"]
    return np.array([fedsim.sketch_pair_error(G, H, make_sketch(b, G.shape[1], RandomSource(seed, i)))
                     for i in range(trials)])


def fed_bound() -> float:
    G, H = fed_fixture_sets()
    wG, _ = geometry.gaussian_width_vectors(G, 10_000, _src(8))
    wH, _ = geometry.gaussian_width_vectors(H, 10_000, _src(9))
    f = FED_FIXTURE
    return fedsim.sketch_guarantee_bound(wG, wH, 1.0, 1.0, f["b"], f["delta"])


# calibration run -------------------------------------------------------------

def calibrate_chaos(kind, seed: int, trials: int, profiles=None) -> dict:
    Ms, Ns = chaos_fixture_sets()
    pM, pN = profiles if profiles is not None else chaos_fixture_profiles()
    samples = chaos.mc_deviation_study(Ms, Ns, kind, trials, 1, RandomSource(seed, 10)).samples
    chosen = None
    for c1 in C1_GRID:  # smallest c1 first, then largest c2
        for c2 in reversed(C2_GRID):
            bt = chaos.bound_triple(pM, pN, c1, c2)
            emp, bound = chaos_tail_table(samples, bt, chaos_eps_grid(bt))
            if _dominated(emp, bound):
                chosen = (c1, c2)
                break
        if chosen:
            break
    if chosen is None:
        chosen = (max(C1_GRID), min(C2_GRID))
    return {"c1": chosen[0], "c2": chosen[1]}


def calibrate_hw(kind, seed: int, trials: int) -> float:
    A = hw_fixture_matrix()
    samples = hw_samples(A, kind, trials, RandomSource(seed, 11))
    eps = hw_eps_grid(A)
    for c in reversed(HW_GRID):
        emp, bound = hw_tail_table(samples, A, c, eps)
        if _dominated(emp, bound):
            return c
    return min(HW_GRID)


def calibrate_fed(seed: int, trials: int) -> float:
    errs = fed_trial_errors(seed, trials)
    Z = fed_bound()
    delta = FED_FIXTURE["delta"]
    for c in FED_C_GRID:
        if np.mean(errs <= c * Z) >= 1.0 - delta:
            return c
    return max(FED_C_GRID)


def embedding_pass_rates(seed: int, trials: int) -> dict:
    gen = RandomSource(seed, 12).generator()
    X = gen.standard_normal((64, 512))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    b_jlt = embedding.jlt_required_dim(0.25, 64, embedding.JLT_C)
    jlt = np.mean([embedding.check_rip(make_sketch(b_jlt, 512, RandomSource(seed, 1000 + i)), X, 0.25).passed
                   for i in range(trials)])
    U, V = X[:32], X[32:]
    wU, wV = geometry.finite_width_bound(U), geometry.finite_width_bound(V)
    b_in = embedding.inner_required_dim(0.3, wU, wV, embedding.INNER_C)
    inner = np.mean([embedding.check_inner_products(make_sketch(b_in, 512, RandomSource(seed, 5000 + i)),
                                                    U, V, 0.3).passed for i in range(trials)])
    return {"jlt_b": b_jlt, "jlt_pass_rate": float(jlt), "inner_b": b_in, "inner_pass_rate": float(inner)}


def run_calibration(seed: int = 2024, trials: int = 20_000, emb_trials: int = 100,
                    reg_trials: int = 200, fed_trials: int = 500) -> dict:
    """Full calibration; returns the content of ``constants.json``."""
    profiles = chaos_fixture_profiles()
    consts = {
        "calibration_seed": int(seed),
        "c_width": 1.0,
        "chaos": {kind: calibrate_chaos(kind, seed, trials, profiles)
                  for kind in ("gaussian_unit", "rademacher")},
        "hanson_wright_c": {kind: calibrate_hw(kind, seed, trials) for kind in ("gaussian_unit", "rademacher")},
        "fed_c": calibrate_fed(seed, fed_trials),
        "fed_bound_Z": fed_bound(),
        "embedding": {"jlt_c": embedding.JLT_C, "inner_c": embedding.INNER_C,
                      **embedding_pass_rates(seed, emb_trials)},
    }
    pM, pN = profiles
    consts["chaos_fixture"] = {"profile_M": _profile_dict(pM), "profile_N": _profile_dict(pN)}
    wB, wX = regression_widths()
    reg = [regression_trial(seed, i) for i in range(reg_trials)]
    consts["regression"] = {
        **REGRESSION_FIXTURE, "wB": wB, "wX": wX,
        "coverage": float(np.mean([e <= t["total"] for e, t in reg])),
        "example_terms": reg[0][1],
    }
    consts["thresholds"] = {"jlt_pass": 0.95, "inner_pass": 0.90, "regression_coverage": 0.95,
                            "fed_coverage": 1.0 - 2 * FED_FIXTURE["delta"]}
    return consts


def _profile_dict(p: geometry.ComplexityProfile) -> dict:
    return {"d_F": p.d_F, "d_op": p.d_op, "width_mean": p.width_mean, "width_stderr": p.width_stderr,
            "gamma2_upper": p.gamma2_upper, "n_mc": p.n_mc}


def write_constants(consts: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(consts, indent=2, sort_keys=True) + "\n")
    return path


def load_constants(path=None) -> dict:
    """Read ``constants.json``; defaults to the copy shipped with the package."""
    if path is None:
        text = resources.files("sketchlab").joinpath("fixtures/constants.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)
