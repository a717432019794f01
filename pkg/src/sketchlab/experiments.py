"""Experiment registry behind the command-line runner.

Each experiment declares its parameter defaults (which also fix the
parameter types), the CSV column manifest, and a runner returning an
:class:`ExperimentResult`. Runners are deterministic in the configured seed:
trial ``i`` always draws from the same derived streams, and trial-level
parallelism uses an order-preserving map.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bandits, calibration, chaos, embedding, fedsim, geometry
from .report import histogram_series
from .sketch import RandomSource, make_sketch


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    trials: int
    threads: int
    out_dir: str
    params: dict = field(default_factory=dict)
    check: bool = False

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed, "trials": self.trials,
                "threads": self.threads, "out_dir": self.out_dir, **self.params}


@dataclass
class ExperimentResult:
    rows: list
    columns: list
    charts: list = field(default_factory=list)  # (filename, line_chart kwargs)
    checks: dict = field(default_factory=dict)  # name -> bool
    summary: dict = field(default_factory=dict)
    extra_csv: dict = field(default_factory=dict)  # filename -> (rows, columns)
    extra_json: dict = field(default_factory=dict)  # filename -> object


def ordered_map(fn, items, threads: int):
    """``map`` over a thread pool, results in input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _base(cfg: ExperimentConfig, **kw) -> dict:
    return {"experiment": cfg.experiment, "seed": cfg.seed, **kw}


def _constants(cfg) -> dict:
    path = cfg.params.get("constants") or None
    return calibration.load_constants(path)


# deviation -----------------------------------------------------------------

def run_deviation(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    consts = _constants(cfg)
    kind = p["kind"]
    c = consts["chaos"][kind]
    if p["fixture"]:
        Ms, Ns = calibration.chaos_fixture_sets()
        pM, pN = calibration.chaos_fixture_profiles()
    else:
        gen = RandomSource(cfg.seed, 40).generator()
        shape = (p["size"], p["m"], p["n"])
        Ms = geometry.MatrixSet(gen.standard_normal(shape) / math.sqrt(p["n"]))
        Ns = geometry.MatrixSet(gen.standard_normal(shape) / math.sqrt(p["n"]))
        pM = geometry.complexity_profile(Ms, p["n_mc"], RandomSource(cfg.seed, 41))
        pN = geometry.complexity_profile(Ns, p["n_mc"], RandomSource(cfg.seed, 42))
    bt = chaos.bound_triple(pM, pN, c["c1"], c["c2"])
    # trial i draws from stream (seed, 10).spawn(i); evaluation is vectorized
    samples = chaos.mc_deviation_study(Ms, Ns, kind, cfg.trials, 1, RandomSource(cfg.seed, 10)).samples
    eps = calibration.chaos_eps_grid(bt)
    emp, bound = calibration.chaos_tail_table(samples, bt, eps)
    rows = [_base(cfg, kind="sample", trial=i, value=float(v)) for i, v in enumerate(samples)]
    rows += [_base(cfg, kind="tail", eps=float(e), value=float(a), bound=float(b))
             for e, a, b in zip(eps, emp, bound)]
    edges, dens = histogram_series(samples)
    charts = [
        ("deviation_hist.svg", dict(series={"C(xi)": (edges, dens)}, title="Cross deviation",
                                    xlabel="deviation", ylabel="density", step=True)),
        ("tail.svg", dict(series={"empirical": (eps, emp), "bound": (eps, bound)},
                          title="Exceedance above c1 W + eps", xlabel="eps", ylabel="probability", logy=True)),
    ]
    return ExperimentResult(
        rows, ["experiment", "seed", "kind", "trial", "eps", "value", "bound"], charts,
        checks={"tail_dominance": bool(np.all(emp <= bound))},
        summary={"W": bt.W, "V": bt.V, "U": bt.U, "c1": bt.c1, "c2": bt.c2,
                 "mean": float(samples.mean()), "max": float(samples.max())},
    )


# scaling -------------------------------------------------------------------

def scaling_grid(t_max: int) -> list:
    return [2 ** k for k in range(int(math.log2(t_max)) + 1)]


def run_scaling(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    Ms, Ns = calibration.chaos_fixture_sets()
    grid = scaling_grid(p["t_max"])

    def work(k):
        T = grid[k]
        return chaos.mc_deviation_study(Ms, Ns, p["kind"], cfg.trials, T, RandomSource(cfg.seed, 100 + k)).samples

    samples = ordered_map(work, range(len(grid)), cfg.threads)
    medians = np.array([float(np.median(s)) for s in samples])
    slope = float(np.polyfit(np.log(grid), np.log(medians), 1)[0])
    rows = []
    for T, s in zip(grid, samples):
        rows += [_base(cfg, kind="sample", T=T, trial=i, deviation=float(v)) for i, v in enumerate(s)]
    rows += [_base(cfg, kind="median", T=T, deviation=m) for T, m in zip(grid, medians)]
    rows.append(_base(cfg, kind="slope", slope=slope))
    ref = medians[0] * np.sqrt(np.asarray(grid, dtype=float))
    charts = [("scaling.svg", dict(series={"median deviation": (grid, medians), "sqrt(T) reference": (grid, ref)},
                                   title=f"Median summed deviation (slope {slope:.3f})", xlabel="T",
                                   ylabel="median", logx=True, logy=True))]
    lo, hi = p["slope_lo"], p["slope_hi"]
    return ExperimentResult(rows, ["experiment", "seed", "kind", "T", "trial", "deviation", "slope"], charts,
                            checks={"sqrt_T_slope": lo <= slope <= hi}, summary={"slope": slope})


# embeddings ----------------------------------------------------------------

def _unit_rows(gen, n, d):
    X = gen.standard_normal((n, d))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _pass_result(cfg, b, reports, key):
    dist = np.array([r.max_inner_distortion if key == "inner" else r.max_norm_distortion for r in reports])
    passed = np.array([r.passed for r in reports])
    rows = [_base(cfg, trial=i, b=b, distortion=float(v), passed=bool(ok))
            for i, (v, ok) in enumerate(zip(dist, passed))]
    rate = float(passed.mean())
    edges, dens = histogram_series(dist, 30)
    charts = [(f"{cfg.experiment}_distortion.svg",
               dict(series={"worst distortion": (edges, dens)}, title=f"{cfg.experiment}: b={b}, pass rate {rate:.3f}",
                    xlabel="distortion", ylabel="density", step=True))]
    return ExperimentResult(rows, ["experiment", "seed", "trial", "b", "distortion", "passed"], charts,
                            checks={"pass_rate": rate >= cfg.params["pass_rate"]},
                            summary={"b": b, "pass_rate": rate})


def run_jlt(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    X = _unit_rows(RandomSource(cfg.seed, 30).generator(), p["N"], p["d"])
    b = embedding.jlt_required_dim(p["eps"], p["N"], p["c"])
    src = RandomSource(cfg.seed, 31)
    reports = ordered_map(lambda i: embedding.check_rip(make_sketch(b, p["d"], src.spawn(i)), X, p["eps"]),
                          range(cfg.trials), cfg.threads)
    return _pass_result(cfg, b, reports, "norm")


def run_inner(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    gen = RandomSource(cfg.seed, 32).generator()
    U = _unit_rows(gen, p["n_u"], p["d"])
    V = _unit_rows(gen, p["n_v"], p["d"])
    b = embedding.inner_required_dim(p["eps"], geometry.finite_width_bound(U), geometry.finite_width_bound(V), p["c"])
    src = RandomSource(cfg.seed, 33)
    reports = ordered_map(lambda i: embedding.check_inner_products(make_sketch(b, p["d"], src.spawn(i)), U, V, p["eps"]),
                          range(cfg.trials), cfg.threads)
    return _pass_result(cfg, b, reports, "inner")


# regression ----------------------------------------------------------------

def run_regress(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    fixture = {k: p[k] for k in calibration.REGRESSION_FIXTURE}
    out = ordered_map(lambda i: calibration.regression_trial(cfg.seed, i, fixture), range(cfg.trials), cfg.threads)
    rows = [_base(cfg, trial=i, error=e, bound=t["total"], noise=t["noise"], cross=t["cross"],
                  width=t["width"], tail=t["tail"], lambda_min=t["lambda_min"])
            for i, (e, t) in enumerate(out)]
    errs = np.array([e for e, _ in out])
    bounds = np.array([t["total"] for _, t in out])
    coverage = float(np.mean(errs <= bounds))
    e1, d1 = histogram_series(errs, 30)
    charts = [("regress_error.svg", dict(series={"prediction error": (e1, d1)},
                                         title=f"Max probe error (bound median {np.median(bounds):.3f})",
                                         xlabel="error", ylabel="density", step=True))]
    return ExperimentResult(rows, ["experiment", "seed", "trial", "error", "bound", "noise", "cross", "width",
                                   "tail", "lambda_min"], charts,
                            checks={"coverage": coverage >= p["coverage"]},
                            summary={"coverage": coverage, "median_error": float(np.median(errs))})


# bandits -------------------------------------------------------------------

def run_bandit(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    policies = bandits.POLICIES

    def work(i):
        return [bandits.run_trial(pol, p["d"], p["K"], p["T"], p["b"], p["s"], p["sigma"], cfg.seed, i,
                                  p["scenario"], p["lam"], p["delta"], p["rho"]) for pol in policies]

    per_trial = ordered_map(work, range(cfg.trials), cfg.threads)
    every = max(1, p["record_every"])
    T = p["T"]
    marks = sorted(set(range(every - 1, T, every)) | {T - 1})
    rows, timing = [], []
    curves = {}
    finals, walls = {}, {}
    for i, traces in enumerate(per_trial):
        for tr in traces:
            cum = tr.cum_regret
            c1 = np.cumsum(tr.term_I)
            c2 = np.cumsum(tr.term_II)
            rows += [_base(cfg, trial=i, policy=tr.policy, t=t + 1, cum_regret=float(cum[t]),
                           cum_term_I=float(c1[t]), cum_term_II=float(c2[t])) for t in marks]
            timing.append(_base(cfg, trial=i, policy=tr.policy, mean_wall_ns=float(tr.wall_ns.mean())))
            curves.setdefault(tr.policy, []).append(cum)
            finals.setdefault(tr.policy, []).append(float(cum[-1]))
            walls.setdefault(tr.policy, []).append(float(tr.wall_ns.mean()))
    mean_final = {k: float(np.mean(v)) for k, v in finals.items()}
    mean_wall = {k: float(np.mean(v)) for k, v in walls.items()}
    x = np.array(marks) + 1
    charts = [
        ("regret.svg", dict(series={k: (x, np.mean(v, axis=0)[marks]) for k, v in curves.items()},
                            title=f"Cumulative regret ({p['scenario']}, d={p['d']}, b={p['b']})",
                            xlabel="round", ylabel="cumulative regret")),
    ]
    checks = {
        "ucb_regret": mean_final["sk-LinUCB"] <= mean_final["LinUCB"],
        "ts_regret": mean_final["sk-LinTS"] <= mean_final["LinTS"],
        "ucb_time": mean_wall["sk-LinUCB"] < mean_wall["LinUCB"],
        "ts_time": mean_wall["sk-LinTS"] < mean_wall["LinTS"],
    }
    return ExperimentResult(rows, ["experiment", "seed", "trial", "policy", "t", "cum_regret", "cum_term_I",
                                   "cum_term_II"], charts, checks,
                            summary={"mean_final_regret": mean_final, "mean_wall_ns": mean_wall},
                            extra_csv={"timing.csv": (timing, ["experiment", "seed", "trial", "policy",
                                                               "mean_wall_ns"])})


# federated -----------------------------------------------------------------

def run_fedsim(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    fc = fedsim.FedConfig(C=p["C"], K=p["K"], T=p["T"], b=p["b"], eta_local=p["eta_local"],
                          eta_global=p["eta_global"], master_seed=cfg.seed)

    def work(i):
        model = fedsim.quad_model(p["d"], p["C"], p["mu"], p["heterogeneity"], RandomSource(cfg.seed, 2 * i))
        sk_tr = fedsim.run_sketch_dl(fc, model, p["shared_sketch"], sketch_src=RandomSource(cfg.seed, 2 * i + 1))
        return model, sk_tr, fedsim.run_unsketched_dl(fc, model)

    out = ordered_map(work, range(cfg.trials), cfg.threads)
    rows = []
    ok_fit = True
    ok_bytes = True
    fits = []
    for i, (model, s_tr, u_tr) in enumerate(out):
        for name, tr in (("sketched", s_tr), ("unsketched", u_tr)):
            rows += [_base(cfg, trial=i, kind="round", variant=name, t=t, loss=float(tr.loss[t]),
                           gap=float(tr.gap[t]), grad_norm=float(tr.grad_norm[t]), bytes_sent=int(tr.bytes_sent[t]))
                     for t in range(tr.loss.size)]
        slope, r2, npts = fedsim.fit_decay(s_tr)
        pred = fedsim.predicted_rate(fc, model.mu)
        fits.append((slope, r2))
        rows.append(_base(cfg, trial=i, kind="fit", variant="sketched", slope=slope, predicted=pred, r2=r2,
                          points=npts, kappa=model.kappa))
        ok_fit &= bool(r2 >= p["r2_min"] and abs(slope / pred - 1.0) <= p["slope_tol"])
        ratio = s_tr.bytes_sent[1:] / u_tr.bytes_sent[1: s_tr.bytes_sent.size]
        ok_bytes &= bool(np.all(ratio == p["b"] / p["d"]))
    model0, s0, u0 = out[0]
    t = np.arange(s0.loss.size)
    charts = [("loss.svg", dict(series={"sketched": (t, s0.gap), "unsketched": (np.arange(u0.loss.size), u0.gap)},
                                title="Loss gap L(theta_t) - L*", xlabel="round", ylabel="gap", logy=True))]
    return ExperimentResult(
        rows, ["experiment", "seed", "trial", "kind", "variant", "t", "loss", "gap", "grad_norm", "bytes_sent",
               "slope", "predicted", "r2", "points", "kappa"], charts,
        checks={"decay_fit": ok_fit, "bytes_ratio": ok_bytes},
        summary={"slopes": [f[0] for f in fits], "r2": [f[1] for f in fits]},
    )


# calibration ---------------------------------------------------------------

def _flatten(d: dict, prefix: str = ""):
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def run_calibrate(cfg: ExperimentConfig) -> ExperimentResult:
    p = cfg.params
    consts = calibration.run_calibration(cfg.seed, cfg.trials, p["emb_trials"], p["reg_trials"], p["fed_trials"])
    rows = [_base(cfg, key=k, value=v) for k, v in _flatten(consts)]
    return ExperimentResult(rows, ["experiment", "seed", "key", "value"], [],
                            extra_json={"constants.json": consts})


@dataclass(frozen=True)
class Experiment:
    runner: object
    defaults: dict
    trials: int


EXPERIMENTS = {
    "deviation": Experiment(run_deviation, {"kind": "gaussian_unit", "fixture": True, "size": 4, "m": 8, "n": 8,
                                            "n_mc": 10_000, "constants": ""}, 100_000),
    "scaling": Experiment(run_scaling, {"kind": "gaussian_unit", "t_max": 256, "slope_lo": 0.4, "slope_hi": 0.6},
                          2000),
    "jlt": Experiment(run_jlt, {"d": 512, "N": 64, "eps": 0.25, "c": embedding.JLT_C, "pass_rate": 0.95}, 200),
    "inner": Experiment(run_inner, {"d": 512, "n_u": 32, "n_v": 32, "eps": 0.3, "c": embedding.INNER_C,
                                    "pass_rate": 0.90}, 200),
    "regress": Experiment(run_regress, {**calibration.REGRESSION_FIXTURE, "coverage": 0.95}, 500),
    "bandit": Experiment(run_bandit, {"d": 500, "K": 4, "T": 10_000, "b": 50, "s": 50, "sigma": 1.0,
                                      "scenario": "both", "lam": bandits.DEFAULT_LAMBDA, "delta": 0.1,
                                      "rho": bandits.DEFAULT_RHO, "record_every": 100}, 5),
    "fedsim": Experiment(run_fedsim, {"C": 4, "d": 64, "b": 32, "K": 5, "T": 1000, "eta_local": 0.02,
                                      "eta_global": 1.0, "mu": 0.2, "heterogeneity": 0.1, "shared_sketch": False,
                                      "slope_tol": 0.3, "r2_min": 0.95}, 10),
    "calibrate": Experiment(run_calibrate, {"emb_trials": 100, "reg_trials": 200, "fed_trials": 500}, 20_000),
}
