"""Linear contextual bandits with per-round sketched policies.

Four policies share one simulation loop: LinUCB and linear Thompson sampling
in the ambient dimension ``d``, and their sketched counterparts, which draw a
fresh Gaussian sketch ``S_t`` (``b x d``, entries N(0, 1/b)) every round and
learn in the ``b``-dimensional sketched space.

Every round records the instantaneous regret against the best action of the
realized action set and splits it exactly as

    regret_t = term_I + term_II,
    term_II  = <theta*, a*> - <S_t theta*, S_t a*>   (isometry defect)
    term_I   = <S_t theta*, S_t a*> - <theta*, a_t>  (sketched-space gap)

where ``a_t`` is the action actually played. Unsketched policies have
``term_II = 0``.

Randomness: the environment owns the action sets and reward noise, the
policy owns its sketches and posterior samples. Running two policies on the
same environment therefore compares them on identical action sets and noise.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from .errors import InvalidArgumentError, NumericFailureError
from .sketch import RandomSource, SketchMatrix, make_sketch

SCENARIOS = {
    # name: (actions sparse, theta* sparse)
    "both": (True, True),
    "context": (True, False),
    "parameter": (False, True),
    "dense": (False, False),
}
DEFAULT_LAMBDA = 1.0
DEFAULT_RHO = 2.0
# multiplier on the log-det radius term in the self-normalized martingale bound;
# used for coverage checks, while the policies keep the unscaled radius
PROOF_CONF_SCALE = 2.0
_BLOCK = 256  # rounds of actions and noise generated per derived stream


def _uniform_ball(gen: np.random.Generator, d: int) -> np.ndarray:
    g = gen.standard_normal(d)
    return g / np.linalg.norm(g) * gen.random() ** (1.0 / d)


class BanditEnv:
    """Stochastic linear bandit with ``K`` fresh actions per round.

    Actions are uniform on the unit sphere of their support: uniform in the
    ball, truncated to the first ``s`` coordinates when sparse, then
    renormalized. With ``renormalize=False`` the truncated ball sample is
    kept as is (norm about ``sqrt(s/d)``). ``theta*`` is uniform in the ball
    and truncated, never renormalized, so ``||theta*|| <= 1``.
    """

    def __init__(self, theta_star, K: int, sigma: float, s: int, sparse_actions: bool,
                 src: RandomSource, renormalize: bool = True):
        self.theta_star = np.asarray(theta_star, dtype=np.float64)
        self.theta_star.setflags(write=False)
        self.K = int(K)
        self.sigma = float(sigma)
        self.s = int(s)
        self.sparse_actions = bool(sparse_actions)
        self.src = src
        self.renormalize = bool(renormalize)
        self._cache = (None, None, None)

    @property
    def d(self) -> int:
        return self.theta_star.shape[0]

    @property
    def support(self) -> int:
        return self.s if (self.sparse_actions and self.s > 0) else self.d

    def _block(self, j: int):
        if self._cache[0] != j:
            gen = self.src.spawn(0).spawn(j).generator()
            acts = np.zeros((_BLOCK, self.K, self.d))
            if self.renormalize:
                g = gen.standard_normal((_BLOCK, self.K, self.support))
                g /= np.linalg.norm(g, axis=2, keepdims=True)
            else:
                g = gen.standard_normal((_BLOCK, self.K, self.d))
                radius = gen.random((_BLOCK, self.K, 1)) ** (1.0 / self.d)
                g = (g / np.linalg.norm(g, axis=2, keepdims=True) * radius)[:, :, :self.support]
            acts[:, :, :self.support] = g
            noise = self.src.spawn(1).spawn(j).generator().standard_normal(_BLOCK)
            self._cache = (j, acts, noise)
        return self._cache[1], self._cache[2]

    def actions(self, t: int) -> np.ndarray:
        """The ``K x d`` action set of round ``t`` (0-based)."""
        acts, _ = self._block(t // _BLOCK)
        return acts[t % _BLOCK]

    def noise(self, t: int) -> float:
        """Reward noise ``eta_t`` applied to the action played in round ``t``."""
        _, noise = self._block(t // _BLOCK)
        return self.sigma * float(noise[t % _BLOCK])

    def reward(self, t: int, a) -> float:
        return float(self.theta_star @ a) + self.noise(t)


def sparse_env(d: int, s: int, K: int, sigma: float, src: RandomSource,
               scenario: str = "both", renormalize: bool = True) -> BanditEnv:
    """Environment with ``s``-sparse actions and/or parameter (``s = 0``: dense)."""
    if d < 1 or K < 1:
        raise InvalidArgumentError("d and K must be positive")
    if not 0 <= s <= d:
        raise InvalidArgumentError(f"sparsity s must lie in [0, {d}], got {s}")
    if sigma < 0:
        raise InvalidArgumentError("sigma must be nonnegative")
    if scenario not in SCENARIOS:
        raise InvalidArgumentError(f"unknown scenario {scenario!r}; choose from {sorted(SCENARIOS)}")
    sparse_actions, sparse_theta = SCENARIOS[scenario]
    theta = _uniform_ball(src.spawn(2).generator(), d)
    if sparse_theta and 0 < s < d:
        theta[s:] = 0.0
    return BanditEnv(theta, K, sigma, s, sparse_actions, src, renormalize)


@dataclass
class RegretTrace:
    """Per-round telemetry of one policy run."""

    policy: str
    inst_regret: np.ndarray
    term_I: np.ndarray
    term_II: np.ndarray
    wall_ns: np.ndarray
    chosen: np.ndarray
    best: np.ndarray
    played_norm: np.ndarray
    covered: np.ndarray | None = None
    sketches: list | None = field(default=None, repr=False)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.inst_regret)

    @property
    def T(self) -> int:
        return self.inst_regret.shape[0]


def regret_terms(trace: RegretTrace) -> tuple[float, float]:
    """Sums of the recorded term I and term II (same summation order as ``cum_regret``)."""
    if trace.T == 0:
        raise InvalidArgumentError("empty trace")
    return float(np.cumsum(trace.term_I)[-1]), float(np.cumsum(trace.term_II)[-1])


def recompute_term_II(trace: RegretTrace, env: BanditEnv) -> np.ndarray:
    """``theta*^T (I - S_t^T S_t) a*_t`` from the logged sketches."""
    if trace.sketches is None:
        raise InvalidArgumentError("trace was recorded without log_sketches=True")
    th = env.theta_star
    out = np.empty(trace.T)
    for t, S in enumerate(trace.sketches):
        a_star = env.actions(t)[trace.best[t]]
        out[t] = th @ a_star - th @ (S.entries.T @ (S.entries @ a_star))
    return out


SketchProvider = Callable[[int], SketchMatrix]


def _sketch_provider(sketches, b: int, d: int, src: RandomSource) -> SketchProvider:
    if callable(sketches):
        return sketches
    if sketches in (None, "fresh"):
        return lambda t: make_sketch(b, d, src.spawn(0).spawn(t))
    if sketches == "fixed":
        S = make_sketch(b, d, src.spawn(0).spawn(0))
        return lambda t: S
    raise InvalidArgumentError(f"sketches must be 'fresh', 'fixed' or a callable, got {sketches!r}")


def _chol(M: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(M, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericFailureError(f"confidence matrix is not positive definite: {exc}") from None


def _check_common(T, delta):
    if T < 1:
        raise InvalidArgumentError("T must be at least 1")
    if not 0 < delta < 1:
        raise InvalidArgumentError("delta must lie in (0, 1)")


class _Recorder:
    def __init__(self, name: str, T: int, log_sketches: bool, coverage: bool):
        self.name = name
        self.inst = np.empty(T)
        self.t1 = np.empty(T)
        self.t2 = np.empty(T)
        self.wall = np.empty(T, dtype=np.int64)
        self.chosen = np.empty(T, dtype=np.int64)
        self.best = np.empty(T, dtype=np.int64)
        self.norm = np.empty(T)
        self.covered = np.empty(T, dtype=bool) if coverage else None
        self.sketches = [] if log_sketches else None

    def record(self, t, env, X, i, a, S, wall, Xs=None, desketched=False):
        """``desketched``: ``a = S^T Xs[i]``, whose mean reward is ``<S theta*, Xs[i]>``."""
        th = env.theta_star
        vals = X @ th
        j = int(np.argmax(vals))
        if S is None:
            defect = 0.0
            played = float(th @ a)
        else:
            # one set of sketched products serves both terms, so the split
            # is exact in floating point when the best arm is played
            sk_vals = (X @ S.entries.T if Xs is None else Xs) @ (S.entries @ th)
            defect = float(vals[j] - sk_vals[j])
            played = float(sk_vals[i]) if desketched else float(th @ a)
            if self.sketches is not None:
                self.sketches.append(S)
        regret = float(vals[j] - played)
        self.inst[t] = regret
        self.t2[t] = defect
        self.t1[t] = regret - defect
        self.wall[t] = wall
        self.chosen[t] = i
        self.best[t] = j
        self.norm[t] = float(np.linalg.norm(a))

    def trace(self) -> RegretTrace:
        return RegretTrace(self.name, self.inst, self.t1, self.t2, self.wall, self.chosen,
                           self.best, self.norm, self.covered, self.sketches)


def _ucb_loop(env: BanditEnv, T: int, dim: int, lam: float, delta: float, rho: float,
              provider: SketchProvider | None, oracle_radius: bool, project: bool,
              log_sketches: bool, name: str, conf_scale: float = 1.0) -> RegretTrace:
    if lam <= 0:
        raise InvalidArgumentError("lambda must be positive")
    if rho < 0:
        raise InvalidArgumentError("rho must be nonnegative")
    d = env.d
    G = np.zeros((d, d))  # sum of played actions' outer products
    z = np.zeros(d)       # sum of reward-weighted played actions
    eye = np.eye(dim)
    log_lam = dim * math.log(lam)
    rec = _Recorder(name, T, log_sketches and provider is not None, coverage=True)
    th = env.theta_star
    for t in range(T):
        X = env.actions(t)
        t0 = time.perf_counter_ns()
        if provider is None:
            S = None
            V = G + lam * eye
            xty = z
            Xs = X
        else:
            S = provider(t)
            Se = S.entries
            V = Se @ G @ Se.T + lam * eye
            xty = Se @ z
            Xs = X @ Se.T
        L = _chol(V)
        theta_hat = linalg.cho_solve((L, True), xty)
        logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
        slack = float(np.linalg.norm(th if S is None else S.entries @ th)) if oracle_radius else rho
        core = math.sqrt(max(0.0, 0.5 * (logdet - log_lam) + math.log(1.0 / delta)))
        beta = conf_scale * core + math.sqrt(lam) * slack
        W = linalg.solve_triangular(L, Xs.T, lower=True)
        ucb = Xs @ theta_hat + beta * np.sqrt(np.einsum("ij,ij->j", W, W))
        i = int(np.argmax(ucb))
        a = X[i] if S is None else S.entries.T @ Xs[i]
        if project:
            a = a / np.linalg.norm(a)
        wall = time.perf_counter_ns() - t0
        r = env.reward(t, a)
        t0 = time.perf_counter_ns()
        G += np.outer(a, a)
        z += r * a
        wall += time.perf_counter_ns() - t0
        target = th if S is None else S.entries @ th
        err = L.T @ (theta_hat - target)
        rec.covered[t] = float(np.linalg.norm(err)) <= beta
        rec.record(t, env, X, i, a, S, wall, Xs, desketched=S is not None and not project)
    return rec.trace()


def run_sk_linucb(env: BanditEnv, T: int, b: int, lam: float = DEFAULT_LAMBDA, delta: float = 0.1,
                  rho: float = DEFAULT_RHO, src: RandomSource | None = None, sketches=None,
                  oracle_radius: bool = False, project: bool = False,
                  log_sketches: bool = False, conf_scale: float = 1.0) -> RegretTrace:
    """Sketched LinUCB with a fresh sketch each round.

    The ridge estimate is refit every round on the history re-sketched with
    the current ``S_t``. Since the history enters only through
    ``G = sum a_i a_i^T`` and ``z = sum r_i a_i``, this is
    ``Vbar = S_t G S_t^T + lam I`` and ``xty = S_t z``, identical to
    re-sketching every past action. The radius is
    ``sqrt(log(det(Vbar)^(1/2) det(lam I)^(-1/2) / delta)) + sqrt(lam) * rho``
    (``rho`` replaced by ``||S_t theta*||`` when ``oracle_radius``), with the
    log-det term multiplied by ``conf_scale``. The
    chosen sketched action is de-sketched with ``S_t^T`` and played as is.

    ``sketches`` may be ``'fresh'`` (default), ``'fixed'`` or a callable
    ``t -> SketchMatrix`` for injected sketches.
    """
    _check_common(T, delta)
    if b < 1:
        raise InvalidArgumentError("b must be at least 1")
    src = src if src is not None else RandomSource(0, 1)
    provider = _sketch_provider(sketches, b, env.d, src)
    return _ucb_loop(env, T, b, lam, delta, rho, provider, oracle_radius, project,
                     log_sketches, "sk-LinUCB", conf_scale)


def run_linucb(env: BanditEnv, T: int, lam: float = DEFAULT_LAMBDA, delta: float = 0.1,
               src: RandomSource | None = None, rho: float = DEFAULT_RHO,
               oracle_radius: bool = False, conf_scale: float = 1.0) -> RegretTrace:
    """LinUCB in ``d`` dimensions with the same radius recipe and slack ``rho``.

    ``src`` is accepted for a uniform policy signature; LinUCB is deterministic.
    """
    _check_common(T, delta)
    return _ucb_loop(env, T, env.d, lam, delta, rho, None, oracle_radius, False, False, "LinUCB",
                     conf_scale)


def ts_scale(dim: int, t: int, delta: float) -> float:
    """Posterior inflation ``v = sqrt(9 dim log(t / delta))`` at 1-based round ``t``."""
    return math.sqrt(9.0 * dim * math.log(t / delta))


def _ts_loop(env: BanditEnv, T: int, dim: int, delta: float, src: RandomSource,
             provider: SketchProvider | None, v_override: float | None, desketch_play: bool,
             log_sketches: bool, name: str) -> RegretTrace:
    Sigma = np.eye(dim)
    f = np.zeros(dim)
    rec = _Recorder(name, T, log_sketches and provider is not None, coverage=False)
    for t in range(T):
        X = env.actions(t)
        t0 = time.perf_counter_ns()
        if provider is None:
            S = None
            Xs = X
        else:
            S = provider(t)
            Xs = X @ S.entries.T
        L = _chol(Sigma)
        mu = linalg.cho_solve((L, True), f)
        v = ts_scale(dim, t + 1, delta) if v_override is None else float(v_override)
        zeta = src.spawn(1).spawn(t).generator().standard_normal(dim)
        theta = mu + v * linalg.solve_triangular(L, zeta, lower=True, trans="T")
        i = int(np.argmax(Xs @ theta))
        a = X[i] if (S is None or not desketch_play) else S.entries.T @ Xs[i]
        wall = time.perf_counter_ns() - t0
        r = env.reward(t, a)
        t0 = time.perf_counter_ns()
        x = Xs[i]
        Sigma += np.outer(x, x)
        f += r * x
        wall += time.perf_counter_ns() - t0
        rec.record(t, env, X, i, a, S, wall, Xs, desketched=S is not None and desketch_play)
    return rec.trace()


def run_sk_lints(env: BanditEnv, T: int, b: int, delta: float = 0.1,
                 src: RandomSource | None = None, sketches=None, v_override: float | None = None,
                 desketch_play: bool = False, log_sketches: bool = False) -> RegretTrace:
    """Sketched linear Thompson sampling.

    Prior ``N(0, I_b)``. Each round sketches the ``K`` contexts with a fresh
    ``S_t``, samples ``theta ~ N(mu, v^2 Sigma^{-1})`` with
    ``v = sqrt(9 b log(t/delta))``, plays the original context of the
    best-scoring arm and adds that round's sketched context to ``Sigma`` and
    ``f``. ``desketch_play`` plays ``S_t^T S_t x`` instead; ``v_override``
    fixes ``v`` (``0`` gives the greedy posterior-mean policy).
    """
    _check_common(T, delta)
    if b < 1:
        raise InvalidArgumentError("b must be at least 1")
    src = src if src is not None else RandomSource(0, 1)
    provider = _sketch_provider(sketches, b, env.d, src)
    return _ts_loop(env, T, b, delta, src, provider, v_override, desketch_play, log_sketches,
                    "sk-LinTS")


def run_lints(env: BanditEnv, T: int, delta: float = 0.1, src: RandomSource | None = None,
              v_override: float | None = None) -> RegretTrace:
    """Linear Thompson sampling in ``d`` dimensions, ``v = sqrt(9 d log(t/delta))``."""
    _check_common(T, delta)
    src = src if src is not None else RandomSource(0, 1)
    return _ts_loop(env, T, env.d, delta, src, None, v_override, False, False, "LinTS")


POLICIES = ("LinUCB", "sk-LinUCB", "LinTS", "sk-LinTS")


def run_policy(name: str, env: BanditEnv, T: int, b: int, src: RandomSource, lam: float = DEFAULT_LAMBDA,
               delta: float = 0.1, rho: float = DEFAULT_RHO) -> RegretTrace:
    """Dispatch one of :data:`POLICIES` with shared defaults."""
    if name == "LinUCB":
        return run_linucb(env, T, lam, delta, src, rho)
    if name == "sk-LinUCB":
        return run_sk_linucb(env, T, b, lam, delta, rho, src)
    if name == "LinTS":
        return run_lints(env, T, delta, src)
    if name == "sk-LinTS":
        return run_sk_lints(env, T, b, delta, src)
    raise InvalidArgumentError(f"unknown policy {name!r}")


def compare_policies(d: int, K: int, T: int, b: int, s: int, sigma: float, trials: int,
                     seed: int = 0, scenario: str = "both", policies=POLICIES,
                     lam: float = DEFAULT_LAMBDA, delta: float = 0.1, rho: float = DEFAULT_RHO) -> dict:
    """Run every policy on the same per-trial environments.

    Trial ``i`` uses environment stream ``(seed, 2i)`` and policy stream
    ``(seed, 2i + 1)``. Returns ``{policy: [trace per trial]}``.
    """
    out = {p: [] for p in policies}
    for i in range(int(trials)):
        for p in policies:
            out[p].append(run_trial(p, d, K, T, b, s, sigma, seed, i, scenario, lam, delta, rho))
    return out


def run_trial(policy: str, d: int, K: int, T: int, b: int, s: int, sigma: float, seed: int, trial: int,
              scenario: str = "both", lam: float = DEFAULT_LAMBDA, delta: float = 0.1,
              rho: float = DEFAULT_RHO) -> RegretTrace:
    """One policy on trial ``trial``'s environment (see :func:`compare_policies`)."""
    env = sparse_env(d, s, K, sigma, RandomSource(int(seed), 2 * int(trial)), scenario)
    return run_policy(policy, env, T, b, RandomSource(int(seed), 2 * int(trial) + 1), lam, delta, rho)
