"""Round-based simulation of sketched federated learning on quadratic losses.

Client ``c`` holds ``L_c(theta) = 1/2 (theta - theta* - o_c)^T H (theta - theta* - o_c)``.
Each round every client runs ``K`` full-batch gradient steps from the shared
model, sends the sketch ``R delta_c`` of its model change
``delta_c = theta_t - theta_{c,K}``, the server averages the sketches and
scales by ``eta_global``, and all parties apply the de-sketched aggregate:

    theta_{t+1} = theta_t - R^T (eta_global * mean_c R delta_c).

The global loss is the client average, minimized at ``theta* + mean(o_c)``.
Its minimum ``L*`` is positive when the offsets differ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .sketch import RandomSource, SketchMatrix, desk, make_sketch, sk

DIVERGENCE_LIMIT = 1e12
BYTES_PER_FLOAT = 8


@dataclass(frozen=True)
class FedConfig:
    C: int
    K: int
    T: int
    b: int
    eta_local: float
    eta_global: float = 1.0
    master_seed: int = 0

    def __post_init__(self):
        for name in ("C", "K", "T", "b"):
            if int(getattr(self, name)) < 1:
                raise InvalidArgumentError(f"{name} must be at least 1")
        if not (self.eta_local > 0 and self.eta_global > 0):
            raise InvalidArgumentError("learning rates must be positive")


@dataclass(frozen=True)
class QuadLossModel:
    H: np.ndarray
    theta_star: np.ndarray
    offsets: np.ndarray  # (C, d)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.float64)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or not np.allclose(H, H.T):
            raise InvalidArgumentError("H must be a symmetric square matrix")
        if np.linalg.eigvalsh(H)[0] <= 0:
            raise InvalidArgumentError("H must be positive definite")
        offs = np.atleast_2d(np.asarray(self.offsets, dtype=np.float64))
        th = np.asarray(self.theta_star, dtype=np.float64)
        if th.shape != (H.shape[0],) or offs.shape[1] != H.shape[0]:
            raise InvalidArgumentError("theta_star and offsets must match the dimension of H")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "theta_star", th)
        object.__setattr__(self, "offsets", offs)

    @property
    def d(self) -> int:
        return self.H.shape[0]

    @property
    def C(self) -> int:
        return self.offsets.shape[0]

    @property
    def spectrum(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.H)

    @property
    def mu(self) -> float:
        """PL constant: the smallest eigenvalue of ``H``."""
        return float(self.spectrum[0])

    @property
    def kappa(self) -> float:
        """Effective rank ``sum_j Lambda_j / Lambda_max``."""
        s = self.spectrum
        return float(s.sum() / s[-1])

    @property
    def optimum(self) -> np.ndarray:
        return self.theta_star + self.offsets.mean(axis=0)

    def client_targets(self) -> np.ndarray:
        return self.theta_star[None, :] + self.offsets

    def loss(self, theta) -> float:
        E = np.asarray(theta)[None, :] - self.client_targets()
        return float(0.5 * np.mean(np.einsum("ci,ij,cj->c", E, self.H, E)))

    def grad(self, theta) -> np.ndarray:
        return self.H @ (np.asarray(theta) - self.optimum)

    @property
    def min_loss(self) -> float:
        return self.loss(self.optimum)


def quad_model(d: int, C: int, mu: float, heterogeneity: float, src: RandomSource,
               lam_max: float = 1.0) -> QuadLossModel:
    """Random rotation of a geometric spectrum from ``lam_max`` down to ``mu``.

    Offsets are i.i.d. ``N(0, heterogeneity^2 I)``; ``theta*`` is standard normal.
    """
    if not 0 < mu <= lam_max:
        raise InvalidArgumentError("need 0 < mu <= lam_max")
    gen = src.generator()
    Q, _ = np.linalg.qr(gen.standard_normal((d, d)))
    spec = np.geomspace(lam_max, mu, d)
    H = (Q * spec) @ Q.T
    H = 0.5 * (H + H.T)
    theta = gen.standard_normal(d)
    offsets = heterogeneity * gen.standard_normal((C, d))
    return QuadLossModel(H, theta, offsets)


@dataclass
class LossTrace:
    """Per-round global loss, gradient norm and uplink bytes.

    Index 0 holds the initial model; entry ``t`` the model after ``t`` rounds.
    """

    loss: np.ndarray
    grad_norm: np.ndarray
    bytes_sent: np.ndarray
    theta: np.ndarray
    min_loss: float
    mu: float
    kappa: float
    aborted: bool = False
    params: dict = field(default_factory=dict)

    @property
    def gap(self) -> np.ndarray:
        return self.loss - self.min_loss


def _local_steps(model: QuadLossModel, theta: np.ndarray, K: int, eta: float) -> np.ndarray:
    """Models of all clients after ``K`` gradient steps, shape ``(C, d)``."""
    targets = model.client_targets()
    th = np.repeat(theta[None, :], model.C, axis=0)
    for _ in range(K):
        th = th - eta * (th - targets) @ model.H
    return th


def _run(cfg: FedConfig, model: QuadLossModel, sketch_at, theta0, payload: int) -> LossTrace:
    if cfg.C != model.C:
        raise InvalidArgumentError(f"config has C={cfg.C} clients, model has {model.C}")
    d = model.d
    theta = np.zeros(d) if theta0 is None else np.array(theta0, dtype=np.float64)
    losses = [model.loss(theta)]
    grads = [float(np.linalg.norm(model.grad(theta)))]
    sent = [0]
    aborted = False
    for t in range(cfg.T):
        local = _local_steps(model, theta, cfg.K, cfg.eta_local)
        deltas = theta[None, :] - local
        if sketch_at is None:
            agg = cfg.eta_global * np.mean(deltas, axis=0)
            step = agg
        else:
            R = sketch_at(t)
            agg = cfg.eta_global * np.mean(np.stack([sk(R, dc) for dc in deltas]), axis=0)
            step = desk(R, agg)
        theta = theta - step
        loss = model.loss(theta)
        losses.append(loss)
        grads.append(float(np.linalg.norm(model.grad(theta))))
        sent.append(cfg.C * payload * BYTES_PER_FLOAT)
        if not math.isfinite(loss) or loss > DIVERGENCE_LIMIT:
            aborted = True
            break
    return LossTrace(np.array(losses), np.array(grads), np.array(sent, dtype=np.int64), theta,
                     model.min_loss, model.mu, model.kappa, aborted,
                     {"C": cfg.C, "K": cfg.K, "b": cfg.b, "eta_local": cfg.eta_local,
                      "eta_global": cfg.eta_global})


def run_sketch_dl(cfg: FedConfig, model: QuadLossModel, shared_sketch: bool = False,
                  sketches=None, theta0=None, sketch_src: RandomSource | None = None) -> LossTrace:
    """Sketched protocol; round ``t`` draws ``R_t`` from ``sketch_src.spawn(t)``.

    ``sketch_src`` defaults to stream ``(master_seed, 0)``. ``shared_sketch``
    reuses round 0's sketch for every round. ``sketches`` may be a callable
    ``t -> SketchMatrix`` to inject explicit matrices.
    """
    base = sketch_src if sketch_src is not None else RandomSource(cfg.master_seed, 0)
    if callable(sketches):
        sketch_at = sketches
        payload = sketches(0).rows
    else:
        def sketch_at(t):
            idx = 0 if shared_sketch else t
            return make_sketch(cfg.b, model.d, base.spawn(idx))
        payload = cfg.b
        if shared_sketch:
            R0 = sketch_at(0)
            sketch_at = lambda t: R0  # noqa: E731
    return _run(cfg, model, sketch_at, theta0, payload)


def run_unsketched_dl(cfg: FedConfig, model: QuadLossModel, theta0=None) -> LossTrace:
    """Baseline that transmits full ``d``-dimensional deltas."""
    return _run(cfg, model, None, theta0, model.d)


def identity_sketches(d: int):
    I = SketchMatrix.identity(d)
    return lambda t: I


def fit_decay(trace: LossTrace, lo: float = 1e-10, hi: float = 1e-2):
    """Least-squares line through ``log(L_t - L*)`` on the segment where the
    relative gap ``(L_t - L*) / (L_0 - L*)`` lies in ``[lo, hi]``.

    Returns ``(slope, r2, n_points)``; slope is per round.
    """
    gap = trace.gap
    rel = gap / gap[0]
    idx = np.flatnonzero((rel >= lo) & (rel <= hi) & (gap > 0))
    if idx.size < 3:
        return float("nan"), float("nan"), int(idx.size)
    y = np.log(gap[idx])
    slope, intercept = np.polyfit(idx.astype(float), y, 1)
    resid = y - (slope * idx + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2, int(idx.size)


def predicted_rate(cfg: FedConfig, mu: float) -> float:
    """Per-round log-gap slope ``-2 mu eta_local eta_global K``."""
    return -2.0 * mu * cfg.eta_local * cfg.eta_global * cfg.K


def sketch_guarantee_bound(wG: float, wH: float, d2G: float, d2H: float, b: int, delta: float) -> float:
    """``Z = A + sqrt(log(1/delta)) B + log(1/delta) C`` for sets ``G`` and ``H``.

    A = wG wH / b + (wG d2H + wH d2G) / sqrt(b)
    B = (wG d2H + wH d2G) / b + d2G d2H / sqrt(b)
    C = d2G d2H / b
    """
    if b < 1:
        raise InvalidArgumentError("b must be at least 1")
    if not 0 < delta < 1:
        raise InvalidArgumentError("delta must lie in (0, 1)")
    rb = math.sqrt(b)
    mixed = wG * d2H + wH * d2G
    A = wG * wH / b + mixed / rb
    B = mixed / b + d2G * d2H / rb
    Cc = d2G * d2H / b
    L = math.log(1.0 / delta)
    return A + math.sqrt(L) * B + L * Cc


def sketch_pair_error(G, Hs, R: SketchMatrix) -> float:
    """``max |g^T R^T R h - g^T h|`` over rows ``g`` of ``G`` and ``h`` of ``Hs``."""
    G = np.atleast_2d(np.asarray(G, dtype=np.float64))
    Hs = np.atleast_2d(np.asarray(Hs, dtype=np.float64))
    RG = G @ R.entries.T
    RH = Hs @ R.entries.T
    return float(np.max(np.abs(RG @ RH.T - G @ Hs.T)))
