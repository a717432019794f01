"""Deviation statistics of random quadratic forms and their tail bounds.

For matrix sets ``Ms`` and ``Ns`` (both stored ``m x n``) and a random
``xi`` in R^n with independent mean-zero unit-variance coordinates, the
cross deviation is

    C(xi) = max_{M, N} | xi^T M^T N xi - Tr(M^T N) |.

Writing ``G = M^T N`` so that ``G[j, k] = <M[:, j], N[:, k]>``, the form
splits into an off-diagonal part ``sum_{j != k} xi_j xi_k G[j, k]`` and a
centered diagonal part ``sum_j (xi_j^2 - 1) G[j, j]``. Their suprema are
``offdiag_term`` and ``diag_term``, and ``C <= B + D`` pointwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError
from .geometry import ComplexityProfile, as_matrix_set, spectral_norm
from .sketch import RandomSource, draw

DEFAULT_C1 = 1.0
DEFAULT_C2 = 1.0 / 64.0
DEFAULT_QUANTILES = (0.5, 0.9, 0.95, 0.99)
DEFAULT_P = (1.0, 2.0, 4.0, 8.0)


def quadratic_mean(M, N) -> float:
    """``Tr(M^T N)``, the mean of ``xi^T M^T N xi`` for unit-variance ``xi``."""
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    if M.ndim != 2 or M.shape != N.shape:
        raise InvalidArgumentError(f"M and N must share a 2-d shape, got {M.shape} and {N.shape}")
    return float(np.sum(M * N))


def _pair_arrays(Ms, Ns):
    A = as_matrix_set(Ms).elements
    B = as_matrix_set(Ns).elements
    if A.shape[1:] != B.shape[1:]:
        raise InvalidArgumentError(f"matrix sets disagree in shape: {A.shape[1:]} vs {B.shape[1:]}")
    return A, B


def _xi_batch(xis, n: int) -> np.ndarray:
    try:
        X = np.array(xis, dtype=np.float64)
    except ValueError:
        raise InvalidArgumentError("xi vectors must all have the same length") from None
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] != n:
        raise InvalidArgumentError(f"xi must have length {n}, got shape {X.shape}")
    return X


def _signed_forms(A, B, X):
    """``sum_t xi_t^T M^T N xi_t`` for every pair, shape ``(|Ms|, |Ns|)``."""
    AX = np.einsum("aij,tj->ati", A, X)
    BX = np.einsum("bij,tj->bti", B, X)
    return np.einsum("ati,bti->ab", AX, BX)


def _traces(A, B):
    return np.einsum("aij,bij->ab", A, B)


def _col_inner(A, B):
    """``G[a, b, j] = <M_a[:, j], N_b[:, j]>``, the diagonals of ``M_a^T N_b``."""
    return np.einsum("aij,bij->abj", A, B)


def deviation_cross(Ms, Ns, xi) -> float:
    """``max_{M,N} |xi^T M^T N xi - Tr(M^T N)|`` by enumeration."""
    return deviation_sum(Ms, Ns, [xi])


def deviation_single(As, xi) -> float:
    """``max_A | ||A xi||^2 - ||A||_F^2 |``."""
    A = as_matrix_set(As).elements
    x = _xi_batch(xi, A.shape[2])[0]
    sq = np.einsum("ai,ai->a", A @ x, A @ x)
    fro = np.einsum("aij,aij->a", A, A)
    return float(np.max(np.abs(sq - fro)))


def deviation_sum(Ms, Ns, xis) -> float:
    """``max_{M,N} |sum_t (xi_t^T M^T N xi_t - Tr(M^T N))|`` over ``T`` draws."""
    A, B = _pair_arrays(Ms, Ns)
    X = _xi_batch(xis, A.shape[2])
    dev = _signed_forms(A, B, X) - X.shape[0] * _traces(A, B)
    return float(np.max(np.abs(dev)))


def offdiag_term(Ms, Ns, xi) -> float:
    """``max_{M,N} |sum_{j != k} xi_j xi_k <M_j, N_k>|`` with ``M_j`` the j-th column."""
    A, B = _pair_arrays(Ms, Ns)
    x = _xi_batch(xi, A.shape[2])
    full = _signed_forms(A, B, x)
    diag = _col_inner(A, B) @ (x[0] ** 2)
    return float(np.max(np.abs(full - diag)))


def diag_term(Ms, Ns, xi) -> float:
    """``max_{M,N} |sum_j (xi_j^2 - 1) <M_j, N_j>|``."""
    A, B = _pair_arrays(Ms, Ns)
    x = _xi_batch(xi, A.shape[2])[0]
    return float(np.max(np.abs(_col_inner(A, B) @ (x ** 2 - 1.0))))


def lp_norm_estimate(samples, p: float) -> float:
    """Empirical ``(mean |x|^p)^(1/p)``."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size == 0:
        raise InvalidArgumentError("samples must be nonempty")
    if p < 1:
        raise InvalidArgumentError("p must be at least 1")
    a = np.abs(x)
    scale = a.max()
    if scale == 0:
        return 0.0
    # rescale to avoid overflow at large p
    return float(scale * np.mean((a / scale) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class BoundTriple:
    """Constants ``(W, V, U)`` of the uniform deviation bound plus ``c1, c2``."""

    W: float
    V: float
    U: float
    c1: float = DEFAULT_C1
    c2: float = DEFAULT_C2

    def __post_init__(self):
        for name in ("W", "V", "U"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise InvalidArgumentError(f"{name} must be finite and nonnegative, got {v}")
        if not (self.c1 > 0 and self.c2 > 0):
            raise InvalidArgumentError("c1 and c2 must be positive")

    @property
    def threshold(self) -> float:
        """Level ``c1 * W`` above which the tail bound applies."""
        return self.c1 * self.W


def bound_triple(profM: ComplexityProfile, profN: ComplexityProfile,
                 c1: float = DEFAULT_C1, c2: float = DEFAULT_C2) -> BoundTriple:
    """Cross-set constants from the gamma_2 surrogates and radii of both sets."""
    gM, fM, oM = profM.gamma2_upper, profM.d_F, profM.d_op
    gN, fN, oN = profN.gamma2_upper, profN.d_F, profN.d_op
    W = gM * (gN + fN) + gN * (gM + fM)
    V = gM * oN + gN * oM + min(fM * oN, fN * oM)
    U = oM * oN
    return BoundTriple(W, V, U, c1, c2)


def single_set_bound(prof: ComplexityProfile, c1: float = DEFAULT_C1,
                     c2: float = DEFAULT_C2) -> BoundTriple:
    """Single-set constants: ``W = g(g+f) + f*o``, ``V = o(g+f)``, ``U = o^2``."""
    g, f, o = prof.gamma2_upper, prof.d_F, prof.d_op
    return BoundTriple(g * (g + f) + f * o, o * (g + f), o * o, c1, c2)


def _ratio(num: float, den: float) -> float:
    # x / 0 is +inf for x > 0 and 0 for x == 0
    if den > 0:
        return num / den
    return math.inf if num > 0 else 0.0


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps >= 0:
        raise InvalidArgumentError(f"eps must be nonnegative, got {eps}")
    return eps


def tail_bound(bt: BoundTriple, eps: float) -> float:
    """``min(1, 2 exp(-c2 min(eps^2/V^2, eps/U)))``."""
    eps = _check_eps(eps)
    rate = min(_ratio(eps * eps, bt.V ** 2), _ratio(eps, bt.U))
    return min(1.0, 2.0 * math.exp(-bt.c2 * rate))


def sum_tail_bound(bt: BoundTriple, T: int, eps: float) -> float:
    """Tail for the ``T``-term sum: ``min(1, exp(-c2 min(eps^2/(T V^2), eps/(sqrt(T) U))))``."""
    if int(T) < 1:
        raise InvalidArgumentError("T must be at least 1")
    eps = _check_eps(eps)
    T = int(T)
    rate = min(_ratio(eps * eps, T * bt.V ** 2), _ratio(eps, math.sqrt(T) * bt.U))
    return min(1.0, math.exp(-bt.c2 * rate))


def hanson_wright_tail(A, eps: float, c: float = 1.0) -> float:
    """Hanson-Wright bound on ``P(| ||A xi||^2 - ||A||_F^2 | >= eps)``, prefactor 2."""
    eps = _check_eps(eps)
    if c <= 0:
        raise InvalidArgumentError("c must be positive")
    A = np.asarray(A, dtype=np.float64)
    G = A.T @ A
    fro = float(np.linalg.norm(G))
    op = spectral_norm(G) if fro > 0 else 0.0
    rate = min(_ratio(eps * eps, fro * fro), _ratio(eps, op))
    return min(1.0, 2.0 * math.exp(-c * rate))


@dataclass
class DeviationSummary:
    """Distribution summary of per-trial deviations."""

    n_samples: int
    mean: float
    quantiles: dict = field(default_factory=dict)
    lp_norms: dict = field(default_factory=dict)
    samples: np.ndarray | None = None

    @classmethod
    def from_samples(cls, samples, levels=DEFAULT_QUANTILES, ps=DEFAULT_P) -> "DeviationSummary":
        s = np.asarray(samples, dtype=np.float64)
        qs = np.quantile(s, levels)
        # enforce monotone output against interpolation round-off
        qs = np.maximum.accumulate(qs)
        return cls(
            n_samples=int(s.size),
            mean=float(s.mean()),
            quantiles={float(l): float(q) for l, q in zip(levels, qs)},
            lp_norms={float(p): lp_norm_estimate(s, p) for p in ps},
            samples=s,
        )


def trial_xis(src: RandomSource, kind, T: int, n: int) -> np.ndarray:
    """The ``(T, n)`` batch of random vectors used by one Monte-Carlo trial."""
    return draw(src.generator(), kind, (int(T), int(n)))


def mc_deviation_study(Ms, Ns, kind, n_trials: int, T: int, src: RandomSource,
                       chunk: int = 4096) -> DeviationSummary:
    """Sample the (summed) cross deviation over ``n_trials`` independent trials.

    Trial ``i`` draws its ``(T, n)`` batch from ``src.spawn(i)``, so results
    do not depend on chunking. Trials are evaluated in vectorized chunks.
    """
    if int(n_trials) < 2:
        raise InvalidArgumentError("n_trials must be at least 2")
    if int(T) < 1:
        raise InvalidArgumentError("T must be at least 1")
    A, B = _pair_arrays(Ms, Ns)
    n = A.shape[2]
    traces = _traces(A, B)
    # bound the (|Ms|, chunk, T, m) intermediates to a few million entries
    chunk = max(1, min(int(chunk), 4_000_000 // (int(T) * A.shape[1] * (A.shape[0] + B.shape[0]))))
    out = np.empty(int(n_trials))
    for start in range(0, int(n_trials), chunk):
        stop = min(start + chunk, int(n_trials))
        X = np.stack([trial_xis(src.spawn(i), kind, T, n) for i in range(start, stop)])
        AX = np.einsum("aij,stj->asti", A, X)
        BX = np.einsum("bij,stj->bsti", B, X)
        forms = np.einsum("asti,bsti->sab", AX, BX)
        out[start:stop] = np.max(np.abs(forms - T * traces), axis=(1, 2))
    return DeviationSummary.from_samples(out)
