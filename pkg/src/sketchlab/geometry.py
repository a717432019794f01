"""Complexity measures of finite sets of vectors and matrices.

Radii under the Frobenius and operator norms, Monte-Carlo Gaussian widths,
the finite-set width bound and the width-based surrogate for Talagrand's
gamma_2 functional. Sets are finite, so every supremum is an exact maximum
over the stored elements.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericFailureError
from .sketch import RandomSource

DEFAULT_N_MC = 10_000
_CHUNK = 1024  # draws per derived stream in the width estimators


class VectorSet:
    """Nonempty finite collection of d-vectors, stored as an ``(N, d)`` array."""

    def __init__(self, elements):
        arr = np.array(elements, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"VectorSet needs a nonempty (N, d) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("VectorSet entries must be finite")
        arr.setflags(write=False)
        self.elements = arr

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self):
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self):
        return f"VectorSet(N={len(self)}, dim={self.dim})"


class MatrixSet:
    """Nonempty finite collection of equally shaped matrices, ``(N, m, n)``."""

    def __init__(self, elements):
        arr = np.array(elements, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise InvalidArgumentError(f"MatrixSet needs a nonempty (N, m, n) array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("MatrixSet entries must be finite")
        arr.setflags(write=False)
        self.elements = arr

    @property
    def rows(self) -> int:
        return self.elements.shape[1]

    @property
    def cols(self) -> int:
        return self.elements.shape[2]

    def __len__(self):
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def __repr__(self):
        return f"MatrixSet(N={len(self)}, shape=({self.rows}, {self.cols}))"


def as_vector_set(obj) -> VectorSet:
    return obj if isinstance(obj, VectorSet) else VectorSet(obj)


def as_matrix_set(obj) -> MatrixSet:
    return obj if isinstance(obj, MatrixSet) else MatrixSet(obj)


@dataclass(frozen=True)
class ComplexityProfile:
    """Radii, Gaussian width and gamma_2 surrogate of one set."""

    d_F: float
    d_op: float
    width_mean: float
    width_stderr: float
    gamma2_upper: float
    n_mc: int

    @classmethod
    def from_values(cls, gamma2: float, d_F: float, d_op: float) -> "ComplexityProfile":
        """Profile with a prescribed gamma_2 value (c_width = 1, no MC error)."""
        return cls(d_F=float(d_F), d_op=float(d_op), width_mean=float(gamma2),
                   width_stderr=0.0, gamma2_upper=float(gamma2), n_mc=1)


def frobenius_radius(mset) -> float:
    """Largest Frobenius norm over the set."""
    A = as_matrix_set(mset).elements
    return float(np.sqrt(np.max(np.einsum("aij,aij->a", A, A))))


def spectral_norm(A, tol: float = 1e-8, max_iter: int = 10_000, restart_seed: int = 0) -> float:
    """Largest singular value of ``A`` by power iteration on ``A.T @ A``.

    Starts from the normalized all-ones vector. If the iterate collapses to
    zero (start orthogonal to the row space) it restarts once from a seeded
    random vector. Converged when the Rayleigh quotient changes by less than
    ``tol`` relative.
    """
    if tol <= 0:
        raise InvalidArgumentError("tol must be positive")
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[1]
    if not np.any(A):
        return 0.0
    gram = A.T @ A
    v = np.ones(n) / math.sqrt(n)
    restarted = False
    prev = None
    for _ in range(int(max_iter)):
        w = gram @ v
        norm = np.linalg.norm(w)
        if norm <= 1e-300 * max(1.0, np.abs(gram).max()):
            if restarted:
                return 0.0
            restarted = True
            v = np.random.default_rng(restart_seed).standard_normal(n)
            v /= np.linalg.norm(v)
            prev = None
            continue
        lam = float(v @ w)
        v = w / norm
        if prev is not None and abs(lam - prev) <= tol * abs(lam):
            return math.sqrt(max(lam, 0.0))
        prev = lam
    raise NumericFailureError(f"power iteration did not converge in {max_iter} iterations", last_iterate=v)


def operator_radius(mset, tol: float = 1e-8, max_iter: int = 10_000) -> float:
    """Largest operator (2 -> 2) norm over the set, via power iteration."""
    return max(spectral_norm(A, tol, max_iter) for A in as_matrix_set(mset).elements)


def _width_chunks(n_mc: int, src: RandomSource, dim: int, per_draw):
    out = np.empty(n_mc)
    for c, start in enumerate(range(0, n_mc, _CHUNK)):
        stop = min(start + _CHUNK, n_mc)
        g = src.spawn(c).generator().standard_normal((stop - start, dim))
        out[start:stop] = per_draw(g)
    return out


def width_samples_vectors(vset, n_mc: int, src: RandomSource) -> np.ndarray:
    """Per-draw suprema ``max_t <g, t>`` for ``n_mc`` standard Gaussian ``g``.

    Draws depend only on ``(src, n_mc, dim)``, so two sets of the same
    dimension evaluated with the same source see identical ``g``.
    """
    T = as_vector_set(vset).elements
    return _width_chunks(int(n_mc), src, T.shape[1], lambda g: np.max(g @ T.T, axis=1))


def width_samples_matrices(mset, n_mc: int, src: RandomSource) -> np.ndarray:
    """Per-draw suprema ``max_A |Tr(G^T A)|`` for standard Gaussian ``G``."""
    A = as_matrix_set(mset).elements
    flat = A.reshape(A.shape[0], -1)
    return _width_chunks(int(n_mc), src, flat.shape[1], lambda g: np.max(np.abs(g @ flat.T), axis=1))


def _mean_stderr(samples: np.ndarray) -> tuple[float, float]:
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(samples.size))


def gaussian_width_vectors(vset, n_mc: int = DEFAULT_N_MC, src: RandomSource | None = None):
    """Monte-Carlo Gaussian width ``E sup_t <g, t>``; returns ``(mean, stderr)``."""
    if n_mc < 2:
        raise InvalidArgumentError("n_mc must be at least 2")
    src = src if src is not None else RandomSource(0, 0)
    return _mean_stderr(width_samples_vectors(vset, n_mc, src))


def gaussian_width_matrices(mset, n_mc: int = DEFAULT_N_MC, src: RandomSource | None = None):
    """Monte-Carlo Gaussian width ``E sup_A |Tr(G^T A)|``; returns ``(mean, stderr)``."""
    if n_mc < 2:
        raise InvalidArgumentError("n_mc must be at least 2")
    src = src if src is not None else RandomSource(0, 0)
    return _mean_stderr(width_samples_matrices(mset, n_mc, src))


def finite_width_bound(vset) -> float:
    """``max ||t|| * sqrt(2 ln N)``, the classical bound for an N-point set."""
    T = as_vector_set(vset).elements
    N = T.shape[0]
    if N == 1:
        return 0.0
    return float(np.max(np.linalg.norm(T, axis=1)) * math.sqrt(2.0 * math.log(N)))


def gamma2_upper(width_mean: float, c_width: float = 1.0) -> float:
    """gamma_2 surrogate: ``c_width`` times the Gaussian width."""
    if c_width <= 0:
        raise InvalidArgumentError("c_width must be positive")
    return float(c_width * width_mean)


def complexity_profile(mset, n_mc: int = DEFAULT_N_MC, src: RandomSource | None = None,
                       c_width: float = 1.0, tol: float = 1e-8) -> ComplexityProfile:
    """Radii, MC width and gamma_2 surrogate of a matrix set."""
    mean, se = gaussian_width_matrices(mset, n_mc, src)
    return ComplexityProfile(
        d_F=frobenius_radius(mset),
        d_op=operator_radius(mset, tol=tol),
        width_mean=mean,
        width_stderr=se,
        gamma2_upper=gamma2_upper(mean, c_width),
        n_mc=int(n_mc),
    )
