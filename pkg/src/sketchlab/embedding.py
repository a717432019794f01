"""Norm and inner-product preservation checks for a given sketch.

Distortions are normalized so that ``eps`` keeps its meaning for vectors of
any length: ``| ||Su||^2 - ||u||^2 | / ||u||^2`` for norms and
``|<Su, Sv> - <u, v>| / (||u|| ||v||)`` for inner products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .geometry import as_vector_set
from .sketch import SketchMatrix

JLT_C = 8.0
INNER_C = 4.0


@dataclass(frozen=True)
class EmbeddingReport:
    eps: float
    max_norm_distortion: float
    max_inner_distortion: float
    passed: bool
    per_pair_worst: tuple  # ((i, j), value)
    n_skipped: int = 0


def _check_eps(eps):
    if not 0 < eps <= 1:
        raise InvalidArgumentError(f"eps must lie in (0, 1], got {eps}")


def _nonzero(T: np.ndarray, S: SketchMatrix):
    if T.shape[1] != S.cols:
        raise InvalidArgumentError(f"vectors have dim {T.shape[1]}, sketch expects {S.cols}")
    norms = np.linalg.norm(T, axis=1)
    keep = np.flatnonzero(norms > 0)
    if keep.size == 0:
        raise InvalidArgumentError("set contains only zero vectors")
    return keep, norms


def check_rip(S: SketchMatrix, vset, eps: float) -> EmbeddingReport:
    """Worst normalized squared-norm distortion of ``S`` over the set."""
    _check_eps(eps)
    T = as_vector_set(vset).elements
    keep, norms = _nonzero(T, S)
    Y = T[keep] @ S.entries.T
    dist = np.abs(np.einsum("ij,ij->i", Y, Y) - norms[keep] ** 2) / norms[keep] ** 2
    k = int(np.argmax(dist))
    worst = float(dist[k])
    idx = int(keep[k])
    return EmbeddingReport(eps, worst, worst, worst <= eps, ((idx, idx), worst), T.shape[0] - keep.size)


def check_inner_products(S: SketchMatrix, U, V, eps: float) -> EmbeddingReport:
    """Worst normalized inner-product distortion over all pairs in ``U x V``."""
    _check_eps(eps)
    Ue = as_vector_set(U).elements
    Ve = as_vector_set(V).elements
    ku, nu = _nonzero(Ue, S)
    kv, nv = _nonzero(Ve, S)
    Uk, Vk = Ue[ku], Ve[kv]
    SU = Uk @ S.entries.T
    SV = Vk @ S.entries.T
    scale = np.outer(nu[ku], nv[kv])
    dist = np.abs(SU @ SV.T - Uk @ Vk.T) / scale
    i, j = np.unravel_index(int(np.argmax(dist)), dist.shape)
    worst = float(dist[i, j])
    norm_dist = max(
        float(np.max(np.abs(np.einsum("ij,ij->i", SU, SU) / nu[ku] ** 2 - 1.0))),
        float(np.max(np.abs(np.einsum("ij,ij->i", SV, SV) / nv[kv] ** 2 - 1.0))),
    )
    skipped = (Ue.shape[0] - ku.size) + (Ve.shape[0] - kv.size)
    return EmbeddingReport(eps, norm_dist, worst, worst <= eps,
                           ((int(ku[i]), int(kv[j])), worst), skipped)


def jlt_required_dim(eps: float, N: float, c: float = JLT_C) -> int:
    """``ceil(c * eps^-2 * ln N)`` rows for an N-point set."""
    _check_eps(eps)
    if N < 2:
        raise InvalidArgumentError("N must be at least 2")
    if c <= 0:
        raise InvalidArgumentError("c must be positive")
    return max(1, math.ceil(c * math.log(N) / eps ** 2))


def inner_required_dim(eps: float, wU: float, wV: float, c: float = INNER_C) -> int:
    """``ceil(c * eps^-2 * (wU + wV)^2)``, at least 1."""
    _check_eps(eps)
    if wU < 0 or wV < 0:
        raise InvalidArgumentError("widths must be nonnegative")
    if c <= 0:
        raise InvalidArgumentError("c must be positive")
    return max(1, math.ceil(c * (wU + wV) ** 2 / eps ** 2))
