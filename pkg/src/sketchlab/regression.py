"""Sketch-and-solve ridge regression with de-sketched predictions.

Covariates are sketched to ``S x_i`` (b dims), a ridge fit is solved in the
sketched space and the estimate is mapped back with ``S^T``. The bound
terms follow the high-probability error decomposition for
``(S^T beta_s - beta*)^T x`` with all absolute constants set to 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import InvalidArgumentError, NumericFailureError
from .geometry import as_vector_set
from .sketch import RandomSource, SketchMatrix, desk, make_sketch

RIDGE_SCALE = 1e-6


@dataclass(frozen=True)
class RegressionInstance:
    X: np.ndarray
    y: np.ndarray
    beta_star: np.ndarray
    sigma: float

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class SketchedFit:
    S: SketchMatrix
    beta_s: np.ndarray
    beta_desk: np.ndarray
    lam: float


def gen_regression(d: int, n: int, beta_star, sigma: float, src: RandomSource,
                   cov_factor=None) -> RegressionInstance:
    """Gaussian design ``x = L g`` (``L = I`` by default) and ``y = X beta* + N(0, sigma^2)``."""
    if d < 1 or n < 1:
        raise InvalidArgumentError("d and n must be positive")
    if sigma < 0:
        raise InvalidArgumentError("sigma must be nonnegative")
    beta = np.asarray(beta_star, dtype=np.float64)
    if beta.shape != (d,):
        raise InvalidArgumentError(f"beta_star must have length {d}")
    X = src.spawn(0).generator().standard_normal((n, d))
    if cov_factor is not None:
        X = X @ np.asarray(cov_factor, dtype=np.float64).T
    noise = src.spawn(1).generator().standard_normal(n)
    y = X @ beta + sigma * noise
    return RegressionInstance(X, y, beta, float(sigma))


def sparse_unit_beta(d: int, s: int, src: RandomSource) -> np.ndarray:
    """Unit-norm vector supported on ``s`` random coordinates."""
    gen = src.generator()
    beta = np.zeros(d)
    idx = gen.choice(d, size=s, replace=False)
    beta[idx] = gen.standard_normal(s)
    return beta / np.linalg.norm(beta)


def default_lambda(Xs: np.ndarray) -> float:
    """``1e-6 * Tr(Xs^T Xs) / b``."""
    return RIDGE_SCALE * float(np.sum(Xs * Xs)) / Xs.shape[1]


def solve_ridge(A: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """``(A^T A + lam I)^{-1} A^T y`` by Cholesky; raises on a singular system."""
    G = A.T @ A + lam * np.eye(A.shape[1])
    try:
        c = linalg.cho_factor(G, lower=True)
    except linalg.LinAlgError as exc:
        raise NumericFailureError(f"normal equations are not positive definite: {exc}") from None
    if lam == 0:
        diag = np.diag(c[0])
        if diag.min() <= 1e-10 * diag.max():
            raise NumericFailureError("normal equations are numerically singular")
    return linalg.cho_solve(c, A.T @ y)


def fit_sketched(inst: RegressionInstance, b: int, lam: float | None = None,
                 src: RandomSource | None = None, S: SketchMatrix | None = None) -> SketchedFit:
    """Ridge fit on ``(S x_i, y_i)``; ``lam=None`` picks the default scale."""
    if S is None:
        if src is None:
            raise InvalidArgumentError("either src or an explicit sketch S is required")
        S = make_sketch(b, inst.d, src)
    if S.cols != inst.d:
        raise InvalidArgumentError(f"sketch has {S.cols} columns, design has {inst.d}")
    Xs = inst.X @ S.entries.T
    lam = default_lambda(Xs) if lam is None else float(lam)
    if lam < 0:
        raise InvalidArgumentError("lambda must be nonnegative")
    beta_s = solve_ridge(Xs, inst.y, lam)
    return SketchedFit(S, beta_s, desk(S, beta_s), lam)


def fit_coordinates(inst: RegressionInstance, coords, lam: float | None = None) -> np.ndarray:
    """Ridge fit restricted to a coordinate subset, zero elsewhere (baseline)."""
    coords = np.asarray(coords, dtype=int)
    Xc = inst.X[:, coords]
    lam = default_lambda(Xc) if lam is None else float(lam)
    beta = np.zeros(inst.d)
    beta[coords] = solve_ridge(Xc, inst.y, lam)
    return beta


def prediction_error(fit, inst: RegressionInstance, probes) -> float:
    """``max_x |(beta_hat - beta*)^T x|`` over the probes.

    ``fit`` may be a :class:`SketchedFit` or a plain d-vector estimate.
    """
    beta = fit.beta_desk if isinstance(fit, SketchedFit) else np.asarray(fit, dtype=np.float64)
    P = as_vector_set(probes).elements
    if P.shape[1] != inst.d:
        raise InvalidArgumentError(f"probes have dim {P.shape[1]}, expected {inst.d}")
    return float(np.max(np.abs(P @ (beta - inst.beta_star))))


def regression_bound_terms(inst: RegressionInstance, fit: SketchedFit, wB: float, wX: float,
                           delta: float) -> dict:
    """Additive terms of the prediction-error bound (constants 1) and their sum.

    noise  = sigma / sqrt(lmin) * (sqrt(b) + sqrt(2 log(1/delta))) * (wX^2/b + wX/sqrt(b))
    cross  = wB * wX / b
    width  = (wB + wX) / sqrt(b)
    tail   = ((wB + wX)/b + 1/sqrt(b)) * sqrt(log(1/delta))
    """
    if not 0 < delta < 1:
        raise InvalidArgumentError("delta must lie in (0, 1)")
    Xs = inst.X @ fit.S.entries.T
    b = Xs.shape[1]
    lmin = float(linalg.eigvalsh(Xs.T @ Xs, subset_by_index=[0, 0])[0])
    if lmin <= 0:
        raise NumericFailureError(f"smallest eigenvalue of the sketched Gram matrix is {lmin}")
    L = math.log(1.0 / delta)
    rb = math.sqrt(b)
    terms = {
        "lambda_min": lmin,
        "noise": inst.sigma / math.sqrt(lmin) * (rb + math.sqrt(2 * L)) * (wX * wX / b + wX / rb),
        "cross": wB * wX / b,
        "width": (wB + wX) / rb,
        "tail": ((wB + wX) / b + 1.0 / rb) * math.sqrt(L),
    }
    terms["total"] = terms["noise"] + terms["cross"] + terms["width"] + terms["tail"]
    return terms
