"""Seeded randomness, sub-Gaussian samplers and the sketch / de-sketch operators.

Every random quantity in the package is drawn from a :class:`RandomSource`,
a ``(master_seed, stream_index)`` pair that is turned into an independent
numpy ``Generator`` through ``SeedSequence`` spawn keys. Two sources with the
same coordinates always produce the same numbers, no matter which thread or
in which order they are consumed.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomSource:
    """Coordinates of one independent random stream.

    ``path`` holds extra spawn-key components for nested streams created by
    :meth:`spawn`; top-level sources built by :func:`derive_stream` leave it
    empty.
    """

    master_seed: int
    stream_index: int
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for name in ("master_seed", "stream_index"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _U64:
                raise InvalidArgumentError(f"{name} must be a 64-bit unsigned integer, got {value}")

    @property
    def spawn_key(self) -> tuple[int, ...]:
        return (int(self.stream_index),) + tuple(int(p) for p in self.path)

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=self.spawn_key)
        return np.random.Generator(np.random.PCG64(seq))

    def spawn(self, index: int) -> "RandomSource":
        """Child stream ``index`` of this source (independent of the parent)."""
        if index < 0:
            raise InvalidArgumentError("child stream index must be nonnegative")
        return RandomSource(self.master_seed, self.stream_index, self.path + (int(index),))

    def to_dict(self) -> dict:
        return {"master_seed": int(self.master_seed), "stream_index": int(self.stream_index),
                "path": list(self.path)}


def derive_stream(master_seed: int, index: int) -> RandomSource:
    """Top-level stream ``index`` under ``master_seed``."""
    return RandomSource(int(master_seed), int(index))


class DistributionKind(str, enum.Enum):
    """Mean-zero, unit-variance coordinate laws for the random vectors."""

    GAUSSIAN = "gaussian_unit"
    RADEMACHER = "rademacher"


def _kind(kind) -> DistributionKind:
    try:
        return DistributionKind(kind)
    except ValueError:
        raise InvalidArgumentError(f"unknown distribution kind {kind!r}") from None


def draw(gen: np.random.Generator, kind, shape) -> np.ndarray:
    """Draw an array of i.i.d. unit-variance entries from an existing generator."""
    kind = _kind(kind)
    if kind is DistributionKind.GAUSSIAN:
        return gen.standard_normal(shape)
    return 2.0 * gen.integers(0, 2, size=shape).astype(np.float64) - 1.0


def sample_subgaussian(src: RandomSource, kind, length: int) -> np.ndarray:
    """``length`` i.i.d. mean-zero unit-variance draws from stream ``src``."""
    if int(length) < 1:
        raise InvalidArgumentError("length must be at least 1")
    return draw(src.generator(), kind, int(length))


class SketchMatrix:
    """A ``b x d`` sketching operator with the stream it was drawn from.

    Instances built with :func:`make_sketch` have i.i.d. N(0, 1/b) entries.
    Explicit matrices (identity sketches in tests, hand-made fixtures) can be
    wrapped with :meth:`from_array`; their ``seed`` is ``None``.
    """

    __slots__ = ("_entries", "seed")

    def __init__(self, entries, seed: RandomSource | None = None):
        arr = np.array(entries, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidArgumentError(f"sketch entries must be a nonempty 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidArgumentError("sketch entries must be finite")
        arr.setflags(write=False)
        self._entries = arr
        self.seed = seed

    @classmethod
    def from_array(cls, entries) -> "SketchMatrix":
        return cls(entries, seed=None)

    @classmethod
    def identity(cls, d: int) -> "SketchMatrix":
        return cls(np.eye(d), seed=None)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def rows(self) -> int:
        return self._entries.shape[0]

    @property
    def cols(self) -> int:
        return self._entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._entries.shape

    def __repr__(self):
        return f"SketchMatrix(rows={self.rows}, cols={self.cols}, seed={self.seed})"


def make_sketch(b: int, d: int, src: RandomSource) -> SketchMatrix:
    """Gaussian sketch with entries N(0, 1/b), deterministic in ``src``."""
    if int(b) < 1 or int(d) < 1:
        raise InvalidArgumentError(f"sketch shape must be positive, got ({b}, {d})")
    gen = src.generator()
    entries = gen.standard_normal((int(b), int(d))) / np.sqrt(b)
    return SketchMatrix(entries, seed=src)


def _vec(x, n: int, what: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise InvalidArgumentError(f"{what} must be a vector of length {n}, got shape {x.shape}")
    return x


def sk(S: SketchMatrix, x) -> np.ndarray:
    """Sketch a d-vector: ``S @ x``."""
    return S.entries @ _vec(x, S.cols, "x")


def desk(S: SketchMatrix, y) -> np.ndarray:
    """De-sketch a b-vector: ``S.T @ y``."""
    return S.entries.T @ _vec(y, S.rows, "y")


def bilinear(S: SketchMatrix, u, v) -> float:
    """Sketched bilinear form ``<S u, S v>``."""
    return float(sk(S, u) @ sk(S, v))
