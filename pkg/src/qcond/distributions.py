"""Exact rational distributions over ``[N]`` and uniform simplex sampling.

Every oracle-facing distribution stores integer counts ``c_i`` with a common
denominator ``T`` so that ``D(i) = c_i / T`` exactly.  Conditioning on a set
``S`` keeps the sub-counts and uses ``T_S = sum(c_i for i in S)`` as the new
denominator, so no rounding ever happens after :func:`rationalize`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from os import PathLike
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainMismatch, InvalidQuerySet, InvalidWeights, ZeroMassSet

WEIGHT_SUM_TOL = 1e-9


@dataclass(frozen=True)
class Distribution:
    """Distribution over ``[N]`` given by integer counts summing to ``T``."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        counts = tuple(int(c) for c in self.counts)
        if len(counts) == 0:
            raise InvalidWeights("a distribution needs N >= 1")
        if any(c < 0 for c in counts):
            raise InvalidWeights("counts must be non-negative")
        if sum(counts) < 1:
            raise InvalidWeights("counts must sum to T >= 1")
        object.__setattr__(self, "counts", counts)

    @property
    def N(self) -> int:
        return len(self.counts)

    @property
    def T(self) -> int:
        return sum(self.counts)

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.T

    def prob(self, i: int) -> Fraction:
        return Fraction(self.counts[i], self.T)

    def mass(self, S: Iterable[int]) -> Fraction:
        """Exact weight ``D(S)``."""
        return Fraction(sum(self.counts[i] for i in S), self.T)

    @classmethod
    def uniform(cls, N: int) -> "Distribution":
        return cls((1,) * N)

    @classmethod
    def point_mass(cls, N: int, i: int) -> "Distribution":
        counts = [0] * N
        counts[i] = 1
        return cls(tuple(counts))

    # JSON: {"N": int, "T": int, "counts": [int, ...]}
    def to_json(self) -> dict:
        return {"N": self.N, "T": self.T, "counts": list(self.counts)}

    @classmethod
    def from_json(cls, data: dict) -> "Distribution":
        try:
            N, T, counts = int(data["N"]), int(data["T"]), data["counts"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidWeights(f"malformed distribution record: {exc}") from exc
        if any(not isinstance(c, int) or isinstance(c, bool) for c in counts):
            raise InvalidWeights("counts must be integers")
        if len(counts) != N:
            raise InvalidWeights(f"expected {N} counts, got {len(counts)}")
        if sum(counts) != T:
            raise InvalidWeights(f"counts sum to {sum(counts)}, not T={T}")
        return cls(tuple(counts))


def load_distribution(path: str | PathLike) -> Distribution:
    with open(path) as fh:
        return Distribution.from_json(json.load(fh))


def save_distribution(dist: Distribution, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(dist.to_json(), fh)


def query_set(indices: Iterable[int], N: int) -> tuple[int, ...]:
    """Validate and normalise a query set: sorted, distinct, inside ``[N]``."""
    S = tuple(sorted(int(i) for i in indices))
    if not S:
        raise InvalidQuerySet("query set must be non-empty")
    if len(set(S)) != len(S):
        raise InvalidQuerySet(f"query set has repeated indices: {S}")
    if S[0] < 0 or S[-1] >= N:
        raise InvalidQuerySet(f"query set {S} not contained in [0, {N})")
    return S


def rationalize(weights: Sequence[float], T: int) -> Distribution:
    """Largest-remainder apportionment of ``T`` among ``weights``.

    Ties in the fractional parts go to the lowest index.
    """
    w = np.asarray(weights, dtype=float)
    if T < 1:
        raise InvalidWeights("T must be a positive integer")
    if w.ndim != 1 or w.size == 0:
        raise InvalidWeights("weights must be a non-empty vector")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidWeights("weights must be finite and non-negative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidWeights(f"weights sum to {w.sum()!r}, not 1")
    scaled = w * T
    base = np.floor(scaled).astype(np.int64)
    remaining = T - int(base.sum())
    frac = scaled - base
    # stable sort on -frac keeps lowest index first among equal remainders
    order = sorted(range(w.size), key=lambda i: -frac[i])
    if remaining < 0:
        # sum slightly above 1: take back from the smallest remainders
        for i in reversed(order[remaining:]):
            base[i] -= 1
    else:
        for i in order[:remaining]:
            base[i] += 1
    return Distribution(tuple(int(c) for c in base))


def conditional(dist: Distribution, S: Iterable[int]) -> Distribution:
    """Exact ``D_S`` re-indexed over the sorted elements of ``S``."""
    S = query_set(S, dist.N)
    sub = tuple(dist.counts[i] for i in S)
    if sum(sub) == 0:
        raise ZeroMassSet(f"D(S) = 0 for S = {S}")
    return Distribution(sub)


def l1_distance(d1: Distribution, d2: Distribution) -> float:
    if d1.N != d2.N:
        raise DomainMismatch(f"domain sizes differ: {d1.N} vs {d2.N}")
    # exact in rationals, converted once
    total = sum(
        abs(Fraction(a, d1.T) - Fraction(b, d2.T)) for a, b in zip(d1.counts, d2.counts)
    )
    return float(total)


def sample_simplex(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Uniform point(s) on the probability simplex in ``n`` coordinates.

    Normalised i.i.d. standard exponentials.  Returns shape ``(n,)`` or
    ``(size, n)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    shape = (n,) if size is None else (size, n)
    e = rng.standard_exponential(shape)
    return e / e.sum(axis=-1, keepdims=True)


def bilevel(N: int, epsilon: float) -> Distribution:
    """Half the points at ``(1+eps)/N``, half at ``(1-eps)/N``.

    The L1 distance from uniform is exactly ``eps``; ``N`` must be even.
    """
    if N % 2:
        raise ValueError("bilevel needs even N")
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    eps = Fraction(epsilon).limit_denominator(10**6)
    heavy = eps.denominator + eps.numerator
    light = eps.denominator - eps.numerator
    return Distribution((heavy,) * (N // 2) + (light,) * (N // 2))


def is_uniform(dist: Distribution) -> bool:
    return len(set(dist.counts)) == 1


def exact_ratio(dist: Distribution, X: Iterable[int], Y: Iterable[int]) -> float:
    """``D(Y) / D(X)``; ``inf`` when ``D(X) = 0``."""
    dx, dy = dist.mass(X), dist.mass(Y)
    return math.inf if dx == 0 else float(dy / dx)
