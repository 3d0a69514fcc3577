"""Numerical checks for the quantities behind the spectrum tester's analysis.

``M^(d)`` is the largest absolute alternating sum of ``d`` over orderings,
``E_n`` the mean absolute alternating sum of a uniform simplex point.
Divided differences and an incomplete-Beta integral identity back the
closed form for ``E_n``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations, permutations
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import CoincidentPoints, InvalidParameter, OddDimension, SizeLimit

BRUTE_FORCE_MAX_N = 10
EXACT_EN_MAX_M = 1000


def _gap_vector(d) -> np.ndarray:
    d = np.asarray(getattr(d, "d", d), dtype=float)
    if d.ndim != 1 or d.size == 0:
        raise InvalidParameter("d must be a non-empty vector")
    return d


def alternating_sum(values) -> float:
    """``v_0 - v_1 + v_2 - ...``"""
    v = np.asarray(values, dtype=float)
    return float(v[0::2].sum() - v[1::2].sum())


def md_greedy(d) -> tuple[tuple[int, ...], float]:
    """Ordering ``sigma`` with ``|alternating sum of d[sigma]| >= eta/2``.

    Negatives go (most negative first) into the subtracted slots, then the
    non-negatives (largest first) fill the added slots, and any leftover
    negatives the remaining added slots.  The construction runs on ``-d`` when
    ``d`` has more positive than negative entries; if there are still fewer
    than ``n/2`` negatives, zeros pad the subtracted slots.
    """
    d = _gap_vector(d)
    n = d.size
    if n % 2:
        raise OddDimension(f"n must be even, got {n}")
    work = -d if np.count_nonzero(d > 0) > np.count_nonzero(d < 0) else d
    half = n // 2
    ascending = sorted(range(n), key=lambda i: (work[i], i))
    odd_slots = ascending[:half]
    rest = ascending[half:]
    even_slots = sorted((i for i in rest if work[i] >= 0), key=lambda i: (-work[i], i))
    even_slots += [i for i in rest if work[i] < 0]
    sigma = [0] * n
    sigma[1::2] = odd_slots
    sigma[0::2] = even_slots
    sigma = tuple(int(i) for i in sigma)
    return sigma, abs(alternating_sum(d[list(sigma)]))


def _check_size(n: int) -> None:
    if n > BRUTE_FORCE_MAX_N:
        raise SizeLimit(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")


def md_permutation_scan(d, chunk: int = 50000) -> float:
    """Maximum over all ``n!`` orderings."""
    d = _gap_vector(d)
    n = d.size
    _check_size(n)
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    best = 0.0
    perms = permutations(range(n))
    while True:
        block = np.fromiter(
            (i for p in _take(perms, chunk) for i in p), dtype=np.intp
        ).reshape(-1, n)
        if block.size == 0:
            return best
        best = max(best, float(np.abs(d[block] @ signs).max()))


def _take(it, k):
    for _, item in zip(range(k), it):
        yield item


def md_sign_scan(d) -> float:
    """Maximum over the ``C(n, ceil(n/2))`` sign patterns with ``ceil(n/2)`` plus signs.

    An ordering only matters through which entries land in the added slots,
    so this enumerates the same values as the permutation scan.
    """
    d = _gap_vector(d)
    n = d.size
    _check_size(n)
    total = float(d.sum())
    best = 0.0
    for plus in combinations(range(n), (n + 1) // 2):
        s = float(d[list(plus)].sum())
        best = max(best, abs(2 * s - total))
    return best


def brute_force_md(d) -> float:
    """Exact ``M^(d)`` computed two ways; raises if they disagree."""
    a = md_permutation_scan(d)
    b = md_sign_scan(d)
    if abs(a - b) > 1e-12 * max(1.0, abs(a)):
        raise ArithmeticError(f"permutation scan {a!r} and sign scan {b!r} disagree")
    return a


def en_closed_form(n: int) -> float:
    """``E_n = (2m+1)/(m+1) * C(2m, m) / 2**(2m+1)`` with ``m = n/2 - 1``."""
    if n < 2 or n % 2:
        raise OddDimension(f"n must be even and >= 2, got {n}")
    m = n // 2 - 1
    if m <= EXACT_EN_MAX_M:
        return float(Fraction(2 * m + 1, m + 1) * Fraction(math.comb(2 * m, m), 2 ** (2 * m + 1)))
    log_central = math.lgamma(2 * m + 1) - 2 * math.lgamma(m + 1) - (2 * m + 1) * math.log(2)
    return (2 * m + 1) / (m + 1) * math.exp(log_central)


def simplex_points(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the probability simplex (normalised exponentials)."""
    e = rng.standard_exponential((size, n))
    return e / e.sum(axis=1, keepdims=True)


def en_monte_carlo(n: int, samples: int, rng: np.random.Generator, chunk: int = 200000) -> tuple[float, float]:
    """``(mean, stderr)`` of ``|v_0 - v_1 + ... - v_{n-1}|`` for uniform simplex ``v``."""
    if n < 2 or n % 2:
        raise OddDimension(f"n must be even and >= 2, got {n}")
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    total = total_sq = 0.0
    left = samples
    while left > 0:
        b = min(chunk, left)
        x = np.abs(simplex_points(n, b, rng) @ signs)
        total += x.sum()
        total_sq += (x * x).sum()
        left -= b
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return mean, math.sqrt(var / samples)


def divided_difference(points: Sequence[float], f: Callable[[float], float]) -> float:
    """``f[x_0, ..., x_{n-1}] = sum_j f(x_j) / prod_{k != j} (x_j - x_k)`` for distinct points."""
    x = np.asarray(points, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidParameter("need at least one point")
    if x.size > 1 and np.diff(np.sort(x)).min() < 1e-8:
        raise CoincidentPoints("points must be pairwise distinct (gap >= 1e-8)")
    out = 0.0
    for j, xj in enumerate(x):
        out += f(xj) / np.prod(np.delete(xj - x, j))
    return float(out)


def hermite_genocchi_mc(
    points: Sequence[float],
    derivative: Callable[[np.ndarray], np.ndarray],
    samples: int,
    rng: np.random.Generator,
    chunk: int = 200000,
) -> tuple[float, float]:
    """Simplex-average form of ``f[x_0, ..., x_{n-1}]``.

    ``derivative`` is ``f^(n-1)``; the simplex has volume ``1/(n-1)!`` so the
    integral equals the average over uniform ``v`` divided by ``(n-1)!``.
    Returns ``(value, stderr)``.
    """
    x = np.asarray(points, dtype=float)
    n = x.size
    scale = 1 / math.factorial(n - 1)
    total = total_sq = 0.0
    left = samples
    while left > 0:
        b = min(chunk, left)
        y = derivative(simplex_points(n, b, rng) @ x)
        total += y.sum()
        total_sq += (y * y).sum()
        left -= b
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0) * samples / max(samples - 1, 1)
    return scale * mean, scale * math.sqrt(var / samples)


def beta_block_check(m: int, rtol: float = 1e-8) -> dict:
    """``int_0^{1/2} B_z(m+1, m+1) dz`` by nested quadrature vs ``1 / (2**(2m+3) (m+1))``."""
    if not 0 <= m <= 40:
        raise InvalidParameter("m must lie in [0, 40]")

    def inner(z):
        return integrate.quad(lambda t: t**m * (1 - t) ** m, 0, z, epsabs=0, epsrel=1e-13, limit=200)[0]

    lhs = integrate.quad(inner, 0, 0.5, epsabs=0, epsrel=1e-13, limit=200)[0]
    rhs = 1 / (2 ** (2 * m + 3) * (m + 1))
    return {"m": m, "lhs": lhs, "rhs": rhs, "passed": abs(lhs - rhs) <= rtol * rhs}
