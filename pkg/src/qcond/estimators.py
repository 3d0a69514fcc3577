"""Additive and multiplicative probability estimators on top of amplitude estimation.

Both estimators take the lower median of ``m(delta)`` amplitude-estimation
runs, each with a ``M // m`` query budget.  The query budget that makes a
contract hold is::

    M = ceil(c * m(delta) * g(p, eps))

with ``g = max(sqrt(p)/eps, 1/sqrt(eps))`` (additive) or
``g = 1/(eps sqrt(p))`` (multiplicative).  ``m(delta)`` grows like
``ln(1/delta)`` and plays the role of the ``log(1/delta)`` factor; ``c`` is
found by :func:`calibrate_constant`.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .distributions import Distribution
from .errors import CalibrationFailure, InvalidParameter
from .oracle import QueryLedger, ae_estimates

CALIBRATION_LADDER = tuple(0.5 * k for k in range(1, 17))

# The median locks onto grid points sin^2(pi j / M), so coverage is not
# monotone in c; a dense sweep over p guards against a lucky constant.
_SWEEP_P = (0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.37, 0.45, 0.55, 0.63, 0.7, 0.8, 0.85, 0.9, 0.95, 0.98)
CALIBRATION_GRIDS = {
    "additive": (
        (0.25, 0.05, 0.1), (0.5, 0.1, 0.05), (0.1, 0.02, 0.1),
        (0.9, 0.05, 0.01), (0.01, 0.05, 0.1), (0.75, 0.1, 0.2),
    ) + tuple((p, eps, 0.1) for eps in (0.05, 0.02) for p in _SWEEP_P),
    "multiplicative": (
        (0.5, 0.3, 0.1), (0.25, 0.1, 0.1), (0.1, 0.2, 0.05),
        (0.9, 0.05, 0.1), (0.05, 0.3, 0.1), (0.75, 0.1, 0.01),
    ) + tuple((p, eps, 0.1) for eps in (0.1, 0.3) for p in _SWEEP_P),
}


def repetitions(delta: float) -> int:
    """Even repetition count ``m = 2 ceil(9 ln(1/delta))`` (at least 2)."""
    if not 0 < delta <= 1:
        raise InvalidParameter(f"delta must lie in (0, 1], got {delta}")
    return max(2, 2 * math.ceil(9 * math.log(1 / delta)))


def lower_median(values: Sequence[float]) -> float:
    """Element ``m/2`` (1-based) of the sorted values."""
    ordered = sorted(values)
    return ordered[len(ordered) // 2 - 1] if len(ordered) > 1 else ordered[0]


def median_amplify(
    runner: Callable[[np.random.Generator], float],
    delta: float,
    rng: np.random.Generator | None = None,
) -> float:
    """Boost a 9/10-successful estimator to success ``1 - delta``.

    Runs ``runner`` ``repetitions(delta)`` times and returns the lower median,
    which is always one of the raw outputs.
    """
    m = repetitions(delta)
    rng = np.random.default_rng() if rng is None else rng
    return lower_median([runner(rng) for _ in range(m)])


def add_est_prob_qcond(
    dist: Distribution,
    S: Iterable[int],
    R: Iterable[int],
    M: int,
    delta: float,
    *,
    backend=None,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    pairwise: bool = False,
) -> float:
    """Estimate ``D_S(R)`` with ``M`` total queries at failure ``delta``."""
    if M < 1:
        raise InvalidParameter("M must be >= 1")
    m = repetitions(delta)
    runs = ae_estimates(
        dist, S, R, max(1, M // m), m,
        backend=backend, rng=rng, ledger=ledger, pairwise=pairwise,
    )
    return float(lower_median(runs))


def mul_est_prob_qcond(dist, S, R, M, delta, *, backend=None, rng=None, ledger=None, pairwise=False) -> float:
    # Same procedure; only the budget needed for the multiplicative contract differs.
    return add_est_prob_qcond(
        dist, S, R, M, delta, backend=backend, rng=rng, ledger=ledger, pairwise=pairwise
    )


def add_est_prob(dist: Distribution, R, M, delta, **kw) -> float:
    """QSAMP special case ``S = [N]``."""
    return add_est_prob_qcond(dist, range(dist.N), R, M, delta, **kw)


def mul_est_prob(dist: Distribution, R, M, delta, **kw) -> float:
    return mul_est_prob_qcond(dist, range(dist.N), R, M, delta, **kw)


def charged_queries(M: int, delta: float) -> int:
    """Exact ledger charge of one estimator call."""
    m = repetitions(delta)
    per_run = max(1, M // m)
    return m * (1 << (per_run - 1).bit_length())


def required_queries(contract: str, c: float, p: float, epsilon: float, delta: float) -> int:
    if epsilon <= 0:
        raise InvalidParameter("epsilon must be positive")
    if contract == "additive":
        g = max(math.sqrt(p) / epsilon, 1 / math.sqrt(epsilon))
    elif contract == "multiplicative":
        # p = 0 makes the multiplicative contract trivial (estimate is exactly 0)
        g = 1 / (epsilon * math.sqrt(p)) if p > 0 else 1.0
    else:
        raise InvalidParameter(f"unknown contract {contract!r}")
    return max(1, math.ceil(c * repetitions(delta) * g))


def instance_for(p: float) -> tuple[Distribution, tuple[int, int], tuple[int]]:
    """A pair distribution with ``D_S(R) = p`` exactly (``S = {0, 1}``, ``R = {0}``)."""
    frac = Fraction(p).limit_denominator(10**6)
    if not 0 <= frac <= 1:
        raise InvalidParameter("p must lie in [0, 1]")
    return Distribution((frac.numerator, frac.denominator - frac.numerator)), (0, 1), (0,)


def within_contract(contract: str, estimate, p: float, epsilon: float):
    estimate = np.asarray(estimate)
    if contract == "additive":
        return np.abs(estimate - p) <= epsilon + 1e-12
    return np.abs(estimate - p) <= epsilon * p + 1e-12


def coverage(
    contract: str,
    c: float,
    p: float,
    epsilon: float,
    delta: float,
    trials: int,
    *,
    backend=None,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
) -> float:
    """Empirical success rate of the estimator at the budget implied by ``c``."""
    dist, S, R = instance_for(p)
    M = required_queries(contract, c, p, epsilon, delta)
    rng = np.random.default_rng() if rng is None else rng
    est = add_est_prob_qcond if contract == "additive" else mul_est_prob_qcond
    hits = [
        est(dist, S, R, M, delta, backend=backend, rng=rng, ledger=ledger)
        for _ in range(trials)
    ]
    return float(np.mean(within_contract(contract, hits, p, epsilon)))


def calibrate_constant(
    contract: str,
    grid: Iterable[tuple[float, float, float]],
    *,
    trials: int = 2000,
    ladder: Sequence[float] = CALIBRATION_LADDER,
    backend=None,
    seed: int = 0,
) -> float:
    """Smallest ``c`` on the ladder reaching ``1 - delta`` coverage at every grid point."""
    grid = list(grid)
    if not grid:
        raise InvalidParameter("calibration grid is empty")
    for c in ladder:
        ok = True
        for k, (p, eps, delta) in enumerate(grid):
            rng = np.random.default_rng([seed, k])
            if coverage(contract, c, p, eps, delta, trials, backend=backend, rng=rng) < 1 - delta:
                ok = False
                break
        if ok:
            return float(c)
    raise CalibrationFailure(f"no c <= {ladder[-1]} meets the {contract} contract on {grid}")
