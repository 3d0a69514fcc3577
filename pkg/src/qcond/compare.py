"""Ratio comparison of two disjoint sets: quantum (QCompare) and classical baseline.

Both procedures estimate ``r = D(Y)/D(X)`` or report ``Low``/``High`` when the
ratio leaves ``[1/K, K]``.  The quantum one spends
``Theta(sqrt(K) log(1/delta)/eta)`` conditional queries on ``X u Y``; the
classical one ``Theta(K log(1/delta)/eta^2)`` conditional samples.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import config
from .distributions import Distribution, query_set
from .errors import CalibrationFailure, DegenerateRatio, InvalidComparison
from .estimators import add_est_prob_qcond, mul_est_prob_qcond, repetitions
from .oracle import QueryLedger, classical_counts, pair_restricted


@dataclass(frozen=True)
class CompareOutcome:
    tag: str  # "Low" | "High" | "Ratio"
    ratio: float | None = None

    def __post_init__(self):
        if self.tag not in ("Low", "High", "Ratio"):
            raise ValueError(f"bad outcome tag {self.tag!r}")
        if (self.tag == "Ratio") != (self.ratio is not None):
            raise ValueError("a ratio value is present exactly for Ratio outcomes")
        if self.ratio is not None and not self.ratio > 0:
            raise ValueError("ratio must be strictly positive")

    def mirrored(self) -> "CompareOutcome":
        """Outcome expected after swapping X and Y."""
        if self.tag == "Low":
            return HIGH
        if self.tag == "High":
            return LOW
        return CompareOutcome("Ratio", 1 / self.ratio)


LOW = CompareOutcome("Low")
HIGH = CompareOutcome("High")


def eta_upper_bound(K: float) -> float:
    """Largest admissible ``eta``: the threshold checks separate ``K/(K+1) + eta/3``
    from ``3K/(3K+1) - eta/3`` exactly when ``eta < 3K / ((3K+1)(K+1))``."""
    return 3 * K / ((3 * K + 1) * (K + 1))


@dataclass(frozen=True)
class CompareParams:
    K: float
    eta: float
    delta: float

    def __post_init__(self):
        if not self.K >= 1:
            raise InvalidComparison(f"K must be >= 1, got {self.K}")
        if not 0 < self.eta < eta_upper_bound(self.K):
            raise InvalidComparison(
                f"eta must lie in (0, {eta_upper_bound(self.K):.4g}) for K = {self.K}"
            )
        if not 0 < self.delta <= 1:
            raise InvalidComparison(f"delta must lie in (0, 1], got {self.delta}")

    @property
    def threshold(self) -> float:
        return 3 * self.K / (3 * self.K + 1) - self.eta / 3


def _check_sets(dist: Distribution, X: Iterable[int], Y: Iterable[int]):
    try:
        X, Y = query_set(X, dist.N), query_set(Y, dist.N)
    except ValueError as exc:
        raise InvalidComparison(str(exc)) from exc
    if set(X) & set(Y):
        raise InvalidComparison(f"X = {X} and Y = {Y} are not disjoint")
    S = tuple(sorted(X + Y))
    if dist.mass(S) == 0:
        raise InvalidComparison("D(X u Y) = 0")
    return X, Y, S


def qcompare_budget(params: CompareParams, c_q: float | None = None) -> int:
    """Per-estimator query budget ``M = ceil(c_q sqrt(K) m(delta/4) / eta)``."""
    c_q = config.active().compare_c if c_q is None else c_q
    return math.ceil(c_q * math.sqrt(params.K) * repetitions(params.delta / 4) / params.eta)


def qcompare(
    dist: Distribution,
    X: Iterable[int],
    Y: Iterable[int],
    params: CompareParams,
    *,
    c_q: float | None = None,
    backend=None,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    pairwise: bool | None = None,
) -> CompareOutcome:
    X, Y, S = _check_sets(dist, X, Y)
    if pairwise is None:
        pairwise = len(X) == 1 and len(Y) == 1
    if pairwise:
        pair_restricted(S, dist.N)
    rng = np.random.default_rng() if rng is None else rng
    M = qcompare_budget(params, c_q)
    d4 = params.delta / 4
    kw = dict(backend=backend, rng=rng, ledger=ledger, pairwise=pairwise)

    w_add_x = add_est_prob_qcond(dist, S, X, M, d4, **kw)
    w_add_y = add_est_prob_qcond(dist, S, Y, M, d4, **kw)
    w_mul_x = mul_est_prob_qcond(dist, S, X, M, d4, **kw)
    w_mul_y = mul_est_prob_qcond(dist, S, Y, M, d4, **kw)

    if w_add_x > params.threshold:
        return LOW
    if w_add_y > params.threshold:
        return HIGH
    if w_mul_x == 0 or w_mul_y == 0:
        raise DegenerateRatio("a multiplicative weight estimate is zero")
    return CompareOutcome("Ratio", w_mul_y / w_mul_x)


def classical_budget(params: CompareParams) -> int:
    """Sample count for additive and multiplicative error ``eta/3`` at failure ``delta``.

    Hoeffding for the additive part; multiplicative Chernoff with
    ``w >= 1/(3K+1)`` for the ratio part.
    """
    g = params.eta / 3
    log_term = math.log(4 / params.delta)
    n_add = log_term / (2 * g * g)
    n_mul = 3 * (3 * params.K + 1) * log_term / (g * g)
    return math.ceil(max(n_add, n_mul))


def classical_compare(
    dist: Distribution,
    X: Iterable[int],
    Y: Iterable[int],
    params: CompareParams,
    *,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    pairwise: bool | None = None,
) -> CompareOutcome:
    X, Y, S = _check_sets(dist, X, Y)
    if pairwise is None:
        pairwise = len(X) == 1 and len(Y) == 1
    n = classical_budget(params)
    hist = classical_counts(dist, S, n, rng=rng, ledger=ledger, pairwise=pairwise)
    w_x = sum(hist[i] for i in X) / n
    w_y = 1.0 - w_x
    if w_x > params.threshold:
        return LOW
    if w_y > params.threshold:
        return HIGH
    if w_x == 0 or w_y == 0:
        raise DegenerateRatio("all draws landed on one side")
    return CompareOutcome("Ratio", w_y / w_x)


REGIMES = ("1", "2ai", "2aii", "2bi", "2bii")


def regime_of(r: float, K: float) -> str:
    if 1 / K <= r <= K:
        return "1"
    if r > 3 * K:
        return "2ai"
    if r > K:
        return "2aii"
    if r < 1 / (3 * K):
        return "2bi"
    return "2bii"


def violates_contract(outcome: CompareOutcome, r: float, K: float, eta: float) -> bool:
    """Whether ``outcome`` breaks the guarantee for true ratio ``r``.

    Far-out ratios (beyond ``3K`` or below ``1/(3K)``) must produce
    ``High``/``Low``; intermediate out-of-range ratios may also produce an
    accurate ratio.
    """
    accurate = outcome.tag == "Ratio" and (1 - eta) * r <= outcome.ratio <= (1 + eta) * r
    regime = regime_of(r, K)
    if regime == "1":
        return not accurate
    if regime == "2ai":
        return outcome.tag != "High"
    if regime == "2bi":
        return outcome.tag != "Low"
    if regime == "2aii":
        return not (outcome.tag == "High" or accurate)
    return not (outcome.tag == "Low" or accurate)


def regime_instance(regime: str, K: float) -> tuple[Distribution, float]:
    """Two-point distribution (X = {0}, Y = {1}) whose ratio sits in ``regime``."""
    K_int = int(K)
    if K_int != K:
        raise ValueError("regime instances need integer K")
    counts = {
        "1": (1, 1),
        "2aii": (1, 2 * K_int),
        "2ai": (1, 4 * K_int),
        "2bii": (2 * K_int, 1),
        "2bi": (4 * K_int, 1),
    }[regime]
    return Distribution(counts), counts[1] / counts[0]


def calibration_ratios(K: int) -> list[Fraction]:
    """Ratios covering every regime and both sides of each boundary."""
    base = [Fraction(1), Fraction(K), Fraction(K + 1, 2), Fraction(3, 2), Fraction(K + 1),
            Fraction(2 * K), Fraction(3 * K), Fraction(3 * K + 1), Fraction(4 * K)]
    return sorted(set(base + [1 / r for r in base]))


def violation_rate(
    c_q: float,
    K: int,
    r: Fraction,
    eta: float,
    delta: float,
    trials: int,
    *,
    backend=None,
    rng: np.random.Generator | None = None,
) -> float:
    """Fraction of runs breaking the contract on the pair instance with ratio ``r``."""
    dist = Distribution((r.denominator, r.numerator))
    params = CompareParams(K, eta, delta)
    rng = np.random.default_rng() if rng is None else rng
    bad = 0
    for _ in range(trials):
        try:
            out = qcompare(dist, [0], [1], params, c_q=c_q, backend=backend, rng=rng)
        except DegenerateRatio:
            bad += 1
            continue
        bad += violates_contract(out, float(r), K, eta)
    return bad / trials


def calibrate_compare_constant(
    Ks: Iterable[int] = (2, 8),
    *,
    eta: float = 0.1,
    delta: float = 0.1,
    trials: int = 1000,
    ladder: Iterable[float] = tuple(range(1, 17)),
    backend=None,
    seed: int = 0,
) -> float:
    """Smallest ``c_q`` whose violation rate stays within ``delta`` on every calibration ratio."""
    cases = [(K, r) for K in Ks for r in calibration_ratios(K)]
    for c in ladder:
        if all(
            violation_rate(c, K, r, eta, delta, trials, backend=backend,
                           rng=np.random.default_rng([seed, i])) <= delta
            for i, (K, r) in enumerate(cases)
        ):
            return float(c)
    raise CalibrationFailure(f"no c_q on the ladder meets the comparison contract for K in {list(Ks)}")
