"""Uniformity and balance testers built on pairwise comparisons.

The uniformity tester draws ``q = ceil(c_u/eps)`` points from ``D`` with
full-domain queries and ``q`` points uniformly from ``[N]`` (free), then runs
``c_p`` comparisons on randomly chosen (sample, uniform) pairs.  Any
``Low``/``High`` outcome, or a ratio outside ``[1 - eps/4, 1 + eps/4]``,
means ``Far``.  Only pairs and the full domain are ever queried.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from itertools import combinations
from os import PathLike
from typing import Iterable

import numpy as np

from . import config
from .compare import CompareParams, classical_compare, eta_upper_bound, qcompare
from .distributions import Distribution, bilevel
from .errors import CalibrationFailure, DegenerateRatio, InvalidParameter
from .estimators import add_est_prob, required_queries
from .oracle import QueryLedger, classical_sample, dj_query, quantum_full_sample

EQUAL, FAR = "Equal", "Far"
COMPARE_K = 2


@dataclass(frozen=True)
class BooleanFunctionTable:
    """``f: {0,1}^n -> {0,1}^m`` as a table of ``2**n`` output integers."""

    n: int
    m: int
    table: tuple[int, ...]

    def __post_init__(self):
        table = tuple(int(v) for v in self.table)
        if self.n < 0 or self.m < 0 or self.m > self.n:
            raise InvalidParameter("need 0 <= m <= n")
        if len(table) != 1 << self.n:
            raise InvalidParameter(f"table must have 2**{self.n} entries, got {len(table)}")
        if any(not 0 <= v < 1 << self.m for v in table):
            raise InvalidParameter(f"table entries must lie in [0, 2**{self.m})")
        object.__setattr__(self, "table", table)

    @classmethod
    def from_callable(cls, n: int, m: int, fn) -> "BooleanFunctionTable":
        return cls(n, m, tuple(fn(x) for x in range(1 << n)))

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "table": list(self.table)}

    @classmethod
    def from_json(cls, data: dict) -> "BooleanFunctionTable":
        try:
            return cls(int(data["n"]), int(data["m"]), tuple(data["table"]))
        except (KeyError, TypeError) as exc:
            raise InvalidParameter(f"malformed truth table: {exc}") from exc


def load_table(path: str | PathLike) -> BooleanFunctionTable:
    with open(path) as fh:
        return BooleanFunctionTable.from_json(json.load(fh))


def function_to_distribution(f: BooleanFunctionTable) -> Distribution:
    """``N = 2**m``, ``T = 2**n``, ``counts[i] = |f^{-1}(i)|``."""
    counts = np.bincount(np.asarray(f.table, dtype=np.int64), minlength=1 << f.m)
    return Distribution(tuple(int(c) for c in counts))


def _pick_pairs(samples, points, c_p: int, rng) -> list[tuple[int, int]]:
    candidates = [(s, u) for s in samples for u in points if s != u]
    if len(candidates) <= c_p:
        return candidates
    idx = rng.choice(len(candidates), size=c_p, replace=False)
    return [candidates[i] for i in sorted(idx)]


def uniformity_test(
    dist: Distribution,
    epsilon: float,
    *,
    constants: config.Constants | None = None,
    backend=None,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    classical: bool = False,
) -> str:
    """Decide ``D = uniform`` vs ``|D - uniform| >= epsilon`` (promise problem).

    ``classical=True`` swaps every quantum comparison for the sampling-based
    one, giving the baseline with ``1/eps**2`` cost.
    """
    if not 0 < epsilon <= 2:
        raise InvalidParameter(f"epsilon must lie in (0, 2], got {epsilon}")
    k = config.active() if constants is None else constants
    rng = np.random.default_rng() if rng is None else rng
    N = dist.N
    if N == 1:
        return EQUAL

    q = math.ceil(k.c_u / epsilon)
    if classical:
        samples = classical_sample(dist, range(N), rng=rng, ledger=ledger, size=q, pairwise=True)
    else:
        samples = [quantum_full_sample(dist, rng=rng, ledger=ledger, pairwise=True) for _ in range(q)]
    points = rng.integers(0, N, size=q)
    pairs = _pick_pairs([int(s) for s in samples], [int(u) for u in points], int(k.c_p), rng)
    if not pairs:
        return EQUAL

    eta = min(epsilon / k.c_eta, 0.9 * eta_upper_bound(COMPARE_K))
    params = CompareParams(COMPARE_K, eta, 1 / (6 * len(pairs)))
    lo, hi = 1 - epsilon / 4, 1 + epsilon / 4
    for s, u in pairs:
        try:
            if classical:
                out = classical_compare(dist, [s], [u], params, rng=rng, ledger=ledger, pairwise=True)
            else:
                out = qcompare(
                    dist, [s], [u], params,
                    c_q=k.compare_c, backend=backend, rng=rng, ledger=ledger, pairwise=True,
                )
        except DegenerateRatio:
            # a zero weight estimate on one side is itself evidence of imbalance
            return FAR
        if out.tag != "Ratio" or not lo <= out.ratio <= hi:
            return FAR
    return EQUAL


def balance_test(f: BooleanFunctionTable, epsilon: float, **kw) -> str:
    """Balanced vs ``epsilon``-far from balanced, through the induced distribution."""
    return uniformity_test(function_to_distribution(f), epsilon, **kw)


def qsamp_balance_estimate(
    f: BooleanFunctionTable,
    epsilon: float,
    delta: float,
    *,
    constants: config.Constants | None = None,
    backend=None,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
) -> float:
    """Estimate ``F_0`` to additive error ``epsilon/3`` with standard-oracle queries."""
    if f.m != 1:
        raise InvalidParameter("the QSAMP balance estimate needs a single output bit")
    k = config.active() if constants is None else constants
    dist = function_to_distribution(f)
    # F_0 unknown: budget for the worst case p = 1
    M = required_queries("additive", k.additive_c, 1.0, epsilon / 3, delta)
    return add_est_prob(dist, (0,), M, delta, backend=backend, rng=rng, ledger=ledger)


def balanced_tables(n: int) -> list[tuple[int, ...]]:
    """All balanced single-output tables on ``n`` inputs."""
    size = 1 << n
    out = []
    for ones in combinations(range(size), size // 2):
        t = [0] * size
        for i in ones:
            t[i] = 1
        out.append(tuple(t))
    return out


def deutsch_jozsa_demo(n: int = 3, *, rng=None, ledger: QueryLedger | None = None) -> tuple[int, int]:
    """Run Deutsch-Jozsa on every balanced and both constant functions.

    Returns ``(correct, total)``.
    """
    cases = [(t, "Balanced") for t in balanced_tables(n)]
    cases += [((0,) * (1 << n), "Constant"), ((1,) * (1 << n), "Constant")]
    correct = sum(dj_query(t, ledger=ledger, rng=rng) == want for t, want in cases)
    return correct, len(cases)



def tester_rates(
    N: int,
    epsilon: float,
    runs: int,
    *,
    constants: config.Constants | None = None,
    backend=None,
    rng: np.random.Generator | None = None,
    classical: bool = False,
) -> tuple[float, float]:
    """``(completeness, soundness)`` on the uniform and bi-level far instances."""
    rng = np.random.default_rng() if rng is None else rng
    kw = dict(constants=constants, backend=backend, rng=rng, classical=classical)
    uniform, far = Distribution.uniform(N), bilevel(N, epsilon)
    ok_u = sum(uniformity_test(uniform, epsilon, **kw) == EQUAL for _ in range(runs))
    ok_f = sum(uniformity_test(far, epsilon, **kw) == FAR for _ in range(runs))
    return ok_u / runs, ok_f / runs


def calibrate_pairs(
    constants: config.Constants,
    *,
    N: int = 64,
    epsilons: Iterable[float] = (0.5, 0.25),
    runs: int = 200,
    target: float = 0.9,
    ladder: Iterable[int] = range(2, 17),
    backend=None,
    seed: int = 0,
) -> int:
    """Smallest pair count with completeness and soundness at least ``target``."""
    epsilons = list(epsilons)
    for c_p in ladder:
        trial = replace(constants, c_p=int(c_p))
        if all(
            min(tester_rates(N, eps, runs, constants=trial, backend=backend,
                             rng=np.random.default_rng([seed, i]))) >= target
            for i, eps in enumerate(epsilons)
        ):
            return int(c_p)
    raise CalibrationFailure("no pair count on the ladder reaches the target rates")
