"""Classical and quantum conditional sampling oracles with query accounting.

Two interchangeable backends realise the amplitude-estimation primitive:

* ``EmulatorBackend`` samples the phase-estimation outcome law in closed form
  (two Fejér kernels centred at ``±theta/pi``).
* ``StatevectorBackend`` builds the label register, the output register and
  the Grover iterate explicitly and runs phase estimation on the full state.

Every application of the oracle unitary is charged to a :class:`QueryLedger`.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .distributions import Distribution, conditional, query_set
from .errors import (
    BackendCapExceeded,
    InvalidParameter,
    PairRestrictionViolation,
    SubsetViolation,
)

KINDS = ("samp", "cond", "pcond", "qsamp", "qcond", "pqcond")


@dataclass
class QueryLedger:
    """Per-oracle-kind counts of oracle applications.

    ``set_sizes`` additionally tallies ``(kind, |S|)`` so callers can audit
    which query sets were issued.
    """

    samp: int = 0
    cond: int = 0
    pcond: int = 0
    qsamp: int = 0
    qcond: int = 0
    pqcond: int = 0
    set_sizes: Counter = field(default_factory=Counter, compare=False, repr=False)

    def charge(self, kind: str, count: int, set_size: int | None = None) -> None:
        if kind not in KINDS:
            raise ValueError(f"unknown oracle kind {kind!r}")
        if count < 0:
            raise ValueError("cannot charge a negative number of queries")
        setattr(self, kind, getattr(self, kind) + int(count))
        if set_size is not None:
            self.set_sizes[(kind, int(set_size))] += int(count)

    @property
    def total(self) -> int:
        return sum(getattr(self, k) for k in KINDS)

    def snapshot(self) -> dict[str, int]:
        return {k: getattr(self, k) for k in KINDS}

    def merge(self, other: "QueryLedger") -> "QueryLedger":
        out = QueryLedger(**{k: getattr(self, k) + getattr(other, k) for k in KINDS})
        out.set_sizes = self.set_sizes + other.set_sizes
        return out

    __add__ = merge

    def absorb(self, other: "QueryLedger") -> None:
        """In-place ``merge``."""
        for k in KINDS:
            setattr(self, k, getattr(self, k) + getattr(other, k))
        self.set_sizes.update(other.set_sizes)

    def to_json(self) -> str:
        return json.dumps(self.snapshot())

    @classmethod
    def from_json(cls, text: str) -> "QueryLedger":
        data = json.loads(text)
        return cls(**{k: int(data.get(k, 0)) for k in KINDS})


def pair_restricted(S: Sequence[int], N: int) -> tuple[int, ...]:
    """Gatekeeper for PCOND/PQCOND: only pairs or the whole domain pass."""
    S = tuple(S)
    if len(S) not in (2, N):
        raise PairRestrictionViolation(
            f"pairwise oracle accepts |S| in {{2, {N}}}, got |S| = {len(S)}"
        )
    return S


def _oracle_kind(quantum: bool, S: tuple[int, ...], N: int, pairwise: bool) -> str:
    if pairwise:
        pair_restricted(S, N)
        return "pqcond" if quantum else "pcond"
    if len(S) == N:
        return "qsamp" if quantum else "samp"
    return "qcond" if quantum else "cond"


def next_pow2(M: int) -> int:
    if M < 1:
        raise InvalidParameter("M must be a positive integer")
    return 1 << (int(M) - 1).bit_length()


def label_map(cond: Distribution) -> np.ndarray:
    """The function ``O_D(S, .)``: label ``i`` appears exactly ``c_i`` times."""
    return np.repeat(np.arange(cond.N), cond.counts)


# --------------------------------------------------------------------------
# amplitude-estimation outcome laws


def fejer(x: np.ndarray, M: int) -> np.ndarray:
    """``sin^2(M pi x) / (M^2 sin^2(pi x))`` with value 1 at integers."""
    x = np.asarray(x, dtype=float)
    den = np.sin(np.pi * x)
    out = np.ones_like(x)
    ok = np.abs(den) > 1e-12
    out[ok] = np.sin(M * np.pi * x[ok]) ** 2 / (M * M * den[ok] ** 2)
    return out


def fejer_law(p: float, M: int) -> np.ndarray:
    """Distribution of the phase-register outcome ``j`` in ``[0, M)``."""
    theta = math.asin(math.sqrt(min(max(p, 0.0), 1.0)))
    j = np.arange(M) / M
    law = 0.5 * fejer(j - theta / math.pi, M) + 0.5 * fejer(j + theta / math.pi, M)
    return law / law.sum()


def estimates_for(M: int) -> np.ndarray:
    """Map each phase outcome ``j`` to the probability estimate ``sin^2(pi j / M)``."""
    return np.sin(np.pi * np.arange(M) / M) ** 2


class EmulatorBackend:
    name = "emulator"

    def outcome_law(self, cond: Distribution, marked: tuple[int, ...], M: int) -> np.ndarray:
        hits = sum(cond.counts[i] for i in marked)
        return _emulator_law(hits, cond.T, M)


@lru_cache(maxsize=4096)
def _emulator_law(hits: int, total: int, M: int) -> np.ndarray:
    law = fejer_law(hits / total, M)
    law.setflags(write=False)
    return law


class StatevectorBackend:
    """Grover-iterate phase estimation on an explicit state vector.

    The query-set register is held classical; the simulated registers are the
    label register ``t`` (dimension ``T_S``) and the output register
    (dimension ``|S|``).
    """

    name = "exact"

    def __init__(self, cap: int = 2**14, max_amplitudes: int = 2**24):
        self.cap = cap
        self.max_amplitudes = max_amplitudes

    def outcome_law(self, cond: Distribution, marked: tuple[int, ...], M: int) -> np.ndarray:
        if cond.T > self.cap:
            raise BackendCapExceeded(f"T_S = {cond.T} exceeds the exact-backend cap {self.cap}")
        if M * cond.T * cond.N > self.max_amplitudes:
            raise BackendCapExceeded("phase register too large for the exact backend")
        return _statevector_law(cond.counts, marked, M)


@lru_cache(maxsize=1024)
def _statevector_law(counts: tuple[int, ...], marked: tuple[int, ...], M: int) -> np.ndarray:
    labels = label_map(Distribution(counts))
    T, s = labels.size, len(counts)
    rows = np.arange(T)[:, None]
    shifted = (np.arange(s)[None, :] + labels[:, None]) % s

    def u_d(x):  # |t>|b> -> |t>|b + O(t) mod s>
        y = np.empty_like(x)
        y[rows, shifted] = x
        return y

    def u_d_inv(x):
        return x[rows, shifted]

    def a_op(x):
        return u_d(np.fft.fft(x, axis=0, norm="ortho"))

    def a_inv(x):
        return np.fft.ifft(u_d_inv(x), axis=0, norm="ortho")

    good = np.zeros(s, dtype=bool)
    good[list(marked)] = True

    def grover(x):
        x = x.copy()
        x[:, good] *= -1
        x = a_inv(x)
        x[0, 0] *= -1
        return -a_op(x)

    psi = np.zeros((T, s), dtype=complex)
    psi[0, 0] = 1.0
    psi = a_op(psi)
    powers = np.empty((M, T, s), dtype=complex)
    for k in range(M):
        powers[k] = psi
        psi = grover(psi)
    # inverse QFT on the phase register
    amps = np.fft.fft(powers, axis=0) / M
    law = (np.abs(amps) ** 2).sum(axis=(1, 2))
    law = law / law.sum()
    law.setflags(write=False)
    return law


_BACKENDS = {"emulator": EmulatorBackend, "exact": StatevectorBackend}


def get_backend(backend=None):
    if backend is None:
        return EmulatorBackend()
    if isinstance(backend, str):
        try:
            return _BACKENDS[backend]()
        except KeyError:
            raise InvalidParameter(f"unknown backend {backend!r}") from None
    return backend


# --------------------------------------------------------------------------
# oracle operations


@dataclass(frozen=True)
class AEOutcome:
    estimate: float
    grover_calls: int


def _prepare(dist: Distribution, S: Iterable[int], R: Iterable[int]):
    S = query_set(S, dist.N)
    R = tuple(sorted(set(int(r) for r in R)))
    if not set(R) <= set(S):
        raise SubsetViolation(f"R = {R} is not a subset of S = {S}")
    cond = conditional(dist, S)
    pos = {x: k for k, x in enumerate(S)}
    marked = tuple(pos[r] for r in R)
    return S, cond, marked


def ae_estimates(
    dist: Distribution,
    S: Iterable[int],
    R: Iterable[int],
    M: int,
    shots: int = 1,
    *,
    backend=None,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    pairwise: bool = False,
) -> np.ndarray:
    """``shots`` independent amplitude-estimation runs of ``D_S(R)``.

    Each run uses a phase register of ``next_pow2(M)`` outcomes and is charged
    that many queries.
    """
    S, cond, marked = _prepare(dist, S, R)
    M_tilde = next_pow2(M)
    backend = get_backend(backend)
    rng = np.random.default_rng() if rng is None else rng
    kind = _oracle_kind(True, S, dist.N, pairwise)
    law = backend.outcome_law(cond, marked, M_tilde)
    j = rng.choice(M_tilde, size=shots, p=law)
    if ledger is not None:
        ledger.charge(kind, shots * M_tilde, len(S))
    return estimates_for(M_tilde)[j]


def ae_measure(dist, S, R, M, *, backend=None, rng=None, ledger=None, pairwise=False) -> AEOutcome:
    est = ae_estimates(
        dist, S, R, M, 1, backend=backend, rng=rng, ledger=ledger, pairwise=pairwise
    )
    return AEOutcome(float(est[0]), next_pow2(M))


def classical_sample(
    dist: Distribution,
    S: Iterable[int],
    *,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    size: int | None = None,
    pairwise: bool = False,
):
    """Draw from ``D_S``; one query per draw."""
    S = query_set(S, dist.N)
    cond = conditional(dist, S)
    kind = _oracle_kind(False, S, dist.N, pairwise)
    rng = np.random.default_rng() if rng is None else rng
    draws = rng.choice(np.asarray(S), size=size, p=cond.probabilities())
    if ledger is not None:
        ledger.charge(kind, 1 if size is None else size, len(S))
    return int(draws) if size is None else draws


def classical_counts(
    dist: Distribution,
    S: Iterable[int],
    shots: int,
    *,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
    pairwise: bool = False,
) -> dict[int, int]:
    """Histogram of ``shots`` draws from ``D_S`` (same law as repeated sampling)."""
    S = query_set(S, dist.N)
    cond = conditional(dist, S)
    kind = _oracle_kind(False, S, dist.N, pairwise)
    rng = np.random.default_rng() if rng is None else rng
    hist = rng.multinomial(shots, cond.probabilities())
    if ledger is not None:
        ledger.charge(kind, shots, len(S))
    return dict(zip(S, (int(h) for h in hist)))


def quantum_full_sample(dist: Distribution, *, rng=None, ledger=None, pairwise=False) -> int:
    """Query with ``S = [N]`` and measure the output register: a draw from ``D``."""
    S = tuple(range(dist.N))
    kind = _oracle_kind(True, S, dist.N, pairwise)
    rng = np.random.default_rng() if rng is None else rng
    i = int(rng.choice(dist.N, p=dist.probabilities()))
    if ledger is not None:
        ledger.charge(kind, 1, dist.N)
    return i


# --------------------------------------------------------------------------
# Deutsch-Jozsa on the standard oracle U_f |x>|y> = |x>|y xor f(x)>


def _walsh_hadamard(vec: np.ndarray, n: int) -> np.ndarray:
    v = vec.reshape((2,) * n + (-1,))
    h = np.array([[1, 1], [1, -1]]) / math.sqrt(2)
    for axis in range(n):
        v = np.moveaxis(np.tensordot(h, v, axes=([1], [axis])), 0, axis)
    return v.reshape(vec.shape)


def dj_query(
    table: Sequence[int],
    *,
    ledger: QueryLedger | None = None,
    rng: np.random.Generator | None = None,
) -> str:
    """Deutsch-Jozsa with one oracle call; returns ``"Constant"`` or ``"Balanced"``.

    The verdict is exact when ``f`` is promised constant or balanced; other
    functions get a verdict sampled from the circuit's output law.
    """
    f = np.asarray(table, dtype=np.int64)
    n = int(round(math.log2(f.size)))
    if f.size != 1 << n or n > 14:
        raise InvalidParameter("truth table length must be 2**n with n <= 14")
    if np.any((f != 0) & (f != 1)):
        raise InvalidParameter("Deutsch-Jozsa needs a single-bit output")
    # |x>|y> with y last; start |0...0>|1>, Hadamard everything
    state = np.zeros((1 << n, 2), dtype=complex)
    state[0, 1] = 1.0
    state = _walsh_hadamard(state, n)
    state = state @ (np.array([[1, 1], [1, -1]]) / math.sqrt(2))
    # U_f: swap the y components where f(x) = 1
    flip = f == 1
    state[flip] = state[flip][:, ::-1]
    if ledger is not None:
        ledger.charge("qsamp", 1, 2)
    state = _walsh_hadamard(state, n)
    probs = (np.abs(state) ** 2).sum(axis=1)
    rng = np.random.default_rng() if rng is None else rng
    x = int(rng.choice(1 << n, p=probs / probs.sum()))
    return "Constant" if x == 0 else "Balanced"
