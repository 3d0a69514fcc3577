"""Testing whether a density matrix is maximally mixed through random-basis measurements.

For a basis ``B`` the induced distribution is ``D(i) = <b_i|rho|b_i>`` and
``delta(B) = sum_i |<b_i|Delta|b_i>|`` with ``Delta = rho - 1/n``.  Random
Haar bases make ``delta(B)`` large with probability ``~1/sqrt(n)``, which the
test exploits by repeating the uniformity tester over ``k`` bases.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from os import PathLike

import numpy as np

from . import config
from .distributions import Distribution, rationalize
from .errors import DimensionMismatch, InvalidParameter, OddDimension
from .oracle import QueryLedger
from .testers import EQUAL, FAR, uniformity_test

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionMismatch("density matrix must be square")
        if np.abs(rho - rho.conj().T).max() > HERMITIAN_TOL:
            raise InvalidParameter("density matrix must be Hermitian")
        if abs(np.trace(rho) - 1) > HERMITIAN_TOL:
            raise InvalidParameter("density matrix must have unit trace")
        if np.linalg.eigvalsh(rho).min() < -HERMITIAN_TOL:
            raise InvalidParameter("density matrix must be positive semidefinite")
        object.__setattr__(self, "matrix", rho)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    # JSON: {"n": int, "re": [[...]], "im": [[...]]}
    def to_json(self) -> dict:
        return {"n": self.n, "re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "DensityMatrix":
        try:
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data.get("im", np.zeros_like(re)), dtype=float)
            n = int(data["n"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameter(f"malformed density matrix record: {exc}") from exc
        if re.shape != (n, n) or im.shape != (n, n):
            raise DimensionMismatch(f"expected {n}x{n} real and imaginary parts")
        return cls(re + 1j * im)


def load_state(path: str | PathLike) -> DensityMatrix:
    with open(path) as fh:
        return DensityMatrix.from_json(json.load(fh))


def maximally_mixed(n: int) -> DensityMatrix:
    return DensityMatrix(np.eye(n) / n)


def pure_state(n: int, k: int = 0) -> DensityMatrix:
    rho = np.zeros((n, n))
    rho[k, k] = 1.0
    return DensityMatrix(rho)


def projector_state(n: int, rank: int) -> DensityMatrix:
    """Normalised projector onto the first ``rank`` basis vectors."""
    rho = np.zeros((n, n))
    rho[np.arange(rank), np.arange(rank)] = 1.0 / rank
    return DensityMatrix(rho)


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Orthonormal basis given by the columns of a unitary ``W``."""

    W: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=complex)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise DimensionMismatch("basis matrix must be square")
        if np.abs(W.conj().T @ W - np.eye(W.shape[0])).max() > HERMITIAN_TOL:
            raise InvalidParameter("basis matrix must be unitary")
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @classmethod
    def computational(cls, n: int) -> "BasisSpec":
        return cls(np.eye(n))


@dataclass(frozen=True, eq=False)
class SpectralGap:
    """Eigenvalues ``d`` of ``Delta = rho - 1/n`` and ``eta = sum |d_i|``."""

    d: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise InvalidParameter("d must be a non-empty vector")
        if abs(d.sum()) > HERMITIAN_TOL * max(1.0, np.abs(d).sum()):
            raise InvalidParameter(f"d must sum to zero, got {d.sum():.3g}")
        object.__setattr__(self, "d", d)

    @property
    def n(self) -> int:
        return self.d.size

    @property
    def eta(self) -> float:
        return float(np.abs(self.d).sum())


def spectral_gap(rho: DensityMatrix) -> SpectralGap:
    d = np.linalg.eigvalsh(rho.matrix - np.eye(rho.n) / rho.n)
    return SpectralGap(d - d.mean())


def trace_distance_to_mixed(rho: DensityMatrix) -> float:
    """``eta = ||rho - 1/n||_1``."""
    return spectral_gap(rho).eta


def haar_unitaries(n: int, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Haar-random unitary (or a stack of ``size`` of them) as a raw array.

    QR of a complex Ginibre matrix, with the phases of ``R``'s diagonal moved
    into ``Q`` so that the result does not depend on the QR sign convention.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    shape = (n, n) if size is None else (size, n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


def sample_haar(n: int, rng: np.random.Generator) -> BasisSpec:
    return BasisSpec(haar_unitaries(n, rng))


def _unitary(B) -> np.ndarray:
    return B.W if isinstance(B, BasisSpec) else np.asarray(B)


def _check_dims(rho: DensityMatrix, W: np.ndarray) -> None:
    if W.shape[-2:] != (rho.n, rho.n):
        raise DimensionMismatch(f"basis has shape {W.shape[-2:]}, state has n = {rho.n}")


def basis_weights(rho: DensityMatrix, B) -> np.ndarray:
    """``<b_i|rho|b_i>`` for the columns ``b_i`` of ``W`` (batched over leading axes)."""
    W = _unitary(B)
    _check_dims(rho, W)
    return np.einsum("...ji,jk,...ki->...i", W.conj(), rho.matrix, W).real


def induced_distribution(rho: DensityMatrix, B, T: int = 10**6) -> Distribution:
    w = np.clip(basis_weights(rho, B), 0.0, None)
    return rationalize(w / w.sum(), T)


def spectral_delta(rho: DensityMatrix, B) -> np.ndarray | float:
    """``delta(B) = sum_i |<b_i|rho - 1/n|b_i>|`` (batched over leading axes)."""
    out = np.abs(basis_weights(rho, B) - 1.0 / rho.n).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def haar_delta_samples(rho: DensityMatrix, samples: int, rng: np.random.Generator, chunk: int = 20000) -> np.ndarray:
    out = []
    left = samples
    while left > 0:
        b = min(chunk, left)
        out.append(spectral_delta(rho, haar_unitaries(rho.n, rng, size=b)))
        left -= b
    return np.concatenate(out)


def good_basis_threshold(epsilon: float, n: int) -> float:
    return min(1.0, epsilon) / (math.sqrt(8) * n**0.25)


def test_sizes(n: int, k_factor: float = 32, l_factor: float = 128) -> tuple[int, int]:
    """Number of bases ``k`` and uniformity runs per basis ``l`` (log base 2, at least 2)."""
    k = math.ceil(k_factor * math.sqrt(n))
    l = max(2, math.ceil(l_factor * math.log2(n)))
    return k, l


def maximally_mixed_test(
    rho: DensityMatrix,
    epsilon: float,
    *,
    k_factor: float = 32,
    l_factor: float = 128,
    T: int = 10**6,
    constants: config.Constants | None = None,
    backend=None,
    rng: np.random.Generator | None = None,
    ledger: QueryLedger | None = None,
) -> str:
    """``Equal`` if ``rho`` is maximally mixed, ``Far`` if ``||rho - 1/n||_1 >= epsilon``."""
    n = rho.n
    if n % 2:
        raise OddDimension(f"dimension must be even, got {n}")
    if not 0 < epsilon <= 2:
        raise InvalidParameter(f"epsilon must lie in (0, 2], got {epsilon}")
    rng = np.random.default_rng() if rng is None else rng
    k, l = test_sizes(n, k_factor, l_factor)
    nu = good_basis_threshold(epsilon, n)
    need = math.ceil(l / 2)
    for _ in range(k):
        dist = induced_distribution(rho, haar_unitaries(n, rng), T)
        far = 0
        for run in range(l):
            far += uniformity_test(
                dist, nu, constants=constants, backend=backend, rng=rng, ledger=ledger
            ) == FAR
            if far >= need:
                return FAR
            if far + (l - run - 1) < need:
                break
    return EQUAL


def lemma2_check(
    rho: DensityMatrix,
    lam: float,
    samples: int,
    rng: np.random.Generator,
    n_sigma: float = 3.0,
) -> dict:
    """Compare the Haar tail ``P[delta >= lam]`` with ``(E delta - lam^2)/eta``.

    The ``lam^2`` form is only reliable for small ``lam`` (the good-basis
    threshold); the report also carries the Markov form ``(E delta - lam)/eta``,
    which holds for every ``lam`` in ``[0, eta]``.
    """
    eta = trace_distance_to_mixed(rho)
    if eta <= 0:
        raise InvalidParameter("the tail bound needs eta > 0")
    if not 0 <= lam <= eta:
        raise InvalidParameter("lambda must lie in [0, eta]")
    deltas = haar_delta_samples(rho, samples, rng)
    tail = float(np.mean(deltas >= lam))
    mean = float(deltas.mean())
    bound = (mean - lam**2) / eta
    # sampling error of the tail frequency plus that of the plug-in mean
    sigma = math.sqrt(max(tail * (1 - tail), 1e-300) / samples) + deltas.std() / math.sqrt(samples) / eta
    return {
        "eta": eta,
        "lambda": lam,
        "empirical_tail": tail,
        "mean_delta": mean,
        "bound": bound,
        "markov_bound": (mean - lam) / eta,
        "sigma": sigma,
        "passed": tail >= bound - n_sigma * sigma,
    }


def expected_delta_check(rho: DensityMatrix, samples: int, rng: np.random.Generator, n_sigma: float = 3.0) -> dict:
    """Monte Carlo ``E delta`` against the lower bound ``eta / (4 sqrt(n))``."""
    eta = trace_distance_to_mixed(rho)
    deltas = haar_delta_samples(rho, samples, rng)
    mean = float(deltas.mean())
    stderr = float(deltas.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    bound = eta / (4 * math.sqrt(rho.n))
    return {
        "eta": eta,
        "mean": mean,
        "stderr": stderr,
        "bound": bound,
        "passed": mean >= bound - n_sigma * stderr,
    }


def ledger_report(
    ns=(2, 4),
    epsilon: float = 1.0,
    *,
    k_factor: float = 32,
    l_factor: float = 128,
    constants: config.Constants | None = None,
    backend=None,
    seed: int = 0,
) -> list[dict]:
    """Query counts of the full-constant test on ``1/n``, next to ``n**(3/4)/epsilon``.

    The range of ``n`` is far too small for an exponent fit; the rows are a
    ledger-count report only.
    """
    rows = []
    for n in ns:
        ledger = QueryLedger()
        verdict = maximally_mixed_test(
            maximally_mixed(n), epsilon, k_factor=k_factor, l_factor=l_factor,
            constants=constants, backend=backend, rng=np.random.default_rng([seed, n]), ledger=ledger,
        )
        k, l = test_sizes(n, k_factor, l_factor)
        rows.append({
            "n": n, "epsilon": epsilon, "k": k, "l": l, "verdict": verdict,
            "queries": ledger.total, "reference": n**0.75 / epsilon,
        })
    return rows
