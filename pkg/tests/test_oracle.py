import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcond.distributions import Distribution, conditional
from qcond.errors import BackendCapExceeded, PairRestrictionViolation, SubsetViolation, ZeroMassSet
from qcond.oracle import (
    EmulatorBackend,
    QueryLedger,
    StatevectorBackend,
    ae_estimates,
    ae_measure,
    classical_sample,
    dj_query,
    estimates_for,
    fejer_law,
    label_map,
    next_pow2,
    pair_restricted,
)


def tv(a, b):
    return 0.5 * np.abs(np.asarray(a) - np.asarray(b)).sum()


def test_classical_sample_frequencies():
    rng = np.random.default_rng(0)
    draws = classical_sample(Distribution.uniform(4), [1, 3], rng=rng, size=10000)
    assert set(np.unique(draws)) == {1, 3}
    assert abs(np.mean(draws == 1) - 0.5) <= 0.02
    assert classical_sample(Distribution((1, 1, 3)), [2], rng=rng) == 2
    draws = classical_sample(Distribution((3, 1)), [0, 1], rng=rng, size=10000)
    assert abs(np.mean(draws == 0) - 0.75) <= 0.02
    with pytest.raises(ZeroMassSet):
        classical_sample(Distribution((1, 0, 0)), [1, 2], rng=rng)


def test_classical_ledger_kinds():
    led = QueryLedger()
    d = Distribution.uniform(5)
    classical_sample(d, range(5), ledger=led)
    classical_sample(d, [0, 1, 2], ledger=led)
    classical_sample(d, [0, 1], ledger=led, pairwise=True, size=3)
    assert (led.samp, led.cond, led.pcond) == (1, 1, 3)


def test_pair_restricted():
    assert pair_restricted([0, 3], 5) == (0, 3)
    assert pair_restricted(range(5), 5) == (0, 1, 2, 3, 4)
    with pytest.raises(PairRestrictionViolation):
        pair_restricted([0, 1, 2], 5)


@given(st.lists(st.integers(0, 20), min_size=1, max_size=8).filter(any))
def test_label_map_frequencies(counts):
    d = Distribution(tuple(counts))
    labels = label_map(d)
    assert len(labels) == d.T
    assert tuple(np.bincount(labels, minlength=d.N)) == d.counts


def test_fejer_law_normalized_and_extremes():
    for M in (4, 16, 64):
        for p in (0, 0.3, 0.5, 1):
            assert fejer_law(p, M).sum() == pytest.approx(1, abs=1e-12)
    assert fejer_law(0, 16)[0] == pytest.approx(1)
    assert fejer_law(1, 16)[8] >= 1 - 1 / 16**2


def test_ae_extremes_and_grid():
    rng = np.random.default_rng(1)
    d = Distribution((0, 3, 5))
    assert np.all(ae_estimates(d, [0, 1, 2], [0], 16, 200, rng=rng) == 0)
    ones = ae_estimates(d, [1, 2], [1, 2], 16, 2000, rng=rng)
    assert np.mean(ones == 1) >= 1 - 1 / 16**2 - 0.01
    out = ae_measure(d, [0, 1, 2], [1], 10, rng=rng)
    assert out.grover_calls == 16
    assert np.isclose(estimates_for(16), out.estimate).any()


def test_ae_errors():
    d = Distribution((1, 1, 0, 0))
    with pytest.raises(SubsetViolation):
        ae_measure(d, [0, 1], [2], 8)
    with pytest.raises(ZeroMassSet):
        ae_measure(d, [2, 3], [2], 8)
    with pytest.raises(BackendCapExceeded):
        ae_measure(Distribution((2**14, 1)), [0, 1], [0], 8, backend=StatevectorBackend())


def test_ae_half_backends_agree():
    rng = np.random.default_rng(2)
    d = Distribution((1, 1))
    samples = {}
    for name, backend in (("emu", EmulatorBackend()), ("exact", StatevectorBackend())):
        est = ae_estimates(d, [0, 1], [0], 16, 10000, backend=backend, rng=rng)
        assert abs(est.mean() - 0.5) <= 0.02
        samples[name] = np.histogram(est, bins=np.linspace(0, 1, 33))[0] / len(est)
    assert tv(samples["emu"], samples["exact"]) <= 0.05


@pytest.mark.parametrize("counts", [(1, 1), (1, 3), (2, 3, 5), (7, 0, 1, 4), (5, 11, 2)])
@pytest.mark.parametrize("M", [4, 8, 16, 32])
def test_statevector_law_matches_fejer(counts, M):
    d = Distribution(counts)
    cond = conditional(d, range(d.N))
    marked = (0,)
    exact = StatevectorBackend().outcome_law(cond, marked, M)
    analytic = EmulatorBackend().outcome_law(cond, marked, M)
    assert np.abs(exact - analytic).max() < 1e-10
    assert np.allclose(analytic, fejer_law(counts[0] / sum(counts), M))


def test_ledger_charges_next_pow2():
    led = QueryLedger()
    d = Distribution.uniform(6)
    ae_estimates(d, range(6), [0], 10, 3, ledger=led)
    ae_estimates(d, [0, 1, 2], [0], 8, 1, ledger=led)
    ae_estimates(d, [0, 1], [0], 5, 2, ledger=led, pairwise=True)
    assert (led.qsamp, led.qcond, led.pqcond) == (48, 8, 16)
    assert next_pow2(1) == 1 and next_pow2(17) == 32


@settings(max_examples=30)
@given(*(st.lists(st.integers(0, 100), min_size=6, max_size=6) for _ in range(3)))
def test_ledger_merge_associative_commutative(a, b, c):
    la, lb, lc = (QueryLedger(*x) for x in (a, b, c))
    assert (la + lb) + lc == la + (lb + lc)
    assert la + lb == lb + la
    acc = QueryLedger()
    for x in (la, lb, lc):
        acc.absorb(x)
    assert acc == la + lb + lc
    assert QueryLedger.from_json(acc.to_json()) == acc


def test_qsamp_equivalence_same_seed():
    d = Distribution((3, 1, 4, 2))
    a = ae_estimates(d, range(4), [2], 16, 50, rng=np.random.default_rng(5))
    b = ae_estimates(d, [0, 1, 2, 3], [2], 16, 50, rng=np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_deutsch_jozsa():
    assert dj_query([0] * 8) == "Constant"
    assert dj_query([1] * 8) == "Constant"
    assert dj_query([x & 1 for x in range(8)]) == "Balanced"
    assert dj_query([bin(x).count("1") % 2 for x in range(8)]) == "Balanced"
    led = QueryLedger()
    dj_query([0, 1], ledger=led)
    assert led.total == 1
