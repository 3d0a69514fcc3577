import math

import numpy as np
import pytest

from qcond.appendix import (
    alternating_sum,
    beta_block_check,
    brute_force_md,
    divided_difference,
    en_closed_form,
    en_monte_carlo,
    hermite_genocchi_mc,
    md_greedy,
    md_permutation_scan,
    md_sign_scan,
)
from qcond.errors import CoincidentPoints, OddDimension, SizeLimit


def zero_sum(n, rng, dyadic=False):
    if dyadic:
        d = rng.integers(-64, 65, size=n).astype(float)
        d[-1] = -d[:-1].sum()
        return d / 128
    d = rng.standard_normal(n)
    return d - d.mean()


def test_md_examples():
    sigma, value = md_greedy([0.5, -0.5])
    assert value == 1.0 and brute_force_md([0.5, -0.5]) == 1.0
    d = [0.3, 0.2, -0.1, -0.4]
    sigma, value = md_greedy(d)
    assert sorted(sigma) == [0, 1, 2, 3]
    assert value == pytest.approx(1.0) == pytest.approx(abs(alternating_sum(np.array(d)[list(sigma)])))
    assert brute_force_md(d) == pytest.approx(1.0)
    assert brute_force_md([0, 0, 0, 0]) == 0
    with pytest.raises(OddDimension):
        md_greedy([0.1, -0.05, -0.05])
    with pytest.raises(SizeLimit):
        md_sign_scan(np.zeros(12))


@pytest.mark.parametrize("n", [2, 4, 6, 8])
def test_md_greedy_bracketed(n):
    rng = np.random.default_rng(n)
    for _ in range(40):
        d = zero_sum(n, rng, dyadic=True)
        value = md_greedy(d)[1]
        a, b = md_permutation_scan(d), md_sign_scan(d)
        assert a == b
        assert np.abs(d).sum() / 2 <= value <= a


def test_md_greedy_more_positives_than_negatives():
    d = np.array([0.1, 0.1, 0.1, 0.1, 0.1, -0.5])
    assert md_greedy(d)[1] >= np.abs(d).sum() / 2 - 1e-12


def test_en_closed_form_values():
    assert en_closed_form(2) == 0.5
    assert en_closed_form(4) == 0.375
    assert en_closed_form(1000) == pytest.approx(math.sqrt(2 / math.pi) / math.sqrt(1000), rel=0.02)
    # exact and log-gamma branches meet smoothly
    assert en_closed_form(2002) == pytest.approx(en_closed_form(2004) * math.sqrt(2004 / 2002), rel=1e-3)
    with pytest.raises(OddDimension):
        en_closed_form(3)


def test_en_lower_bound_everywhere():
    assert all(en_closed_form(n) > 1 / (2 * math.sqrt(n)) for n in range(2, 10001, 2))


@pytest.mark.parametrize("n", [2, 4, 10, 32])
def test_en_monte_carlo(n):
    mean, se = en_monte_carlo(n, 100000, np.random.default_rng(n))
    assert abs(mean - en_closed_form(n)) <= 3 * se
    assert mean > 1 / (2 * math.sqrt(n))


def test_divided_difference_examples():
    sq = lambda x: x * x
    assert divided_difference([0, 1], sq) == pytest.approx(1)
    assert divided_difference([0, 1, 2], sq) == pytest.approx(1)
    assert divided_difference([0.2, 1.7, 3.1, -0.4], lambda x: x**3) == pytest.approx(1)
    with pytest.raises(CoincidentPoints):
        divided_difference([0, 1e-10, 1], sq)


def test_hermite_genocchi_matches():
    pts = (0.0, 0.5, 1.0)
    value, se = hermite_genocchi_mc(pts, np.exp, 10**6, np.random.default_rng(0))
    assert abs(divided_difference(pts, math.exp) - value) <= 3 * se


@pytest.mark.parametrize("m", [0, 1, 5, 12, 20])
def test_beta_block(m):
    r = beta_block_check(m)
    assert r["passed"]
    if m == 0:
        assert r["rhs"] == 0.125
    if m == 1:
        assert r["rhs"] == 1 / 64
    if m == 5:
        assert r["rhs"] == 1 / (2**13 * 6)
