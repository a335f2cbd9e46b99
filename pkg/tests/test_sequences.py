from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from groupdd.sequences import Family, SequenceFamily, cdd_fractions, cdd_order_for, make_sequence


def _cdd_symbolic(order):
    """String concatenation: 'f' is a unit of free evolution, 'X' a pulse."""
    word = "f"
    for _ in range(order):
        word = word + "X" + word + "X"
        while "XX" in word:
            word = word.replace("XX", "")
    unit = Fraction(1, word.count("f"))
    out, elapsed = [], Fraction(0)
    for ch in word:
        if ch == "f":
            elapsed += unit
        else:
            out.append(elapsed)
    return out


@pytest.mark.parametrize("order,count", [(1, 2), (2, 2), (3, 6), (4, 10)])
def test_cdd_counts_match_symbolic(order, count):
    assert cdd_fractions(order) == _cdd_symbolic(order)
    assert len(cdd_fractions(order)) == count


def test_cdd4_times():
    seq = make_sequence(SequenceFamily(Family.CDD, 10))
    expected = np.array([1, 3, 4, 5, 7, 9, 11, 12, 13, 15]) / 16
    np.testing.assert_array_equal(seq.as_array(), expected)
    assert cdd_order_for(10) == 4


def test_cdd_drops_end_pulse():
    # order 3 ends on t = 1; only its 5 interior pulses are kept
    seq = make_sequence(SequenceFamily(Family.CDD, 5, cdd_order=3))
    assert seq.n_pulses == 5


def test_cdd_count_mismatch():
    with pytest.raises(ValueError):
        make_sequence(SequenceFamily(Family.CDD, 7, cdd_order=4))
    with pytest.raises(ValueError):
        cdd_order_for(7)


def test_udd_single_pulse():
    assert make_sequence(SequenceFamily(Family.UDD, 1)).times == pytest.approx((0.5,), abs=1e-15)


def test_cpmg_two():
    assert make_sequence(SequenceFamily(Family.CPMG, 2)).times == (0.25, 0.75)


def test_pdd():
    np.testing.assert_allclose(make_sequence(SequenceFamily(Family.PDD, 3, 2.0)).as_array(), [0.5, 1.0, 1.5])


@pytest.mark.parametrize("kind", [Family.PDD, Family.CPMG, Family.UDD])
@pytest.mark.parametrize("n", [1, 2, 5, 10, 13])
def test_symmetric(kind, n):
    seq = make_sequence(SequenceFamily(kind, n, 1.0))
    np.testing.assert_allclose(seq.as_array(), seq.mirrored().as_array(), atol=1e-12)


def test_prdd_in_subintervals():
    for seed in range(20):
        seq = make_sequence(SequenceFamily(Family.PRDD, 10, 2.0, rng_seed=seed))
        t = seq.as_array()
        j = np.arange(10)
        assert np.all((t > j * 0.2) & (t <= (j + 1) * 0.2))


def test_prdd_deterministic():
    a = make_sequence(SequenceFamily(Family.PRDD, 10, rng_seed=5))
    b = make_sequence(SequenceFamily(Family.PRDD, 10, rng_seed=5))
    assert a == b


def test_prdd_needs_seed():
    with pytest.raises(ValueError):
        SequenceFamily(Family.PRDD, 3)


def test_family_from_string():
    assert SequenceFamily("cpmg", 2).kind is Family.CPMG
