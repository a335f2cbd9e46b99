from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from groupdd.filterfn import PulseSequence
from groupdd.thompson import (
    IDENTITY,
    ActionId,
    PiecewiseLinearMap,
    apply_map,
    compose,
    compose_word,
    format_word,
    generator,
    is_power_of_two,
    map_times,
    parse_word,
)

X0, X0I, X1, X1I, ID = (generator(a) for a in ActionId)
words = st.lists(st.sampled_from(list(ActionId)), min_size=0, max_size=32)


def test_generator_values():
    assert X0(Fraction(1, 2)) == Fraction(1, 4)
    assert X1(Fraction(1, 4)) == Fraction(1, 4)
    assert ID(Fraction(3, 7)) == Fraction(3, 7)


def test_generators_in_f():
    for a in ActionId:
        assert generator(a).is_in_f()


def test_inverse_pairs():
    assert compose(X0, X0I) == IDENTITY
    assert compose(X1I, X1) == IDENTITY


def test_identity_neutral():
    m = compose_word([ActionId.X0, ActionId.X1_INV, ActionId.X1])
    assert compose(ID, m) == m
    assert compose(m, ID) == m


def test_commutator_relation():
    a = compose(X0, X1I)
    b = compose(X0I, compose(X1, X0))
    comm = compose(compose(a, b), compose(a.inverse(), b.inverse()))
    assert comm == IDENTITY
    grid = [Fraction(k, 1024) for k in range(1025)]
    assert all(comm(x) == x for x in grid)


def test_word_order():
    # first action is applied first
    m = compose_word([ActionId.X0, ActionId.X1])
    x = Fraction(3, 8)
    assert m(x) == X1(X0(x))


def test_deep_composition_exact():
    rng = np.random.default_rng(0)
    for _ in range(5):
        word = [ActionId(int(a)) for a in rng.integers(0, 5, size=64)]
        m = compose_word(word)
        assert m.is_in_f()
        assert all(is_power_of_two(s) for s in m.slopes)


@settings(max_examples=100, deadline=None)
@given(words)
def test_compose_matches_sequential_evaluation(word):
    m = compose_word(word)
    x = np.linspace(0.0, 1.0, 1000)
    y = x.copy()
    for a in word:
        y = generator(a).evaluate(y)
    np.testing.assert_allclose(m.evaluate(x), y, rtol=0, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(words, st.lists(st.floats(0.001, 0.999), min_size=1, max_size=10, unique=True))
def test_round_trip(word, raw):
    seq = PulseSequence(tuple(sorted(raw)))
    m = compose_word(word)
    back = apply_map(m.inverse(), apply_map(m, seq))
    np.testing.assert_allclose(back.as_array(), seq.as_array(), atol=1e-12)


def test_apply_map_examples():
    assert apply_map(X0, PulseSequence((0.5,))).times == (0.25,)
    assert map_times(X0, [1.0], 2.0).tolist() == [0.5]
    seq = PulseSequence((0.1, 0.6))
    assert apply_map(ID, seq) == seq


def test_exact_evaluation_rejects_outside():
    with pytest.raises(ValueError):
        X0(Fraction(3, 2))


def test_invalid_maps():
    with pytest.raises(ValueError):
        PiecewiseLinearMap.from_points([(0, 0), (Fraction(1, 2), Fraction(1, 2)), (Fraction(1, 4), 1), (1, 1)])
    with pytest.raises(ValueError):
        PiecewiseLinearMap.from_points([(0, Fraction(1, 8)), (1, 1)])


def test_non_f_map_detected():
    m = PiecewiseLinearMap.from_points([(0, 0), (Fraction(1, 3), Fraction(1, 2)), (1, 1)])
    assert not m.is_in_f()


def test_word_text_round_trip():
    word = list(ActionId)
    assert parse_word(format_word(word)) == word
    with pytest.raises(ValueError):
        parse_word("x0 x2")
