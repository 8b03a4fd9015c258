from fractions import Fraction

import pytest

from src import scalarcode
from src.scalarcode import ScalarCodeError, build_rs


def test_rs_772(rs772):
    assert rs772.D == 6
    assert rs772.delta == Fraction(6, 7)
    assert rs772.M == 49
    assert rs772.eval_points == tuple(range(7))


def test_length_one_dimension_full():
    spec = build_rs(7, 7, 7)
    assert spec.D == 1


@pytest.mark.parametrize("q,N,K", [(7, 8, 2), (6, 5, 2), (7, 7, 0), (7, 3, 4)])
def test_bad_parameters(q, N, K):
    with pytest.raises(ScalarCodeError):
        build_rs(q, N, K)


def test_node_numbering(rs772):
    assert scalarcode.codeword(rs772, 1).symbols == (1,) * 7
    assert scalarcode.codeword(rs772, 2).symbols == (1, 2, 3, 4, 5, 6, 7)
    assert scalarcode.codeword(rs772, 8) == scalarcode.full_weight_codeword(rs772)
    assert scalarcode.message_of(rs772, 8) == [1, 0]
    with pytest.raises(ScalarCodeError):
        scalarcode.message_of(rs772, 50)


def test_index_of(rs772):
    for i in (1, 2, 8, 23, 49):
        assert scalarcode.index_of(rs772, scalarcode.codeword(rs772, i)) == i
    with pytest.raises(ScalarCodeError):
        scalarcode.index_of(rs772, scalarcode.OuterCodeword((2, 1, 1, 1, 1, 1, 1)))


def test_minimum_distance(rs772):
    assert scalarcode.min_distance(rs772) == 6
    assert scalarcode.pairwise_min_distance(rs772) == 6


def test_codewords_closed_under_addition(rs772):
    words = scalarcode.all_codewords(rs772)
    assert len(set(words)) == 49
    table = set(words)
    for a in words[::5]:
        for b in words:
            assert scalarcode.add(rs772, a, b) in table
            assert scalarcode.add(rs772, a, b, scale=3) in table


def test_full_weight(rs772):
    w = scalarcode.full_weight_codeword(rs772)
    assert scalarcode.weight(w) == 7
    for c in range(1, 7):
        zero = scalarcode.codeword(rs772, 1)
        assert scalarcode.weight(scalarcode.add(rs772, zero, w, scale=c)) == 7


class TestCompanion:
    def test_first_choice(self, rs772):
        a1 = scalarcode.codeword(rs772, 1)
        a2 = scalarcode.codeword(rs772, 2)
        w = scalarcode.full_weight_codeword(rs772)
        a3 = scalarcode.companion(rs772, a1, a2)
        assert a3 == scalarcode.add(rs772, a1, w)
        assert scalarcode.distance(a3, a1) == 7

    def test_fallback_when_first_choice_collides(self, rs772):
        a1 = scalarcode.codeword(rs772, 1)
        w = scalarcode.full_weight_codeword(rs772)
        a2 = scalarcode.add(rs772, a1, w)
        a3 = scalarcode.companion(rs772, a1, a2)
        assert a3 == scalarcode.add(rs772, a1, w, scale=2)
        assert a3 != a2

    def test_needs_distinct_words(self, rs772):
        a1 = scalarcode.codeword(rs772, 5)
        with pytest.raises(ScalarCodeError):
            scalarcode.companion(rs772, a1, a1)

    def test_no_companion_over_f2(self):
        spec = build_rs(2, 2, 1)
        a1 = scalarcode.codeword(spec, 1)
        a2 = scalarcode.codeword(spec, 2)
        with pytest.raises(ScalarCodeError):
            scalarcode.companion(spec, a1, a2)
