from itertools import combinations

import numpy as np
import pytest

from src import indexspace
from src.indexspace import IndexSpaceError, PairMap


@pytest.mark.parametrize("pair,expected", [((1, 2), 1), ((2, 3), 3), ((3, 4), 6), ((1, 3), 2)])
def test_pair_index(pair, expected):
    assert indexspace.pair_index(PairMap(4), *pair) == expected


def test_pair_index_is_a_bijection():
    pm = PairMap(5)
    values = [indexspace.pair_index(pm, a, b) for a, b in combinations(range(1, 6), 2)]
    assert sorted(values) == list(range(1, pm.m + 1))


@pytest.mark.parametrize("pair", [(2, 2), (3, 1), (0, 2), (4, 6)])
def test_pair_index_rejects_bad_pairs(pair):
    with pytest.raises(IndexSpaceError):
        indexspace.pair_index(PairMap(5), *pair)


def test_pair_position_is_unordered():
    pm = PairMap(7)
    assert indexspace.pair_position(pm, 5, 2) == indexspace.pair_index(pm, 2, 5)
    with pytest.raises(IndexSpaceError):
        indexspace.pair_position(pm, 3, 3)


def test_digits_roundtrip():
    assert indexspace.digits(92, 6) == [2, 0, 1, 0, 1, 0]
    assert indexspace.from_digits([2, 0, 1, 0, 1, 0]) == 92
    with pytest.raises(IndexSpaceError):
        indexspace.from_digits([3])


def test_with_digit():
    pm = PairMap(4)
    assert indexspace.with_digit(pm, 0, 1, 2) == 2
    assert indexspace.with_digit(pm, 5, 2, 0) == 2
    assert indexspace.with_digit(pm, 92, 1, 2) == 92
    with pytest.raises(IndexSpaceError):
        indexspace.with_digit(pm, 0, 7, 1)
    with pytest.raises(IndexSpaceError):
        indexspace.with_digit(pm, 0, 1, 3)


def test_f_parity_example():
    # b = 92 has b_1 = 2, b_3 = 1, b_5 = 1
    pm = PairMap(4)
    assert indexspace.f_parity(pm, 2, 92) == 1
    assert indexspace.f_parity(pm, 1, 0) == 0
    with pytest.raises(IndexSpaceError):
        indexspace.f_parity(pm, 5, 0)


def test_f_table_matches_f_parity():
    pm = PairMap(4)
    table = indexspace.f_table(pm)
    rng = np.random.default_rng(1)
    for b in rng.integers(0, pm.l, size=100):
        b = int(b)
        assert indexspace.f_signature(pm, b) == tuple(int(x) for x in table[:, b])


@pytest.mark.parametrize("n", [4, 5])
def test_only_the_pair_flips_on_its_digit(n):
    pm = PairMap(n)
    table = indexspace.f_table(pm)
    dt = indexspace.digit_table(pm.m)
    for i1, i2 in combinations(range(1, n + 1), 2):
        g = indexspace.pair_index(pm, i1, i2)
        w = 3 ** (g - 1)
        base = np.flatnonzero(dt[:, g - 1] == 0)
        f0, f1, f2 = table[:, base], table[:, base + w], table[:, base + 2 * w]
        for i in range(1, n + 1):
            row = i - 1
            if i == i1:
                assert np.all(f0[row] == f2[row]) and np.all(f0[row] != f1[row])
            elif i == i2:
                assert np.all(f0[row] == f1[row]) and np.all(f0[row] != f2[row])
            else:
                assert np.all(f0[row] == f1[row]) and np.all(f0[row] == f2[row])


def test_dense_table_refused_for_large_m():
    with pytest.raises(IndexSpaceError):
        indexspace.digit_table(21)


class TestGroupBases:
    def test_exhaustive_when_budget_allows(self):
        pm = PairMap(3)
        bases = indexspace.group_bases(pm, 1, 100, seed=0)
        assert bases == [b for b in range(27) if b % 3 == 0]

    def test_sampled(self):
        pm = PairMap(7)
        bases = indexspace.group_bases(pm, 4, 20, seed=7)
        assert len(bases) == 20
        assert len(set(bases)) == 20
        assert all(indexspace.digit(b, 4) == 0 for b in bases)
        assert all(0 <= b < pm.l for b in bases)
        assert bases == indexspace.group_bases(pm, 4, 20, seed=7)

    def test_bad_inputs(self):
        with pytest.raises(IndexSpaceError):
            indexspace.group_bases(PairMap(4), 0, 5, seed=0)
        with pytest.raises(IndexSpaceError):
            indexspace.group_bases(PairMap(4), 1, 0, seed=0)


def test_expand():
    pm = PairMap(4)
    assert indexspace.expand(pm, (1,), (0, 9)) == [0, 1, 2, 9, 10, 11]
    assert indexspace.expand(pm, (1, 2), (0,)) == list(range(9))
    assert indexspace.expand(pm, (), (5, 5)) == [5]
    with pytest.raises(IndexSpaceError):
        indexspace.expand(pm, (1,), (pm.l,))
