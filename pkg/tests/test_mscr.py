from itertools import combinations

import numpy as np
import pytest

from src import indexspace
from src.field import make_field, subgroup_of_order
from src.mscr import (
    ErasureError,
    MscrError,
    build_mscr,
    coord_column,
    coord_points,
    decode_coords,
    encode_coord,
    encode_coords,
    erasure_decode_coord,
    validate_coord,
)


def _random_messages(spec, rows, k, seed):
    rng = np.random.default_rng(seed)
    return spec.array(rng.integers(0, spec.order, size=(rows, k)))


def test_lambdas_distinct_and_in_subgroup(small_inner):
    flat = [x for pair in small_inner.lam for x in pair]
    assert len(flat) == 8
    assert len(set(flat)) == 8
    assert set(flat) <= set(small_inner.subgroup.elements)
    assert small_inner.r == 2
    assert small_inner.pairmap.l == 729


def test_subgroup_too_small():
    spec = make_field(prime=29)
    with pytest.raises(MscrError):
        build_mscr(4, 2, spec, subgroup_of_order(spec, 7))


@pytest.mark.parametrize("n,k", [(4, 4), (4, 3), (4, 0)])
def test_bad_dimensions(gf19, n, k):
    with pytest.raises(MscrError):
        build_mscr(n, k, gf19, subgroup_of_order(gf19, 9))


def test_coord_column(small_inner):
    lam = small_inner.lam_of(2, indexspace.f_parity(small_inner.pairmap, 2, 92))
    assert lam == small_inner.lam_of(2, 1)
    col = coord_column(small_inner, 2, 92)
    assert col.tolist() == [1, lam]


def test_zero_message_encodes_to_zero(small_inner):
    cv = encode_coord(small_inner, 17, [0, 0])
    assert not np.any(cv)


def test_encoded_coords_validate(small_inner):
    bs = list(range(0, 729, 7))
    words = encode_coords(small_inner, bs, _random_messages(small_inner.field, len(bs), 2, 3))
    for row, b in enumerate(bs):
        assert validate_coord(small_inner, b, words[row])
    assert np.all(words[:, :2] == _random_messages(small_inner.field, len(bs), 2, 3))


def test_encoding_is_linear(small_inner):
    bs = [0, 5, 92, 728]
    a = _random_messages(small_inner.field, 4, 2, 10)
    b = _random_messages(small_inner.field, 4, 2, 11)
    lhs = encode_coords(small_inner, bs, a) + encode_coords(small_inner, bs, b)
    assert np.all(lhs == encode_coords(small_inner, bs, a + b))


def test_perturbed_symbol_fails_validation(small_inner):
    cv = encode_coord(small_inner, 92, [4, 9])
    cv[3] += small_inner.field.one
    assert not validate_coord(small_inner, 92, cv)
    assert not validate_coord(small_inner, 92, cv[:3])


def test_every_two_erasure_pattern_over_full_codewords(small_inner):
    bs = list(range(small_inner.pairmap.l))
    for trial in range(50):
        words = encode_coords(small_inner, bs, _random_messages(small_inner.field, len(bs), 2, trial))
        for erased in combinations(range(1, 5), 2):
            damaged = words.copy()
            decode_coords(small_inner, bs, damaged, erased)
            assert np.all(damaged == words), f"trial {trial}, erased {erased}"


def test_three_erasures_rejected(small_inner):
    cv = encode_coord(small_inner, 0, [1, 2])
    with pytest.raises(ErasureError):
        erasure_decode_coord(small_inner, 0, {1: cv[0]}, {2, 3, 4})


def test_erasure_decode_coord(small_inner):
    cv = encode_coord(small_inner, 40, [6, 13])
    got = erasure_decode_coord(small_inner, 40, {1: cv[0], 3: cv[2]}, {2, 4})
    assert int(got[2]) == int(cv[1])
    assert int(got[4]) == int(cv[3])
    with pytest.raises(ErasureError):
        erasure_decode_coord(small_inner, 40, {1: cv[0]}, {2, 4})


def test_points_distinct_at_every_coordinate(small_inner):
    for b in range(0, 729, 13):
        points = [int(x) for x in coord_points(small_inner, b)]
        assert len(set(points)) == 4
