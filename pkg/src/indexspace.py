"""
Base-3 coordinate indexing for the inner MSCR code.

A coordinate index b in [0, 3^m) is an int whose base-3 digits
(b_m, ..., b_1) satisfy b = b_1 + 3 b_2 + ... + 3^(m-1) b_m, with
m = C(n, 2). Digit positions are 1-based, matching pair_index values.
Digits are computed on demand; l = 3^m is never enumerated unless m is
small enough for dense tables.
"""

import logging
from dataclasses import dataclass
from math import comb

import numpy as np

import config

logger = logging.getLogger(__name__)

# A coordinate index; plain int so 128-bit values stay exact
BIndex = int


class IndexSpaceError(ValueError):
    """Raised for out-of-range node ids, digit positions or trits."""


@dataclass(frozen=True)
class PairMap:
    """Node pairs of an n-node inner code mapped onto m = C(n,2) digits."""

    n: int

    @property
    def m(self) -> int:
        return comb(self.n, 2)

    @property
    def l(self) -> int:
        return 3 ** self.m


def pair_index(pm: PairMap, i1: int, i2: int) -> int:
    """g(i1, i2) = C(i2-1, 2) + i1 for 1 <= i1 < i2 <= n."""
    if not (1 <= i1 < i2 <= pm.n):
        raise IndexSpaceError(f"need 1 <= i1 < i2 <= {pm.n}, got ({i1}, {i2})")
    return comb(i2 - 1, 2) + i1


def pair_position(pm: PairMap, x: int, y: int) -> int:
    """Digit position for an unordered pair of distinct node ids."""
    if x == y:
        raise IndexSpaceError(f"pair needs two distinct nodes, got ({x}, {y})")
    return pair_index(pm, min(x, y), max(x, y))


def digit(b: BIndex, pos: int) -> int:
    return (b // 3 ** (pos - 1)) % 3


def digits(b: BIndex, m: int) -> list[int]:
    """Digits of b least-significant first: [b_1, ..., b_m]."""
    out = []
    for _ in range(m):
        b, d = divmod(b, 3)
        out.append(d)
    return out


def from_digits(ds) -> BIndex:
    """Inverse of digits(): ds is least-significant first."""
    b = 0
    for d in reversed(list(ds)):
        if d not in (0, 1, 2):
            raise IndexSpaceError(f"digit {d} is not a trit")
        b = 3 * b + d
    return b


def with_digit(pm: PairMap, b: BIndex, pos: int, u: int) -> BIndex:
    """b(pos, u): b with digit `pos` replaced by u."""
    if not (1 <= pos <= pm.m):
        raise IndexSpaceError(f"digit position {pos} outside [1, {pm.m}]")
    if u not in (0, 1, 2):
        raise IndexSpaceError(f"{u} is not a trit")
    weight = 3 ** (pos - 1)
    return b + (u - digit(b, pos)) * weight


def f_parity(pm: PairMap, i: int, b: BIndex) -> int:
    """
    Parity of P_f = |{j < i : b_g(j,i) = 2}| + |{j > i : b_g(i,j) = 1}|.
    """
    if not (1 <= i <= pm.n):
        raise IndexSpaceError(f"node {i} outside [1, {pm.n}]")
    count = 0
    for j in range(1, i):
        if digit(b, pair_index(pm, j, i)) == 2:
            count += 1
    for j in range(i + 1, pm.n + 1):
        if digit(b, pair_index(pm, i, j)) == 1:
            count += 1
    return count & 1


def f_signature(pm: PairMap, b: BIndex) -> tuple[int, ...]:
    """(f(1,b), ..., f(n,b)); fixes every node's lambda at coordinate b."""
    return tuple(f_parity(pm, i, b) for i in range(1, pm.n + 1))


def digit_table(m: int) -> np.ndarray:
    """(3^m, m) array of digits, column t holding b_(t+1)."""
    if m > config.MAX_DENSE_DIGITS:
        raise IndexSpaceError(f"refusing a dense table for m={m} digits")
    b = np.arange(3 ** m, dtype=np.int64)
    powers = 3 ** np.arange(m, dtype=np.int64)
    return (b[:, None] // powers[None, :]) % 3


def f_table(pm: PairMap) -> np.ndarray:
    """(n, l) int8 array with f(i, b) at [i-1, b]; small n only."""
    table = digit_table(pm.m)
    out = np.zeros((pm.n, table.shape[0]), dtype=np.int8)
    for i in range(1, pm.n + 1):
        count = np.zeros(table.shape[0], dtype=np.int64)
        for j in range(1, i):
            count += table[:, pair_index(pm, j, i) - 1] == 2
        for j in range(i + 1, pm.n + 1):
            count += table[:, pair_index(pm, i, j) - 1] == 1
        out[i - 1] = count & 1
    return out


def group_bases(pm: PairMap, g_pos: int, budget: int, seed: int) -> list[BIndex]:
    """
    Up to `budget` distinct coordinate indices with digit g_pos = 0.

    Each base b names the repair group {b(g_pos,0), b(g_pos,1), b(g_pos,2)}.
    When 3^(m-1) <= budget every base is returned; otherwise they are drawn
    from a generator seeded with `seed`. The result is sorted.
    """
    if not (1 <= g_pos <= pm.m):
        raise IndexSpaceError(f"digit position {g_pos} outside [1, {pm.m}]")
    if budget < 1:
        raise IndexSpaceError("budget must be at least 1")

    if 3 ** (pm.m - 1) <= budget:
        weight = 3 ** (g_pos - 1)
        return [b for b in range(pm.l) if (b // weight) % 3 == 0]

    rng = np.random.default_rng(seed)
    chosen: set[BIndex] = set()
    while len(chosen) < budget:
        ds = rng.integers(0, 3, size=pm.m)
        ds[g_pos - 1] = 0
        chosen.add(from_digits(int(d) for d in ds))
    return sorted(chosen)


def expand(pm: PairMap, free, anchors) -> list[BIndex]:
    """
    Every index obtained from an anchor by letting the free digits range
    over {0, 1, 2}. Sorted, without duplicates.
    """
    free = sorted(set(free))
    for pos in free:
        if not (1 <= pos <= pm.m):
            raise IndexSpaceError(f"digit position {pos} outside [1, {pm.m}]")
    out: set[BIndex] = set()
    for anchor in anchors:
        if not (0 <= anchor < pm.l):
            raise IndexSpaceError(f"index {anchor} outside [0, {pm.l})")
        level = [anchor]
        for pos in free:
            level = [with_digit(pm, b, pos, u) for b in level for u in (0, 1, 2)]
        out.update(level)
    return sorted(out)
