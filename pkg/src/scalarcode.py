"""
The outer scalar code over F_q: a Reed-Solomon code whose codewords index
the nodes of the concatenated code.

Field value v of F_q maps to inner node id v + 1, so codeword symbols are
node ids in [1, q]. Node i of the concatenated code is the codeword of the
(i-1)-th message vector in lexicographic order.

Usage:
    python -m src.scalarcode                     # (7, 7, 2) summary
    python -m src.scalarcode --q 7 --n 7 --k 3 --check
"""

import argparse
import logging
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from itertools import combinations

import galois

logger = logging.getLogger(__name__)


class ScalarCodeError(ValueError):
    """Raised for invalid outer-code parameters or codeword indices."""


@dataclass(frozen=True)
class ScalarCodeSpec:
    q: int
    N: int
    K: int
    eval_points: tuple
    GF: type = dc_field(compare=False, repr=False)

    @property
    def D(self) -> int:
        return self.N - self.K + 1

    @property
    def delta(self) -> Fraction:
        return Fraction(self.D, self.N)

    @property
    def M(self) -> int:
        return self.q ** self.K


@dataclass(frozen=True)
class OuterCodeword:
    """N symbols, each an inner node id in [1, q]."""

    symbols: tuple

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, j: int) -> int:
        return self.symbols[j]

    def values(self) -> list[int]:
        """Underlying field values (node id - 1)."""
        return [s - 1 for s in self.symbols]


def build_rs(q: int, N: int, K: int) -> ScalarCodeSpec:
    """RS(N, K) over F_q evaluated at the field elements 0..N-1."""
    if not galois.is_prime_power(q):
        raise ScalarCodeError(f"q={q} is not a prime power")
    if not (1 <= K <= N):
        raise ScalarCodeError(f"need 1 <= K <= N, got K={K}, N={N}")
    if N > q:
        raise ScalarCodeError(f"length N={N} exceeds field size q={q}")
    spec = ScalarCodeSpec(q=q, N=N, K=K, eval_points=tuple(range(N)), GF=galois.GF(q))
    logger.debug("Built RS(N=%d, K=%d) over F_%d, D=%d, M=%d", N, K, q, spec.D, spec.M)
    return spec


# ---------------------------------------------------------------------------
# Codewords
# ---------------------------------------------------------------------------

def message_of(spec: ScalarCodeSpec, i: int) -> list[int]:
    """Message vector (m_0, ..., m_{K-1}) of node i, m_0 most significant."""
    if not (1 <= i <= spec.M):
        raise ScalarCodeError(f"codeword index {i} outside [1, {spec.M}]")
    idx = i - 1
    out = []
    for _ in range(spec.K):
        idx, d = divmod(idx, spec.q)
        out.append(d)
    return out[::-1]


def _evaluate(spec: ScalarCodeSpec, coeffs) -> OuterCodeword:
    # galois.Poly wants the highest degree first
    poly = galois.Poly(spec.GF(list(coeffs))[::-1], field=spec.GF)
    values = poly(spec.GF(list(spec.eval_points)))
    return OuterCodeword(tuple(int(v) + 1 for v in values))


def codeword(spec: ScalarCodeSpec, i: int) -> OuterCodeword:
    """Codeword of node i: the evaluations of sum_t m_t x^t."""
    return _evaluate(spec, message_of(spec, i))


def all_codewords(spec: ScalarCodeSpec) -> list[OuterCodeword]:
    return [codeword(spec, i) for i in range(1, spec.M + 1)]


def index_of(spec: ScalarCodeSpec, word: OuterCodeword) -> int:
    """Inverse of codeword(); raises if word is not a codeword."""
    for i in range(1, spec.M + 1):
        if codeword(spec, i) == word:
            return i
    raise ScalarCodeError(f"{word.symbols} is not a codeword")


def add(spec: ScalarCodeSpec, a: OuterCodeword, b: OuterCodeword, scale: int = 1) -> OuterCodeword:
    """a + scale * b over F_q."""
    GF = spec.GF
    out = GF(a.values()) + GF(scale) * GF(b.values())
    return OuterCodeword(tuple(int(v) + 1 for v in out))


def weight(word: OuterCodeword) -> int:
    """Hamming weight: symbols other than node 1 (field zero)."""
    return sum(1 for s in word.symbols if s != 1)


def distance(a: OuterCodeword, b: OuterCodeword) -> int:
    return sum(1 for x, y in zip(a.symbols, b.symbols) if x != y)


def min_distance(spec: ScalarCodeSpec) -> int:
    """Minimum weight over nonzero codewords, by enumeration."""
    return min(weight(w) for w in all_codewords(spec)[1:])


def pairwise_min_distance(spec: ScalarCodeSpec) -> int:
    words = all_codewords(spec)
    return min(distance(a, b) for a, b in combinations(words, 2))


def full_weight_codeword(spec: ScalarCodeSpec) -> OuterCodeword:
    """Evaluation of the constant polynomial 1."""
    return _evaluate(spec, [1] + [0] * (spec.K - 1))


def companion(spec: ScalarCodeSpec, a1: OuterCodeword, a2: OuterCodeword) -> OuterCodeword:
    """
    a3 = a1 + c w for the smallest nonzero c with a3 != a2.

    w has full weight, so a3 differs from a1 at every position.
    """
    if a1 == a2:
        raise ScalarCodeError("companion needs two distinct codewords")
    w = full_weight_codeword(spec)
    for c in range(1, spec.q):
        a3 = add(spec, a1, w, scale=c)
        if a3 != a2:
            return a3
    raise ScalarCodeError(f"no companion codeword exists over F_{spec.q}")


def main():
    parser = argparse.ArgumentParser(description="Inspect the outer Reed-Solomon code")
    parser.add_argument("--q", type=int, default=7)
    parser.add_argument("--n", type=int, default=7, help="Code length N")
    parser.add_argument("--k", type=int, default=2, help="Code dimension K")
    parser.add_argument("--check", action="store_true", help="Enumerate codewords and verify D")
    args = parser.parse_args()

    spec = build_rs(args.q, args.n, args.k)
    print(f"RS(N={spec.N}, K={spec.K}) over F_{spec.q}: D={spec.D}, delta={spec.delta}, M={spec.M}")
    if args.check:
        measured = min_distance(spec)
        print(f"  measured minimum weight: {measured}")
        if measured != spec.D:
            logger.error("Minimum weight %d differs from D=%d", measured, spec.D)
    w = full_weight_codeword(spec)
    print(f"  full-weight codeword: {w.symbols} (node {index_of(spec, w)})")


if __name__ == "__main__":
    main()
