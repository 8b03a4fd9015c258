"""
The base (n, k, d=k+1, h=2, l=3^C(n,2)) MSCR code, described by its parity
check matrix: row block t holds H_i^t, where H_i is diagonal with entry
lambda_{i, f(i,b)} at coordinate b.

The parity matrix is diagonal in b, so every coordinate is an independent
length-n codeword of a Vandermonde-parity code with points
lambda_{i, f(i,b)}. Coordinates sharing an f-signature share their
erasure operators, which are cached on the params object.
"""

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from src import indexspace
from src.field import Fe, FieldSpec, Subgroup, erasure_operator, power_matrix
from src.indexspace import BIndex, PairMap

logger = logging.getLogger(__name__)


class MscrError(ValueError):
    """Raised when the inner code cannot be built from the given inputs."""


class ErasureError(ValueError):
    """Raised when an erasure pattern exceeds what the code can correct."""


@dataclass(frozen=True)
class MscrParams:
    """
    Inner code parameters. lam[i-1] = (lambda_{i,0}, lambda_{i,1}) as ints.
    """

    n: int
    k: int
    field: FieldSpec
    subgroup: Subgroup
    lam: tuple
    _ops: dict = dc_field(default_factory=dict, init=False, compare=False, repr=False)

    @property
    def r(self) -> int:
        return self.n - self.k

    @property
    def pairmap(self) -> PairMap:
        return PairMap(self.n)

    def lam_of(self, i: int, u: int) -> int:
        return self.lam[i - 1][u]


def build_mscr(n: int, k: int, field: FieldSpec, subgroup: Subgroup) -> MscrParams:
    """
    Assign lambda_{i,u} as the first 2n elements of B0 in generator-power
    order, node-major then u.
    """
    if not (n > k >= 1):
        raise MscrError(f"need n > k >= 1, got n={n}, k={k}")
    if n - k < 2:
        raise MscrError(f"r = n - k must be at least 2, got {n - k}")
    if subgroup.order < 2 * n:
        raise MscrError(
            f"B0 has {subgroup.order} elements but 2n = {2 * n} distinct lambdas are needed"
        )
    lam = tuple(
        (subgroup.elements[2 * i], subgroup.elements[2 * i + 1]) for i in range(n)
    )
    logger.debug("Built MSCR(n=%d, k=%d) with lambdas %s", n, k, lam)
    return MscrParams(n=n, k=k, field=field, subgroup=subgroup, lam=lam)


def coord_points(params: MscrParams, b: BIndex) -> Fe:
    """Evaluation points (lambda_{i, f(i,b)})_i at coordinate b."""
    sig = indexspace.f_signature(params.pairmap, b)
    return params.field.array([params.lam_of(i + 1, u) for i, u in enumerate(sig)])


def coord_column(params: MscrParams, i: int, b: BIndex) -> Fe:
    """(lambda^0, ..., lambda^(r-1)) with lambda = lambda_{i, f(i,b)}."""
    lam = params.lam_of(i, indexspace.f_parity(params.pairmap, i, b))
    return power_matrix(params.field, [lam], params.r)[:, 0]


def _operator(params: MscrParams, sig: tuple, erased: tuple) -> Fe:
    key = (sig, erased)
    op = params._ops.get(key)
    if op is None:
        points = [params.lam_of(i + 1, u) for i, u in enumerate(sig)]
        op = erasure_operator(params.field, points, [e - 1 for e in erased])
        params._ops[key] = op
    return op


def encode_coords(params: MscrParams, bs, messages: Fe) -> Fe:
    """
    Systematic encoding of many coordinates at once.

    messages has shape (len(bs), k); the result has shape (len(bs), n) with
    nodes 1..k carrying the message and nodes k+1..n the parity.
    """
    messages = params.field.array(messages).reshape(len(bs), params.k)
    out = params.field.GF.Zeros((len(bs), params.n))
    out[:, : params.k] = messages
    parity = tuple(range(params.k + 1, params.n + 1))

    by_sig: dict[tuple, list[int]] = {}
    for row, b in enumerate(bs):
        by_sig.setdefault(indexspace.f_signature(params.pairmap, b), []).append(row)
    for sig, rows in by_sig.items():
        op = _operator(params, sig, parity)
        out[np.ix_(rows, [p - 1 for p in parity])] = (op @ out[rows].T).T
    return out


def encode_coord(params: MscrParams, b: BIndex, message) -> Fe:
    return encode_coords(params, [b], params.field.array(message).reshape(1, -1))[0]


def syndrome(params: MscrParams, b: BIndex, cv) -> Fe:
    H = power_matrix(params.field, coord_points(params, b), params.r)
    return H @ params.field.array(cv)


def validate_coord(params: MscrParams, b: BIndex, cv) -> bool:
    """True iff all r syndrome components vanish."""
    if len(cv) != params.n:
        return False
    return not np.any(syndrome(params, b, cv))


def decode_coords(params: MscrParams, bs, words: Fe, erased) -> Fe:
    """
    Fill the erased columns of many coordinates in place and return them.

    words has shape (len(bs), n); entries at erased nodes are ignored.
    """
    erased = tuple(sorted(set(erased)))
    if len(erased) > params.r:
        raise ErasureError(f"{len(erased)} erasures exceed r = {params.r}")
    if not erased:
        return words
    cols = [e - 1 for e in erased]
    words[:, cols] = 0

    by_sig: dict[tuple, list[int]] = {}
    for row, b in enumerate(bs):
        by_sig.setdefault(indexspace.f_signature(params.pairmap, b), []).append(row)
    for sig, rows in by_sig.items():
        op = _operator(params, sig, erased)
        words[np.ix_(rows, cols)] = (op @ words[rows].T).T
    return words


def erasure_decode_coord(params: MscrParams, b: BIndex, known: dict, erased) -> dict:
    """
    Recover the erased symbols of coordinate b from the known ones.

    known maps node id -> element; known and erased together must cover
    every node.
    """
    erased = set(erased)
    if len(erased) > params.r:
        raise ErasureError(f"{len(erased)} erasures exceed r = {params.r}")
    if set(known) | erased != set(range(1, params.n + 1)):
        raise ErasureError("known and erased nodes must cover all n nodes")
    if not erased:
        return {}

    word = params.field.GF.Zeros((1, params.n))
    for node, value in known.items():
        word[0, node - 1] = int(value)
    decode_coords(params, [b], word, erased)
    return {e: word[0, e - 1] for e in sorted(erased)}
