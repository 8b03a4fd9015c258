"""
The concatenated epsilon-MSCR code.

M nodes are indexed by the codewords of the outer scalar code. Block j of
node i is the inner-code symbol of inner node a_{i,j} scaled by the coset
multiplier sigma_i, so the parity check at (j, b) reads

    sum_i (sigma_i lambda_{a_{i,j}, f(a_{i,j}, b)})^t c^i_{j,b} = 0,  t < r.

Like the inner code, the parity matrix is diagonal in (j, b): every
coordinate is an independent length-M Vandermonde-parity codeword.
Nodes 1..M-r carry message symbols, nodes M-r+1..M carry parity.
"""

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from src import indexspace
from src.field import Fe, FieldSpec, Subgroup, coset_representatives, erasure_operator, power_matrix
from src.indexspace import BIndex, PairMap
from src.mscr import ErasureError, MscrParams
from src.scalarcode import OuterCodeword, ScalarCodeSpec, all_codewords

logger = logging.getLogger(__name__)

MIN_R = 5


class EmscrError(ValueError):
    """Raised when the concatenated code cannot be built; names the constraint."""


@dataclass(frozen=True)
class EmscrParams:
    inner: MscrParams
    outer: ScalarCodeSpec
    sigma: tuple
    words: tuple
    _points: dict = dc_field(default_factory=dict, init=False, compare=False, repr=False)
    _ops: dict = dc_field(default_factory=dict, init=False, compare=False, repr=False)

    @property
    def field(self) -> FieldSpec:
        return self.inner.field

    @property
    def pairmap(self) -> PairMap:
        return self.inner.pairmap

    @property
    def M(self) -> int:
        return self.outer.M

    @property
    def N(self) -> int:
        return self.outer.N

    @property
    def r(self) -> int:
        return self.inner.r

    @property
    def m(self) -> int:
        return self.pairmap.m

    @property
    def message_len(self) -> int:
        """Systematic symbols per coordinate: K_S / (N l) = M - r."""
        return self.M - self.r

    def codeword(self, i: int) -> OuterCodeword:
        return self.words[i - 1]

    def symbol(self, i: int, j: int) -> int:
        """a_{i,j}: the inner node id node i uses in block j."""
        return self.words[i - 1][j - 1]


def build_emscr(
    inner: MscrParams, outer: ScalarCodeSpec, field: FieldSpec, subgroup: Subgroup
) -> EmscrParams:
    if inner.n != outer.q:
        raise EmscrError(f"inner length n={inner.n} must equal outer field size q={outer.q}")
    if inner.r < MIN_R:
        raise EmscrError(f"r must be >= {MIN_R}, got r={inner.r}")
    if inner.field != field or inner.subgroup != subgroup:
        raise EmscrError("inner code was built over a different field or subgroup")
    if subgroup.order < 2 * inner.n:
        raise EmscrError(
            f"subgroup of order {subgroup.order} is smaller than 2n = {2 * inner.n}"
        )
    cosets = (field.order - 1) // subgroup.order
    if cosets < outer.M:
        raise EmscrError(
            f"need {outer.M} distinct cosets of B0 but only {cosets} exist "
            f"({field.order - 1}/{subgroup.order})"
        )

    sigma = tuple(coset_representatives(field, subgroup, outer.M))
    words = tuple(all_codewords(outer))
    logger.info(
        "Built epsilon-MSCR code: M=%d nodes, N=%d blocks, r=%d, l=3^%d, field %d",
        outer.M, outer.N, inner.r, inner.pairmap.m, field.order,
    )
    return EmscrParams(inner=inner, outer=outer, sigma=sigma, words=words)


# ---------------------------------------------------------------------------
# Evaluation points
# ---------------------------------------------------------------------------

def node_point(params: EmscrParams, i: int, j: int, b: BIndex) -> int:
    """sigma_i * lambda_{a, f(a, b)} with a = a_{i,j}, as an int."""
    a = params.symbol(i, j)
    lam = params.inner.lam_of(a, indexspace.f_parity(params.pairmap, a, b))
    return int(params.field.element(params.sigma[i - 1]) * params.field.element(lam))


def node_column(params: EmscrParams, i: int, j: int, b: BIndex) -> Fe:
    """Length-r column (1, p, ..., p^(r-1)) of node i at (j, b)."""
    return power_matrix(params.field, [node_point(params, i, j, b)], params.r)[:, 0]


def _points_for(params: EmscrParams, j: int, sig: tuple) -> Fe:
    key = (j, sig)
    points = params._points.get(key)
    if points is None:
        GF = params.field.GF
        inner_ids = [params.symbol(i, j) for i in range(1, params.M + 1)]
        lam = GF([params.inner.lam_of(a, sig[a - 1]) for a in inner_ids])
        points = GF(list(params.sigma)) * lam
        params._points[key] = points
    return points


def block_points(params: EmscrParams, j: int, b: BIndex) -> Fe:
    """All M evaluation points at coordinate (j, b)."""
    if not (1 <= j <= params.N):
        raise EmscrError(f"block {j} outside [1, {params.N}]")
    return _points_for(params, j, indexspace.f_signature(params.pairmap, b))


def _operator(params: EmscrParams, j: int, sig: tuple, erased: tuple) -> Fe:
    key = (j, sig, erased)
    op = params._ops.get(key)
    if op is None:
        op = erasure_operator(params.field, _points_for(params, j, sig), [e - 1 for e in erased])
        params._ops[key] = op
    return op


def _rows_by_signature(params: EmscrParams, bs) -> dict[tuple, list[int]]:
    by_sig: dict[tuple, list[int]] = {}
    for row, b in enumerate(bs):
        by_sig.setdefault(indexspace.f_signature(params.pairmap, b), []).append(row)
    return by_sig


# ---------------------------------------------------------------------------
# Encode / decode
# ---------------------------------------------------------------------------

def encode_coords(params: EmscrParams, j: int, bs, messages) -> Fe:
    """Encode coordinates (j, b) for b in bs; messages has shape (len(bs), M-r)."""
    messages = params.field.array(messages).reshape(len(bs), params.message_len)
    out = params.field.GF.Zeros((len(bs), params.M))
    out[:, : params.message_len] = messages
    parity = tuple(range(params.message_len + 1, params.M + 1))
    cols = [p - 1 for p in parity]
    for sig, rows in _rows_by_signature(params, bs).items():
        op = _operator(params, j, sig, parity)
        out[np.ix_(rows, cols)] = (op @ out[rows].T).T
    return out


def encode_coord(params: EmscrParams, j: int, b: BIndex, message) -> Fe:
    return encode_coords(params, j, [b], params.field.array(message).reshape(1, -1))[0]


def syndrome(params: EmscrParams, j: int, b: BIndex, cv) -> Fe:
    H = power_matrix(params.field, block_points(params, j, b), params.r)
    return H @ params.field.array(cv)


def validate_coord(params: EmscrParams, j: int, b: BIndex, cv) -> bool:
    if len(cv) != params.M:
        return False
    return not np.any(syndrome(params, j, b, cv))


def decode_coords(params: EmscrParams, j: int, bs, words: Fe, erased) -> Fe:
    """Fill the erased node columns of words (shape (len(bs), M)) in place."""
    erased = tuple(sorted(set(erased)))
    if len(erased) > params.r:
        raise ErasureError(f"{len(erased)} erasures exceed r = {params.r}")
    if not erased:
        return words
    cols = [e - 1 for e in erased]
    words[:, cols] = 0
    for sig, rows in _rows_by_signature(params, bs).items():
        op = _operator(params, j, sig, erased)
        words[np.ix_(rows, cols)] = (op @ words[rows].T).T
    return words


def erasure_decode_coord(params: EmscrParams, j: int, b: BIndex, known: dict, erased) -> dict:
    """
    Recover erased node symbols at (j, b) from a dict node -> value covering
    every other node.
    """
    erased = set(erased)
    if len(erased) > params.r:
        raise ErasureError(f"{len(erased)} erasures exceed r = {params.r}")
    if set(known) | erased != set(range(1, params.M + 1)):
        raise ErasureError("known and erased nodes must cover all M nodes")
    if not erased:
        return {}
    word = params.field.GF.Zeros((1, params.M))
    for node, value in known.items():
        word[0, node - 1] = int(value)
    decode_coords(params, j, [b], word, erased)
    return {e: word[0, e - 1] for e in sorted(erased)}


def mds_rank_check(params: EmscrParams, A, j: int, b: BIndex) -> bool:
    """True iff the r x r Vandermonde block of the nodes in A at (j, b) is invertible."""
    A = sorted(set(A))
    if len(A) != params.r:
        raise EmscrError(f"rank check needs exactly r={params.r} nodes, got {len(A)}")
    points = [node_point(params, i, j, b) for i in A]
    V = power_matrix(params.field, points, params.r)
    return int(np.linalg.matrix_rank(V)) == params.r


# ---------------------------------------------------------------------------
# Seeded messages
# ---------------------------------------------------------------------------

def message_for(params: EmscrParams, seed: int, j: int, b: BIndex) -> Fe:
    """The M-r message symbols of coordinate (j, b) under `seed`."""
    rng = np.random.default_rng([seed, j, b])
    return params.field.array(rng.integers(0, params.field.order, size=params.message_len))


def encode_seeded(params: EmscrParams, seed: int, j: int, bs) -> Fe:
    """Codeword symbols of all M nodes at (j, b), b in bs, shape (len(bs), M)."""
    if not bs:
        return params.field.GF.Zeros((0, params.M))
    messages = np.stack([message_for(params, seed, j, b).view(np.ndarray) for b in bs])
    return encode_coords(params, j, bs, messages)
