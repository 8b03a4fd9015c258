"""
Two-round cooperative repair of two failed nodes.

Repair works on coordinate groups {b(g,0), b(g,1), b(g,2)}: three indices
that differ only in digit g, the digit of the inner-node pair that matters
for the block. Within a group only the nodes sharing a failed node's inner
symbol see their evaluation point change, so every other helper can send a
single sum (or a single raw symbol) instead of its whole group.

Case "distinct" (the failed nodes use different inner symbols s1, s2 in the
block): each replacement reads raw symbols from the nodes sharing its own
symbol (Q), one sum from the nodes sharing the partner's symbol (V) and one
sum from k' of the remaining helpers (Gamma). The r - 3 sums it skips are
solved through an annihilator matrix. In round two the partners swap the
sum each of them learned about the other.

Case "equal" (both failed nodes share symbol s): a companion codeword a3
with a3_j != s everywhere fixes the digit pair (s, a3_j). Replacement 1
recovers both failed nodes at two digits, replacement 2 at the third, and
round two swaps the missing pieces.
"""

import logging
from dataclasses import dataclass, field as dc_field
from typing import Callable, Union

import galois
import numpy as np
from joblib import Parallel, delayed

import config
from src import indexspace, scalarcode
from src.emscr import EmscrParams, node_point
from src.field import Fe, FieldSpec, SingularSystemError, power_matrix
from src.indexspace import BIndex
from src.shardstore import Shard, SliceDescriptor

logger = logging.getLogger(__name__)

CASE_DISTINCT = "distinct"
CASE_EQUAL = "equal"


class RepairError(ValueError):
    """Raised for inputs the repair schedule cannot work with."""


class IntegrityError(RuntimeError):
    """Raised when recovered data disagrees with the reference data."""


# ---------------------------------------------------------------------------
# Requests and the helper access contract
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RawRequest:
    """One stored symbol c_{block, b}."""

    block: int
    b: BIndex


@dataclass(frozen=True)
class SumRequest:
    """c_{block, b1} + c_{block, b2}, computed by the sender."""

    block: int
    b1: BIndex
    b2: BIndex


Request = Union[RawRequest, SumRequest]

# (helper node id, request) -> one field element
HelperRead = Callable[[int, Request], Fe]


def reader_from_symbols(field: FieldSpec, symbols: dict) -> HelperRead:
    """
    Bind the access contract to in-memory shards.

    symbols maps node id -> {(block, b): int}.
    """

    def read(node: int, request: Request) -> Fe:
        table = symbols.get(node)
        if table is None:
            raise RepairError(f"helper node {node} is not available")
        try:
            if isinstance(request, RawRequest):
                return field.element(table[(request.block, request.b)])
            return field.element(table[(request.block, request.b1)]) + field.element(
                table[(request.block, request.b2)]
            )
        except KeyError as e:
            raise RepairError(f"helper node {node} holds no symbol at {e.args[0]}") from e

    return read


# ---------------------------------------------------------------------------
# Transcript
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Download:
    """
    One symbol moved to a replacement node.

    In round 1 source is a helper node. In round 2 source is the partner
    replacement (named by the failed node it rebuilds) and the request
    describes symbols of the receiver's own node.
    """

    replacement: int
    round: int
    source: int
    request: Request

    def to_list(self) -> list:
        if isinstance(self.request, RawRequest):
            coords = [self.request.b]
        else:
            coords = [self.request.b1, self.request.b2]
        return [self.replacement, self.round, self.source, self.request.block, coords]

    @classmethod
    def from_list(cls, row: list) -> "Download":
        replacement, rnd, source, block, coords = row
        if len(coords) == 1:
            request: Request = RawRequest(block, coords[0])
        else:
            request = SumRequest(block, coords[0], coords[1])
        return cls(replacement, rnd, source, request)


@dataclass
class GroupResult:
    block: int
    base: BIndex
    case: str
    downloads: list
    recovered: dict  # (node, block, b) -> int


@dataclass
class BlockSummary:
    block: int
    case: str
    sizes: dict
    g_pos: int
    groups: int = 0
    per_group: int = 0
    split: dict = dc_field(default_factory=dict)  # "replacement:round" -> per-group count


@dataclass
class RepairTranscript:
    failed: tuple
    q: int
    M: int
    N: int
    K: int
    r: int
    m: int
    blocks: list = dc_field(default_factory=list)
    downloads: list = dc_field(default_factory=list)
    recovered: dict = dc_field(default_factory=dict)

    @property
    def D(self) -> int:
        return self.N - self.K + 1

    @property
    def helpers(self) -> set[int]:
        """Nodes contacted in round 1 over all blocks."""
        return {d.source for d in self.downloads if d.round == 1}

    @property
    def helpers_P(self) -> int:
        return len(self.helpers)

    def count(self, replacement: int | None = None, round: int | None = None,
              block: int | None = None) -> int:
        return sum(
            1 for d in self.downloads
            if (replacement is None or d.replacement == replacement)
            and (round is None or d.round == round)
            and (block is None or d.request.block == block)
        )

    def to_dict(self) -> dict:
        return {
            "failed": list(self.failed),
            "code": {"q": self.q, "M": self.M, "N": self.N, "K": self.K, "r": self.r, "m": self.m},
            "blocks": [
                {
                    "block": s.block,
                    "case": s.case,
                    "sizes": s.sizes,
                    "g_pos": s.g_pos,
                    "groups": s.groups,
                    "per_group": s.per_group,
                    "split": s.split,
                }
                for s in self.blocks
            ],
            "helpers": sorted(self.helpers),
            "downloads": [d.to_list() for d in self.downloads],
            "recovered": [[node, block, b, v] for (node, block, b), v in sorted(self.recovered.items())],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RepairTranscript":
        code = data["code"]
        t = cls(
            failed=tuple(data["failed"]),
            q=code["q"], M=code["M"], N=code["N"], K=code["K"], r=code["r"], m=code["m"],
        )
        t.blocks = [BlockSummary(**s) for s in data["blocks"]]
        t.downloads = [Download.from_list(row) for row in data["downloads"]]
        t.recovered = {(node, block, b): v for node, block, b, v in data["recovered"]}
        return t


# ---------------------------------------------------------------------------
# Helper partition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HelperPartition:
    """
    Per-block helper sets. Case distinct fills q_set, v_set, gamma and
    download; case equal fills w_set, y_set, z_set, companion, download
    (round 1 of replacement 1) and download_r2 (round 1 of replacement 2).
    """

    case: str
    block: int
    failed: tuple
    r: int
    q_set: tuple = ()
    v_set: tuple = ()
    gamma: tuple = ()
    w_set: tuple = ()
    y_set: tuple = ()
    z_set: tuple = ()
    companion: int | None = None
    download: tuple = ()
    download_r2: tuple = ()

    @property
    def k1(self) -> int:
        """k' = |Gamma| - (r - 3)."""
        return len(self.gamma) - (self.r - 3)

    @property
    def k2(self) -> int:
        """k'' = |Z| - (r - 5)."""
        return len(self.z_set) - (self.r - 5)

    @property
    def k3(self) -> int:
        """k''' = |Z| - (r - 3)."""
        return len(self.z_set) - (self.r - 3)

    @property
    def z_prime(self) -> tuple:
        return tuple(sorted(self.z_set + (self.companion,)))

    def sizes(self) -> dict:
        if self.case == CASE_DISTINCT:
            return {"Q": len(self.q_set), "V": len(self.v_set), "Gamma": len(self.gamma), "k1": self.k1}
        return {
            "W": len(self.w_set), "Y": len(self.y_set), "Z": len(self.z_set),
            "k2": self.k2, "k3": self.k3,
        }


def _ordered(candidates, subset_seed: int | None, block: int) -> list[int]:
    candidates = sorted(candidates)
    if subset_seed is None:
        return candidates
    rng = np.random.default_rng([subset_seed, block])
    return [candidates[i] for i in rng.permutation(len(candidates))]


def companion_node(params: EmscrParams, f1: int, f2: int) -> int:
    a3 = scalarcode.companion(params.outer, params.codeword(f1), params.codeword(f2))
    return params.words.index(a3) + 1


def partition_helpers(
    params: EmscrParams, j: int, f1: int, f2: int, subset_seed: int | None = None
) -> HelperPartition:
    """
    Split the M - 2 surviving nodes of block j into the schedule's helper sets.

    Download subsets are the smallest node ids unless subset_seed is given,
    in which case a seeded permutation orders them. Both replacements use
    prefixes of the same ordering.
    """
    if f1 == f2:
        raise RepairError("the two failed nodes must differ")
    if not (1 <= j <= params.N):
        raise RepairError(f"block {j} outside [1, {params.N}]")
    r = params.r
    s1, s2 = params.symbol(f1, j), params.symbol(f2, j)
    others = [i for i in range(1, params.M + 1) if i not in (f1, f2)]

    if s1 != s2:
        q_set = tuple(i for i in others if params.symbol(i, j) == s1)
        v_set = tuple(i for i in others if params.symbol(i, j) == s2)
        gamma = tuple(i for i in others if params.symbol(i, j) not in (s1, s2))
        part = HelperPartition(CASE_DISTINCT, j, (f1, f2), r, q_set=q_set, v_set=v_set, gamma=gamma)
        if part.k1 <= 0:
            raise RepairError(f"block {j}: k' = {part.k1} leaves nothing to download")
        chosen = _ordered(gamma, subset_seed, j)[: part.k1]
        return HelperPartition(
            CASE_DISTINCT, j, (f1, f2), r, q_set=q_set, v_set=v_set, gamma=gamma,
            download=tuple(sorted(chosen)),
        )

    n3 = companion_node(params, f1, f2)
    t = params.symbol(n3, j)
    w_set = tuple(i for i in others if params.symbol(i, j) == s1)
    y_set = tuple(i for i in others if i != n3 and params.symbol(i, j) == t)
    z_set = tuple(i for i in others if i != n3 and params.symbol(i, j) not in (s1, t))
    part = HelperPartition(
        CASE_EQUAL, j, (f1, f2), r, w_set=w_set, y_set=y_set, z_set=z_set, companion=n3,
    )
    if part.k2 <= 0 or part.k3 <= 0:
        raise RepairError(f"block {j}: k''={part.k2}, k'''={part.k3} must be positive")
    order = _ordered(part.z_prime, subset_seed, j)
    return HelperPartition(
        CASE_EQUAL, j, (f1, f2), r, w_set=w_set, y_set=y_set, z_set=z_set, companion=n3,
        download=tuple(sorted(order[: part.k2])),
        download_r2=tuple(sorted(order[: part.k3])),
    )


def group_digit(params: EmscrParams, part: HelperPartition) -> int:
    """Digit position g whose three values form the block's repair groups."""
    f1, f2 = part.failed
    j = part.block
    if part.case == CASE_DISTINCT:
        return indexspace.pair_position(params.pairmap, params.symbol(f1, j), params.symbol(f2, j))
    return indexspace.pair_position(params.pairmap, params.symbol(f1, j), params.symbol(part.companion, j))


def _flip_digit(x: int, y: int) -> int:
    """Digit value at which inner node x's f flips within the pair (x, y)."""
    return 1 if x < y else 2


# ---------------------------------------------------------------------------
# Annihilators and the round solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnnihilatorMatrix:
    """Row i holds the ascending coefficients of x^i p0(x), p0 = prod (x - root)."""

    rows: int
    cols: int
    roots: tuple
    coeffs: Fe


def annihilator(field: FieldSpec, roots, rows: int, r: int) -> AnnihilatorMatrix:
    roots = [int(x) for x in roots]
    if len(set(roots)) != len(roots):
        raise RepairError(f"annihilator roots must be distinct, got {roots}")
    if rows < 0 or rows + len(roots) > r:
        raise RepairError(
            f"{rows} rows of degree >= {len(roots)} do not fit in {r} coefficients"
        )
    if roots:
        p0 = galois.Poly.Roots(field.array(roots), field=field.GF).coefficients(order="asc")
    else:
        p0 = field.GF.Ones(1)
    coeffs = field.GF.Zeros((rows, r))
    for i in range(rows):
        coeffs[i, i: i + p0.size] = p0
    return AnnihilatorMatrix(rows=rows, cols=r, roots=tuple(roots), coeffs=coeffs)


def _solve(A: Fe, rhs: Fe, what: str) -> Fe:
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"{what} is singular") from e


def solve_round(field: FieldSpec, r: int, targets, known, unknown) -> Fe:
    """
    Solve one replacement's round-1 system.

    The parity sum is sum_x x^t v_x = 0 for t < r over three kinds of
    terms: targets (points whose values are wanted), known (point, value)
    pairs that were downloaded, and unknown points whose values were not
    downloaded. len(unknown) must equal r - len(targets). The annihilator of
    the targets eliminates them so the unknowns can be solved first; the
    targets then follow from the first len(targets) parity rows.
    """
    targets = [int(x) for x in targets]
    unknown = [int(x) for x in unknown]
    rows = r - len(targets)
    if len(unknown) != rows:
        raise RepairError(f"{len(unknown)} undownloaded terms but {rows} annihilator rows")

    s = field.GF.Zeros(r)
    if known:
        points = power_matrix(field, [p for p, _ in known], r)
        values = field.array([int(v) for _, v in known])
        s = points @ values

    if unknown:
        P = annihilator(field, targets, rows, r).coeffs
        U = power_matrix(field, unknown, r)
        x = _solve(P @ U, -(P @ s), "annihilated helper system")
        s = s + U @ x

    T = power_matrix(field, targets, r)[: len(targets)]
    return _solve(T, -s[: len(targets)], "target system")


# ---------------------------------------------------------------------------
# Group repair
# ---------------------------------------------------------------------------

def _read(field: FieldSpec, helper_read: HelperRead, node: int, request: Request) -> Fe:
    return field.element(int(helper_read(node, request)))


def repair_group_case1(
    params: EmscrParams, part: HelperPartition, base: BIndex, helper_read: HelperRead
) -> GroupResult:
    """Repair one coordinate group of a block where the failed symbols differ."""
    if part.case != CASE_DISTINCT:
        raise RepairError(f"block {part.block} is not a distinct-symbol block")
    field, pm, j, r = params.field, params.pairmap, part.block, params.r
    f1, f2 = part.failed
    s1, s2 = params.symbol(f1, j), params.symbol(f2, j)
    g = indexspace.pair_position(pm, s1, s2)
    b0 = indexspace.with_digit(pm, base, g, 0)
    if b0 != base:
        raise RepairError(f"group base {base} has digit {g} != 0")
    undownloaded = [i for i in part.gamma if i not in part.download]

    downloads: list[Download] = []
    learned: dict[int, tuple] = {}

    def pt(i, b):
        return node_point(params, i, j, b)

    for me, partner, own, across in ((f1, f2, part.q_set, part.v_set), (f2, f1, part.v_set, part.q_set)):
        u = _flip_digit(params.symbol(me, j), params.symbol(partner, j))
        bu = indexspace.with_digit(pm, base, g, u)
        known = []
        for i in own:
            for b in (b0, bu):
                req = RawRequest(j, b)
                known.append((pt(i, b), _read(field, helper_read, i, req)))
                downloads.append(Download(me, 1, i, req))
        for i in across + part.download:
            req = SumRequest(j, b0, bu)
            known.append((pt(i, b0), _read(field, helper_read, i, req)))
            downloads.append(Download(me, 1, i, req))
        y = solve_round(
            field, r,
            targets=[pt(me, b0), pt(me, bu), pt(partner, b0)],
            known=known,
            unknown=[pt(i, b0) for i in undownloaded],
        )
        # c^me at b0 and bu, then c^partner summed over (b0, bu)
        learned[me] = (bu, y[0], y[1], y[2])

    recovered = {}
    for me, partner in ((f1, f2), (f2, f1)):
        bu, c0, cu, _ = learned[me]
        partner_bu, _, _, mu = learned[partner]
        downloads.append(Download(me, 2, partner, SumRequest(j, b0, partner_bu)))
        recovered[(me, j, b0)] = int(c0)
        recovered[(me, j, bu)] = int(cu)
        recovered[(me, j, partner_bu)] = int(mu - c0)
    return GroupResult(j, base, CASE_DISTINCT, downloads, recovered)


def repair_group_case2(
    params: EmscrParams, part: HelperPartition, base: BIndex, helper_read: HelperRead
) -> GroupResult:
    """Repair one coordinate group of a block where both failed nodes share a symbol."""
    if part.case != CASE_EQUAL:
        raise RepairError(f"block {part.block} is not an equal-symbol block")
    field, pm, j, r = params.field, params.pairmap, part.block, params.r
    f1, f2 = part.failed
    s, t = params.symbol(f1, j), params.symbol(part.companion, j)
    g = indexspace.pair_position(pm, s, t)
    b0 = indexspace.with_digit(pm, base, g, 0)
    if b0 != base:
        raise RepairError(f"group base {base} has digit {g} != 0")
    u_s, u_t = _flip_digit(s, t), _flip_digit(t, s)
    bs = indexspace.with_digit(pm, base, g, u_s)
    bt = indexspace.with_digit(pm, base, g, u_t)
    z_prime = part.z_prime
    downloads: list[Download] = []

    def pt(i, b):
        return node_point(params, i, j, b)

    # Replacement 1: both failed nodes at digits 0 and u_s
    known = []
    for i in part.w_set:
        for b in (b0, bs):
            req = RawRequest(j, b)
            known.append((pt(i, b), _read(field, helper_read, i, req)))
            downloads.append(Download(f1, 1, i, req))
    for i in part.y_set + part.download:
        req = SumRequest(j, b0, bs)
        known.append((pt(i, b0), _read(field, helper_read, i, req)))
        downloads.append(Download(f1, 1, i, req))
    c1_0, c1_s, c2_0, c2_s = solve_round(
        field, r,
        targets=[pt(f1, b0), pt(f1, bs), pt(f2, b0), pt(f2, bs)],
        known=known,
        unknown=[pt(i, b0) for i in z_prime if i not in part.download],
    )

    # Replacement 2: both failed nodes at digit u_t
    known = []
    for i in part.w_set + part.y_set + part.download_r2:
        req = RawRequest(j, bt)
        known.append((pt(i, bt), _read(field, helper_read, i, req)))
        downloads.append(Download(f2, 1, i, req))
    c1_t, c2_t = solve_round(
        field, r,
        targets=[pt(f1, bt), pt(f2, bt)],
        known=known,
        unknown=[pt(i, bt) for i in z_prime if i not in part.download_r2],
    )

    downloads.append(Download(f1, 2, f2, RawRequest(j, bt)))
    downloads.append(Download(f2, 2, f1, RawRequest(j, b0)))
    downloads.append(Download(f2, 2, f1, RawRequest(j, bs)))
    recovered = {
        (f1, j, b0): int(c1_0), (f1, j, bs): int(c1_s), (f1, j, bt): int(c1_t),
        (f2, j, b0): int(c2_0), (f2, j, bs): int(c2_s), (f2, j, bt): int(c2_t),
    }
    return GroupResult(j, base, CASE_EQUAL, downloads, recovered)


def repair_group(params: EmscrParams, part: HelperPartition, base: BIndex,
                 helper_read: HelperRead) -> GroupResult:
    if part.case == CASE_DISTINCT:
        return repair_group_case1(params, part, base, helper_read)
    return repair_group_case2(params, part, base, helper_read)


# ---------------------------------------------------------------------------
# Whole-slice repair
# ---------------------------------------------------------------------------

def plan_groups(params: EmscrParams, failed: tuple, slice_desc: SliceDescriptor,
                subset_seed: int | None = None) -> list[tuple[HelperPartition, BIndex]]:
    """
    Partition every block the slice touches and list its group bases.

    Raises RepairError if a lane does not range over the block's group digit.
    """
    f1, f2 = failed
    parts: dict[int, HelperPartition] = {}
    plan: dict[tuple, HelperPartition] = {}
    for lane in slice_desc.lanes:
        part = parts.get(lane.block)
        if part is None:
            part = partition_helpers(params, lane.block, f1, f2, subset_seed)
            parts[lane.block] = part
        g = group_digit(params, part)
        if g not in lane.free:
            raise RepairError(
                f"slice lane of block {lane.block} is not closed under digit {g}"
            )
        coords = indexspace.expand(params.pairmap, lane.free, lane.anchors)
        for b in coords:
            plan[(lane.block, indexspace.with_digit(params.pairmap, b, g, 0))] = part
    return [(plan[key], key[1]) for key in sorted(plan)]


def cooperative_repair(
    params: EmscrParams,
    failed: tuple,
    slice_desc: SliceDescriptor,
    helper_read: HelperRead,
    digest: bytes = bytes(32),
    subset_seed: int | None = None,
    n_jobs: int | None = None,
) -> tuple[dict[int, Shard], RepairTranscript]:
    """
    Repair both failed nodes on every coordinate of the slice.

    Groups are independent and may run on joblib threads; results are merged
    in (block, base) order so the transcript does not depend on n_jobs.
    """
    f1, f2 = failed
    if f1 == f2 or not all(1 <= f <= params.M for f in failed):
        raise RepairError(f"failed pair {failed} must be two distinct nodes in [1, {params.M}]")

    plan = plan_groups(params, failed, slice_desc, subset_seed)
    n_jobs = config.REPAIR_N_JOBS if n_jobs is None else n_jobs
    logger.info("Repairing nodes %d and %d over %d groups (n_jobs=%d)", f1, f2, len(plan), n_jobs)

    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(repair_group)(params, part, base, helper_read) for part, base in plan
    )

    transcript = RepairTranscript(
        failed=(f1, f2), q=params.outer.q, M=params.M, N=params.N, K=params.outer.K,
        r=params.r, m=params.m,
    )
    summaries: dict[int, BlockSummary] = {}
    for (part, _), result in zip(plan, results):
        summary = summaries.get(part.block)
        if summary is None:
            summary = BlockSummary(part.block, part.case, part.sizes(), group_digit(params, part))
            summary.per_group = len(result.downloads)
            for d in result.downloads:
                key = f"{d.replacement}:{d.round}"
                summary.split[key] = summary.split.get(key, 0) + 1
            summaries[part.block] = summary
        elif len(result.downloads) != summary.per_group:
            raise RepairError(f"block {part.block}: group download counts differ")
        summary.groups += 1
        transcript.downloads.extend(result.downloads)
        for key, value in result.recovered.items():
            if key in transcript.recovered:
                raise RepairError(f"symbol {key} recovered twice")
            transcript.recovered[key] = value
    transcript.blocks = [summaries[j] for j in sorted(summaries)]

    for s in transcript.blocks:
        logger.info("Block %d (%s): %d groups x %d symbols", s.block, s.case, s.groups, s.per_group)

    shards = {}
    for node in (f1, f2):
        symbols = {(block, b): v for (n, block, b), v in transcript.recovered.items() if n == node}
        shards[node] = Shard(node=node, digest=digest, slice=slice_desc, symbols=symbols)
    return shards, transcript

