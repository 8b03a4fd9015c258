"""
Repair bandwidth accounting and the cut-set / epsilon bounds.

All quantities are exact: symbol counts are ints and everything else is a
fractions.Fraction. Quantities "in units of l" are multiples of the inner
sub-packetization l = 3^m; "symbols" are absolute field-symbol counts.
"""

import logging
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from math import comb, sqrt

from src.repair import CASE_DISTINCT, CASE_EQUAL, RepairTranscript

logger = logging.getLogger(__name__)


class BoundsError(ValueError):
    """Raised for parameters outside a bound's domain."""


# ---------------------------------------------------------------------------
# Closed forms and cut-set bounds
# ---------------------------------------------------------------------------

def bandwidth_closed_form(case: str, sizes: dict, r: int) -> Fraction:
    """
    Per-block repair bandwidth in units of l.

    distinct: k'(2/3) + |Q| + |V| + 2/3, with k' = |Gamma| - (r - 3)
    equal:    (k'' + k''')(1/3) + |W| + |Y|(2/3) + 1,
              with k'' = |Z| - (r - 5) and k''' = |Z| - (r - 3)
    """
    if case == CASE_DISTINCT:
        k1 = sizes["Gamma"] - (r - 3)
        return Fraction(2 * k1 + 3 * sizes["Q"] + 3 * sizes["V"] + 2, 3)
    if case == CASE_EQUAL:
        k2 = sizes["Z"] - (r - 5)
        k3 = sizes["Z"] - (r - 3)
        return Fraction(k2 + k3 + 3 * sizes["W"] + 2 * sizes["Y"] + 3, 3)
    raise BoundsError(f"unknown repair case {case!r}")


@dataclass(frozen=True)
class CutsetBounds:
    single: Fraction
    cooperative: Fraction
    centralized: Fraction


def cutset_bounds(h: int, d: int, k: int, l) -> CutsetBounds:
    """
    single:      l / (d - k + 1), per helper for one failure
    cooperative: h (h + d - 1) l / (h + d - k)
    centralized: h d l / (h + d - k)
    """
    if d - k + 1 <= 0 or h + d - k <= 0:
        raise BoundsError(f"nonpositive denominator for h={h}, d={d}, k={k}")
    l = Fraction(l)
    return CutsetBounds(
        single=l / (d - k + 1),
        cooperative=h * (h + d - 1) * l / (h + d - k),
        centralized=h * d * l / (h + d - k),
    )


def _check_domain(P: int, delta: Fraction):
    if P < 1:
        raise BoundsError(f"P must be at least 1, got {P}")
    if not (0 < delta <= 1):
        raise BoundsError(f"delta must lie in (0, 1], got {delta}")


def epsilon_bound(r: int, P: int, delta) -> Fraction:
    """(r / (P + 1)) (1/2 + (2 - delta) P / 3) - 1."""
    delta = Fraction(delta)
    _check_domain(P, delta)
    return Fraction(r, P + 1) * (Fraction(1, 2) + (2 - delta) * Fraction(P, 3)) - 1


def epsilon_corollary(P: int, delta) -> Fraction:
    """The r = 5 form: (5/6) (3 + (2 - delta) 2P) / (P + 1) - 1."""
    delta = Fraction(delta)
    _check_domain(P, delta)
    return Fraction(5, 6) * (3 + (2 - delta) * 2 * P) / (P + 1) - 1


def simplified_bound(N: int, D: int, P: int) -> Fraction:
    """N l + P (4Nl/3 - 2Dl/3), in units of l."""
    return N + P * Fraction(4 * N - 2 * D, 3)


def aggregate_bound(params, failed: tuple, helpers) -> Fraction:
    """
    Per-helper upper bound on total repair bandwidth, in units of l.

    Each block costs 2/3 (distinct) or 1 (equal) for round two; each helper
    adds 1 per block where it shares a failed symbol (or the shared symbol
    of an equal block), and 2/3 otherwise.
    """
    f1, f2 = failed
    thirds = 0
    for j in range(1, params.N + 1):
        s1, s2 = params.symbol(f1, j), params.symbol(f2, j)
        thirds += 2 if s1 != s2 else 3
        for i in helpers:
            si = params.symbol(i, j)
            if s1 != s2:
                thirds += 3 if si in (s1, s2) else 2
            else:
                thirds += 3 if si == s1 else 2
    return Fraction(thirds, 3)


# ---------------------------------------------------------------------------
# Bandwidth report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockLine:
    block: int
    case: str
    groups: int
    per_group: int
    closed_form: Fraction  # units of l
    split: dict


@dataclass
class BandwidthReport:
    failed: tuple
    M: int
    N: int
    r: int
    m: int
    delta: Fraction
    helpers_P: int
    blocks: list
    rb_total: int
    rb_closed_form: int
    rb_optimal: Fraction
    eps_measured: Fraction
    eps_bound: Fraction
    eps_two: Fraction
    eps_simplified: Fraction
    cutset: CutsetBounds
    simplified: Fraction  # symbols
    aggregate: Fraction | None = None  # symbols
    split: dict = dc_field(default_factory=dict)  # "replacement:round" -> symbols

    @property
    def helpers_floor(self) -> int:
        return self.M - self.r

    @property
    def helpers_ok(self) -> bool:
        return self.helpers_P >= self.helpers_floor

    @property
    def measured_matches_closed_form(self) -> bool:
        return all(line.per_group == 3 * line.closed_form for line in self.blocks)

    @property
    def case_blocks_distinct(self) -> int:
        return sum(1 for line in self.blocks if line.case == CASE_DISTINCT)

    @property
    def case_blocks_equal(self) -> int:
        return sum(1 for line in self.blocks if line.case == CASE_EQUAL)


def epsilon_measured(report: BandwidthReport) -> Fraction:
    """Total RB over the cooperative optimum with d = P, k = M - r, minus 1."""
    return Fraction(report.rb_total) / report.rb_optimal - 1


def build_report(transcript: RepairTranscript, params=None) -> BandwidthReport:
    """
    Extrapolate a transcript to the whole code.

    Every block has l/3 = 3^(m-1) groups and the per-group count does not
    depend on the data, so RB_total = sum_j per_group_j * 3^(m-1).
    """
    covered = sorted(s.block for s in transcript.blocks)
    if covered != list(range(1, transcript.N + 1)):
        raise BoundsError(
            f"transcript covers blocks {covered}; the bounds compare whole-node repair "
            f"and need every block 1..{transcript.N}"
        )
    groups_per_block = 3 ** (transcript.m - 1)
    l = 3 ** transcript.m
    delta = Fraction(transcript.D, transcript.N)
    P = transcript.helpers_P

    lines = []
    split: dict[str, int] = {}
    for s in transcript.blocks:
        lines.append(BlockLine(
            block=s.block, case=s.case, groups=s.groups, per_group=s.per_group,
            closed_form=bandwidth_closed_form(s.case, s.sizes, transcript.r),
            split=dict(s.split),
        ))
        for key, count in s.split.items():
            split[key] = split.get(key, 0) + count * groups_per_block

    rb_total = sum(line.per_group for line in lines) * groups_per_block
    rb_closed = sum(line.closed_form for line in lines) * l
    if rb_closed.denominator != 1:
        raise BoundsError(f"closed-form total {rb_closed} is not an integer symbol count")

    cut = cutset_bounds(h=2, d=P, k=transcript.M - transcript.r, l=transcript.N * l)
    simplified = simplified_bound(transcript.N, transcript.D, P)
    eps_simplified = simplified * l / cut.cooperative - 1
    eps_two = simplified * l / (Fraction(2 * (P + 1) * transcript.N * l, transcript.r)) - 1

    report = BandwidthReport(
        failed=transcript.failed, M=transcript.M, N=transcript.N, r=transcript.r,
        m=transcript.m, delta=delta, helpers_P=P, blocks=lines,
        rb_total=rb_total, rb_closed_form=int(rb_closed), rb_optimal=cut.cooperative,
        eps_measured=Fraction(0), eps_bound=epsilon_bound(transcript.r, P, delta),
        eps_two=eps_two, eps_simplified=eps_simplified, cutset=cut,
        simplified=simplified * l, split=split,
    )
    report.eps_measured = epsilon_measured(report)
    if params is not None:
        report.aggregate = aggregate_bound(params, transcript.failed, sorted(transcript.helpers)) * l
    if not report.helpers_ok:
        logger.warning("Only %d helpers contacted, below M - r = %d", P, report.helpers_floor)
    return report


# ---------------------------------------------------------------------------
# Scaling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingReport:
    """
    Sub-packetization and field-size arithmetic for (q, u, outer_g, N).

    log M is reported as a multiple of log q; L as N * 3^m.
    """

    q: int
    u: int
    outer_g: int
    N: int
    M: int
    m: int
    L_exponent: int  # L = N * 3^L_exponent
    log_m_coeff: int  # log M = log_m_coeff * log q
    log_m_over_l: Fraction  # (log M / L) / log q
    min_field_size: int
    configured_field: int | None

    @property
    def L(self) -> int:
        return self.N * 3 ** self.L_exponent

    @property
    def g_over_n(self) -> Fraction:
        return Fraction(self.outer_g, self.N)

    @property
    def g_over_n_target(self) -> float:
        """1 / (sqrt(q) - 1), the rate at which log M = u L / (3^m (sqrt(q) - 1)) log q."""
        return 1 / (sqrt(self.q) - 1)

    @property
    def implied_log_m_over_l(self) -> float:
        """(log M / L) / log q as the closed form gives it."""
        return self.u / (3 ** self.m * (sqrt(self.q) - 1))

    @property
    def field_ok(self) -> bool | None:
        if self.configured_field is None:
            return None
        return self.configured_field >= self.min_field_size


def scaling_report(q: int, u: int, outer_g: int, N: int, M: int | None = None,
                   configured_field: int | None = None) -> ScalingReport:
    K = u * outer_g
    if M is None:
        M = q ** K
    if M != q ** K:
        raise BoundsError(f"M={M} is not q^(u g) = {q ** K}")
    m = comb(q, 2)
    L = N * 3 ** m

    return ScalingReport(
        q=q, u=u, outer_g=outer_g, N=N, M=M, m=m, L_exponent=m,
        log_m_coeff=K, log_m_over_l=Fraction(K, L),
        min_field_size=2 * q ** K * q + 1,
        configured_field=configured_field,
    )
