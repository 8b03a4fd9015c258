from dataclasses import replace
from fractions import Fraction

import pytest

from src import bounds
from src.bounds import BoundsError, build_report
from src.repair import CASE_DISTINCT, CASE_EQUAL, cooperative_repair
from src.shardstore import SliceDescriptor, SliceLane


class TestClosedForm:
    def test_distinct(self):
        sizes = {"Q": 6, "V": 6, "Gamma": 35}
        assert bounds.bandwidth_closed_form(CASE_DISTINCT, sizes, 5) == Fraction(104, 3)

    def test_equal(self):
        sizes = {"W": 5, "Y": 6, "Z": 35}
        assert bounds.bandwidth_closed_form(CASE_EQUAL, sizes, 5) == Fraction(98, 3)

    def test_degenerate_distinct(self):
        # |Gamma| = r - 3 leaves k' = 0
        sizes = {"Q": 0, "V": 0, "Gamma": 2}
        assert bounds.bandwidth_closed_form(CASE_DISTINCT, sizes, 5) == Fraction(2, 3)

    def test_unknown_case(self):
        with pytest.raises(BoundsError):
            bounds.bandwidth_closed_form("triple", {}, 5)


class TestCutset:
    def test_reference_values(self):
        cut = bounds.cutset_bounds(h=2, d=45, k=44, l=7)
        assert cut.cooperative == Fraction(92 * 7, 3)
        assert cut.centralized == Fraction(90 * 7, 3)
        assert cut.single == Fraction(7, 2)

    def test_single_failure_at_d_equals_k(self):
        assert bounds.cutset_bounds(h=1, d=10, k=10, l=9).single == 9

    def test_invalid(self):
        with pytest.raises(BoundsError):
            bounds.cutset_bounds(h=2, d=5, k=10, l=1)


class TestEpsilon:
    def test_bound_value(self):
        eps = bounds.epsilon_bound(5, 45, Fraction(6, 7))
        assert eps == Fraction(591, 644)
        assert float(eps) == pytest.approx(0.9177, abs=1e-4)

    @pytest.mark.parametrize("P", [1, 44, 45, 47, 1000])
    @pytest.mark.parametrize("delta", [Fraction(1, 7), Fraction(6, 7), Fraction(1)])
    def test_corollary_is_r5_case(self, P, delta):
        assert bounds.epsilon_bound(5, P, delta) == bounds.epsilon_corollary(P, delta)

    def test_large_p_limit(self):
        eps = bounds.epsilon_bound(5, 10 ** 6, Fraction(6, 7))
        limit = Fraction(5, 3) * (2 - Fraction(6, 7)) - 1
        assert abs(eps - limit) < Fraction(1, 10 ** 5)

    @pytest.mark.parametrize("P,delta", [(0, Fraction(1, 2)), (5, Fraction(0)), (5, Fraction(2))])
    def test_domain(self, P, delta):
        with pytest.raises(BoundsError):
            bounds.epsilon_bound(5, P, delta)
        with pytest.raises(BoundsError):
            bounds.epsilon_corollary(P, delta)


class TestReport:
    def test_distinct_run(self, params, run_distinct):
        report = build_report(run_distinct.transcript, params)
        groups_per_block = 3 ** 20
        assert report.rb_total == 7 * 104 * groups_per_block
        assert report.rb_total == report.rb_closed_form
        assert report.measured_matches_closed_form
        assert report.case_blocks_distinct == 7
        assert report.case_blocks_equal == 0

    def test_mixed_run(self, params, run_mixed):
        report = build_report(run_mixed.transcript, params)
        groups_per_block = 3 ** 20
        assert report.rb_total == (6 * 104 + 98) * groups_per_block
        assert report.rb_total == report.rb_closed_form
        assert report.case_blocks_equal == 1
        assert report.split["2:1"] == (44 + 6 * 51) * groups_per_block

    def test_bound_chain(self, params, run_mixed):
        report = build_report(run_mixed.transcript, params)
        assert report.helpers_ok
        assert report.rb_total <= report.aggregate <= report.simplified
        assert report.eps_simplified <= report.eps_two <= report.eps_bound
        assert report.eps_measured <= report.eps_bound
        assert report.rb_total <= (1 + report.eps_bound) * report.rb_optimal
        assert report.rb_optimal == report.cutset.cooperative

    def test_eps_measured_definition(self, params, run_distinct):
        report = build_report(run_distinct.transcript)
        assert report.aggregate is None
        assert report.eps_measured == Fraction(report.rb_total) / report.rb_optimal - 1
        lossless = replace(report, rb_total=100, rb_optimal=Fraction(100))
        assert bounds.epsilon_measured(lossless) == 0

    def test_partial_slice_is_refused(self, params):
        slice_desc = SliceDescriptor((SliceLane(block=1, free=(1,), anchors=(0,)),))
        _, transcript = cooperative_repair(
            params, (1, 2), slice_desc, lambda node, req: params.field.zero,
        )
        assert [s.block for s in transcript.blocks] == [1]
        with pytest.raises(BoundsError, match="every block"):
            build_report(transcript, params)


def test_simplified_bound():
    # N l + P (4 N l / 3 - 2 D l / 3) with N=7, D=6, P=45
    assert bounds.simplified_bound(7, 6, 45) == 7 + 45 * Fraction(16, 3)


class TestScaling:
    def test_reference_field(self):
        s = bounds.scaling_report(q=7, u=1, outer_g=2, N=7, configured_field=4096)
        assert s.M == 49
        assert s.min_field_size == 687
        assert s.field_ok
        assert s.L == 7 * 3 ** 21
        assert s.log_m_over_l == Fraction(2, 7 * 3 ** 21)
        # the closed form assumes g/N = 1/(sqrt(q) - 1); an RS outer code at q = 7 sits below it
        assert s.g_over_n == Fraction(2, 7)
        assert s.g_over_n_target == pytest.approx(0.6124, abs=1e-4)
        assert float(s.log_m_over_l) < s.implied_log_m_over_l

    def test_closed_form_matches_at_the_target_rate(self):
        # q = 9: 1/(sqrt(q) - 1) = 1/2, so g = 2, N = 4 meets it exactly
        s = bounds.scaling_report(q=9, u=1, outer_g=2, N=4)
        assert s.g_over_n == Fraction(1, 2)
        assert float(s.log_m_over_l) == pytest.approx(s.implied_log_m_over_l, rel=1e-12)

    def test_small_field_flagged(self):
        s = bounds.scaling_report(q=7, u=1, outer_g=2, N=7, configured_field=512)
        assert s.field_ok is False

    def test_doubling_dimension(self):
        a = bounds.scaling_report(q=7, u=1, outer_g=2, N=7)
        b = bounds.scaling_report(q=7, u=2, outer_g=2, N=7)
        assert b.log_m_coeff == 2 * a.log_m_coeff
        assert b.L == a.L
        assert a.field_ok is None

    def test_inconsistent_m(self):
        with pytest.raises(BoundsError):
            bounds.scaling_report(q=7, u=1, outer_g=2, N=7, M=50)
