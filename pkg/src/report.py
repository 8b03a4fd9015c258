"""
Report views for a repair run.

Provides two renderings of a BandwidthReport:
  - human:   per-block bandwidth with bar chart, bounds and scaling summary
  - machine: fixed key=value lines, byte-identical across re-runs

Usage:
    python -m src.report DIR            # render DIR/transcript.json
    python -m src.report DIR --machine  # key=value block only
"""

import argparse
import json
import logging
from fractions import Fraction
from pathlib import Path

import config
from src import db
from src.bounds import BandwidthReport, ScalingReport, build_report
from src.repair import RepairTranscript

logger = logging.getLogger(__name__)

MACHINE_KEYS = (
    "rb_total",
    "rb_closed_form",
    "rb_optimal",
    "eps_measured",
    "eps_bound",
    "helpers_P",
    "case_blocks_distinct",
    "case_blocks_equal",
)


def fmt(x) -> str:
    """Integers verbatim, other rationals with six decimals."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{float(x):.6f}"


def _bar_line(label: str, count: int, max_count: int, bar_width: int = 30) -> str:
    bar_len = int((count / max_count) * bar_width) if max_count > 0 else 0
    bar = "█" * bar_len
    return f"  {label:24s} {bar} {count}"


def machine_lines(report: BandwidthReport) -> list[str]:
    values = {
        "rb_total": report.rb_total,
        "rb_closed_form": report.rb_closed_form,
        "rb_optimal": report.rb_optimal,
        "eps_measured": report.eps_measured,
        "eps_bound": report.eps_bound,
        "helpers_P": report.helpers_P,
        "case_blocks_distinct": report.case_blocks_distinct,
        "case_blocks_equal": report.case_blocks_equal,
    }
    return [f"{key}={fmt(values[key])}" for key in MACHINE_KEYS]


def human_lines(report: BandwidthReport, scaling: ScalingReport | None = None) -> list[str]:
    out = [f"=== Cooperative repair of nodes {report.failed[0]} and {report.failed[1]} ===", ""]
    out.append(f"  Code: M={report.M}, N={report.N}, r={report.r}, l=3^{report.m}, delta={report.delta}")
    out.append("")

    out.append("  --- Symbols per group, by block ---")
    max_count = max((line.per_group for line in report.blocks), default=0)
    for line in report.blocks:
        label = f"block {line.block} ({line.case})"
        out.append(_bar_line(label, line.per_group, max_count))
        closed = line.closed_form * 3
        mark = "ok" if closed == line.per_group else "MISMATCH"
        out.append(f"  {'':24s} closed form {fmt(closed)} [{mark}], {line.groups} groups repaired")
    out.append("")

    out.append("  --- Per replacement (whole code) ---")
    for key in sorted(report.split, key=lambda k: tuple(int(x) for x in k.split(":"))):
        node, rnd = key.split(":")
        out.append(f"  node {node:>3s} round {rnd}:  {report.split[key]}")
    out.append("")

    out.append("  --- Bandwidth ---")
    out.append(f"  RB measured:        {report.rb_total}")
    out.append(f"  RB closed form:     {report.rb_closed_form}")
    out.append(f"  Cooperative opt:    {fmt(report.rb_optimal)}")
    out.append(f"  Centralized bound:  {fmt(report.cutset.centralized)}")
    out.append(f"  Single-failure/helper: {fmt(report.cutset.single)}")
    if report.aggregate is not None:
        out.append(f"  Per-helper sum bound: {fmt(report.aggregate)}")
    out.append(f"  Simplified bound:   {fmt(report.simplified)}")
    out.append("")

    out.append("  --- Epsilon ---")
    out.append(f"  measured:    {fmt(report.eps_measured)}")
    out.append(f"  bound:       {fmt(report.eps_bound)}")
    out.append(f"  simplified:  {fmt(report.eps_simplified)}")
    out.append(f"  eps_2:       {fmt(report.eps_two)}")
    floor = "ok" if report.helpers_ok else "VIOLATED"
    out.append(f"  helpers P:   {report.helpers_P} (floor M - r = {report.helpers_floor}: {floor})")

    if scaling is not None:
        out.append("")
        out.append("  --- Scaling ---")
        out.append(f"  L = {scaling.N} * 3^{scaling.L_exponent}")
        out.append(f"  log M = {scaling.log_m_coeff} log {scaling.q}")
        field = "ok" if scaling.field_ok else "TOO SMALL"
        out.append(f"  min field size {scaling.min_field_size}, configured {scaling.configured_field} [{field}]")
        out.append(
            f"  log M / L = {float(scaling.log_m_over_l):.6g} log {scaling.q} "
            f"(closed form {scaling.implied_log_m_over_l:.6g}; "
            f"g/N = {scaling.g_over_n} vs 1/(sqrt(q)-1) = {scaling.g_over_n_target:.6f})"
        )
    return out


def render(report: BandwidthReport, scaling: ScalingReport | None = None) -> str:
    lines = human_lines(report, scaling)
    lines += ["", "--- machine ---"] + machine_lines(report)
    return "\n".join(lines) + "\n"


def load_transcript(path: Path) -> RepairTranscript:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"transcript {path} does not exist")
    with open(path) as f:
        return RepairTranscript.from_dict(json.load(f))


def main():
    parser = argparse.ArgumentParser(description="Render a repair report")
    parser.add_argument("run_dir", type=Path, help="Run directory holding transcript.json")
    parser.add_argument("--machine", action="store_true", help="Print only the key=value block")
    args = parser.parse_args()

    transcript = load_transcript(args.run_dir / config.TRANSCRIPT_FILE_NAME)
    report = build_report(transcript)
    if args.machine:
        print("\n".join(machine_lines(report)))
    else:
        print(render(report), end="")

    if db.db_path(args.run_dir).exists():
        print_history(args.run_dir)


def print_history(run_dir: Path, limit: int = 5):
    """Recent repair runs from the ledger, newest first."""
    runs = db.get_repair_run_history(run_dir, limit)
    if not runs:
        return
    print("\n  --- Recent repair runs ---")
    for row in runs:
        print(
            f"  {row['created_at']}  nodes {row['failed_pair']:<6} P={row['helpers_P']:<3} "
            f"RB={row['rb_total']}  eps={fmt(Fraction(row['eps_measured']))}"
        )


if __name__ == "__main__":
    main()
