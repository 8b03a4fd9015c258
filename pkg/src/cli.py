"""
Command-line simulator for cooperative repair of the epsilon-MSCR code.

Commands:
  - gen-params: build and validate the code, write params.bin
  - encode:     write one shard per node for the configured slice
  - fail:       mark two nodes failed and hide their shards
  - repair:     run the two-round repair, verify, write shards + transcript
  - report:     render measured bandwidth against the bounds

Usage:
    python -m src.cli gen-params --config exp.env --out runs/a
    python -m src.cli encode --out runs/a
    python -m src.cli fail --fail 1,2 --out runs/a
    python -m src.cli repair --out runs/a
    python -m src.cli report --out runs/a
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from dotenv import dotenv_values

import config
from src import db, indexspace, report as report_view
from src.bounds import build_report, scaling_report
from src.emscr import EmscrParams, build_emscr, encode_seeded
from src.field import SingularSystemError, field_from_order, subgroup_of_order
from src.mscr import build_mscr
from src.repair import (
    IntegrityError,
    RepairError,
    RepairTranscript,
    cooperative_repair,
    group_digit,
    partition_helpers,
    reader_from_symbols,
)
from src.scalarcode import build_rs
from src.shardstore import (
    ParamsFileError,
    ParamsRecord,
    Shard,
    ShardFormatError,
    SliceDescriptor,
    SliceLane,
    read_params,
    read_shard,
    write_params,
    write_shard,
)

logger = logging.getLogger(__name__)


class UsageError(ValueError):
    """Bad command-line input, config file or run-directory state."""


# ---------------------------------------------------------------------------
# Experiment config
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    q: int = config.DEFAULT_Q
    k: int = config.DEFAULT_INNER_K
    outer_n: int = config.DEFAULT_OUTER_N
    outer_k: int = config.DEFAULT_OUTER_K
    field_order: int = config.DEFAULT_FIELD_ORDER
    field_poly: int = config.DEFAULT_FIELD_POLY
    subgroup_order: int = config.DEFAULT_SUBGROUP_ORDER
    groups: int = config.DEFAULT_GROUPS
    seed: int = config.DEFAULT_SEED
    fail: tuple = config.DEFAULT_FAIL


def parse_fail(text: str) -> tuple[int, int]:
    try:
        nodes = tuple(int(x) for x in text.split(","))
    except ValueError as e:
        raise UsageError(f"--fail expects i1,i2, got {text!r}") from e
    if len(nodes) != 2:
        raise UsageError(f"this tool repairs exactly two nodes, got {len(nodes)}")
    return nodes


def load_experiment_config(path: Path | None) -> ExperimentConfig:
    """Read `key = value` lines; missing keys keep their defaults."""
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.exists():
        raise UsageError(f"config file {path} does not exist")

    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for key, raw in dotenv_values(path).items():
        key = key.strip().lower()
        if key not in known:
            raise UsageError(f"unknown config key {key!r} in {path}")
        if raw is None:
            raise UsageError(f"config key {key!r} has no value")
        if key == "fail":
            values[key] = parse_fail(raw)
            continue
        try:
            values[key] = int(raw.strip(), 0)
        except ValueError as e:
            raise UsageError(f"config key {key!r}: {raw!r} is not an integer") from e
    return ExperimentConfig(**values)


def build_params(cfg: ExperimentConfig) -> EmscrParams:
    field = field_from_order(cfg.field_order, cfg.field_poly)
    subgroup = subgroup_of_order(field, cfg.subgroup_order)
    inner = build_mscr(cfg.q, cfg.k, field, subgroup)
    outer = build_rs(cfg.q, cfg.outer_n, cfg.outer_k)
    return build_emscr(inner, outer, field, subgroup)


def record_of(cfg: ExperimentConfig, params: EmscrParams) -> ParamsRecord:
    return ParamsRecord(
        field_order=params.field.order,
        field_poly=params.field.poly,
        generator=params.field.generator,
        subgroup_order=params.inner.subgroup.order,
        q=cfg.q, k=cfg.k, outer_n=cfg.outer_n, outer_k=cfg.outer_k,
        seed=cfg.seed, groups=cfg.groups, fail=tuple(cfg.fail),
        eval_points=tuple(params.outer.eval_points),
        lam=tuple(x for pair in params.inner.lam for x in pair),
        sigma=tuple(params.sigma),
    )


def params_from_record(rec: ParamsRecord) -> tuple[ExperimentConfig, EmscrParams]:
    """Rebuild the code from a parameter file and check the stored tables."""
    cfg = ExperimentConfig(
        q=rec.q, k=rec.k, outer_n=rec.outer_n, outer_k=rec.outer_k,
        field_order=rec.field_order, field_poly=rec.field_poly,
        subgroup_order=rec.subgroup_order, groups=rec.groups, seed=rec.seed,
        fail=rec.fail,
    )
    params = build_params(cfg)
    if record_of(cfg, params) != rec:
        raise ParamsFileError("stored generator, lambda or sigma tables differ from a rebuild")
    return cfg, params


# ---------------------------------------------------------------------------
# Run directory helpers
# ---------------------------------------------------------------------------

def shard_path(run_dir: Path, node: int) -> Path:
    return Path(run_dir) / config.SHARD_FILE_PATTERN.format(node=node)


def lost_path(run_dir: Path, node: int) -> Path:
    path = shard_path(run_dir, node)
    return path.with_name(path.name + config.LOST_SUFFIX)


def load_run(run_dir: Path) -> tuple[ExperimentConfig, EmscrParams, bytes]:
    rec, digest = read_params(Path(run_dir) / config.PARAMS_FILE_NAME)
    cfg, params = params_from_record(rec)
    return cfg, params, digest


def default_slice(params: EmscrParams, fail: tuple, groups: int, seed: int) -> SliceDescriptor:
    """
    One lane per block, free at the block's group digit for the given
    failed pair, with `groups` sampled anchors.
    """
    lanes = []
    for j in range(1, params.N + 1):
        part = partition_helpers(params, j, fail[0], fail[1])
        g = group_digit(params, part)
        anchors = indexspace.group_bases(params.pairmap, g, groups, seed + j)
        lanes.append(SliceLane(block=j, free=(g,), anchors=tuple(anchors)))
    return SliceDescriptor(tuple(lanes))


def original_symbols(params: EmscrParams, seed: int, slice_desc: SliceDescriptor, nodes) -> dict:
    """Regenerate {node: {(block, b): int}} for the given nodes from the seed."""
    out = {node: {} for node in nodes}
    for block, bs in slice_desc.block_coords(params.pairmap).items():
        coded = encode_seeded(params, seed, block, bs)
        for row, b in enumerate(bs):
            for node in nodes:
                out[node][(block, b)] = int(coded[row, node - 1])
    return out


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_gen_params(cfg: ExperimentConfig, out_dir: Path) -> Path:
    if len(set(cfg.fail)) != 2:
        raise UsageError(f"failed pair {cfg.fail} must name two distinct nodes")
    params = build_params(cfg)
    if not all(1 <= f <= params.M for f in cfg.fail):
        raise UsageError(f"failed nodes {cfg.fail} outside [1, {params.M}]")
    path = Path(out_dir) / config.PARAMS_FILE_NAME
    write_params(record_of(cfg, params), path)
    db.init_db(out_dir)
    print(f"Parameters written to {path} (M={params.M}, N={params.N}, r={params.r}, l=3^{params.m})")
    return path


def cmd_encode(run_dir: Path) -> list[Path]:
    cfg, params, digest = load_run(run_dir)
    slice_desc = default_slice(params, cfg.fail, cfg.groups, cfg.seed)
    nodes = list(range(1, params.M + 1))
    symbols = original_symbols(params, cfg.seed, slice_desc, nodes)

    paths = []
    for node in nodes:
        shard = Shard(node=node, digest=digest, slice=slice_desc, symbols=symbols[node])
        paths.append(write_shard(shard, shard_path(run_dir, node)))
        lost_path(run_dir, node).unlink(missing_ok=True)
    db.init_db(run_dir)
    db.set_node_status(run_dir, nodes, db.STATUS_AVAILABLE)

    per_node = len(symbols[1])
    logger.info("Encoded %d shards of %d symbols each", len(paths), per_node)
    print(f"Wrote {len(paths)} shards ({per_node} symbols per node) to {run_dir}")
    return paths


def cmd_fail(run_dir: Path, nodes: tuple) -> list[int]:
    """Hide the shards of the failed pair; only the pair the slice was cut for is accepted."""
    cfg, _, _ = load_run(run_dir)
    if len(set(nodes)) != 2 or set(nodes) != set(cfg.fail):
        raise UsageError(
            f"the encoded slice repairs the pair {cfg.fail[0]},{cfg.fail[1]} only, got {nodes}; "
            f"rerun gen-params with --fail to repair another pair"
        )
    db.init_db(run_dir)
    status = db.get_node_status(run_dir)
    if not status:
        raise UsageError(f"{run_dir} has no encoded nodes; run encode first")
    for node in nodes:
        if node not in status:
            raise UsageError(f"node {node} is not part of this run")
        if status[node] == db.STATUS_FAILED:
            logger.warning("Node %d is already failed", node)
            continue
        path = shard_path(run_dir, node)
        if path.exists():
            path.rename(lost_path(run_dir, node))
    db.set_node_status(run_dir, nodes, db.STATUS_FAILED)
    failed = db.get_nodes_by_status(run_dir, db.STATUS_FAILED)
    print(f"Failed nodes: {failed}")
    return failed


def cmd_repair(run_dir: Path, subset_seed: int | None = None, n_jobs: int | None = None):
    cfg, params, digest = load_run(run_dir)
    db.init_db(run_dir)
    failed = db.get_nodes_by_status(run_dir, db.STATUS_FAILED)
    if len(failed) != 2:
        raise UsageError(f"this tool repairs exactly two failed nodes, found {len(failed)}")

    helpers = {}
    slice_desc = None
    for node in range(1, params.M + 1):
        if node in failed:
            continue
        shard = read_shard(shard_path(run_dir, node), expected_digest=digest)
        shard.check_complete(params.pairmap)
        if slice_desc is None:
            slice_desc = shard.slice
        elif shard.slice != slice_desc:
            raise ShardFormatError(f"shard of node {node} covers a different slice")
        helpers[node] = shard.symbols
    if slice_desc is None:
        raise UsageError("no helper shards available")

    f1, f2 = failed
    shards, transcript = cooperative_repair(
        params, (f1, f2), slice_desc, reader_from_symbols(params.field, helpers),
        digest=digest, subset_seed=subset_seed, n_jobs=n_jobs,
    )

    expected = original_symbols(params, cfg.seed, slice_desc, failed)
    for node, shard in shards.items():
        wrong = [key for key, value in shard.symbols.items() if expected[node].get(key) != value]
        if wrong or set(shard.symbols) != set(expected[node]):
            raise IntegrityError(
                f"node {node}: {len(wrong)} recovered symbols differ from the original"
            )

    report = build_report(transcript, params)
    for node, shard in shards.items():
        write_shard(shard, shard_path(run_dir, node))
        lost_path(run_dir, node).unlink(missing_ok=True)
    db.set_node_status(run_dir, failed, db.STATUS_REPAIRED)

    transcript_path = Path(run_dir) / config.TRANSCRIPT_FILE_NAME
    with open(transcript_path, "w") as f:
        json.dump(transcript.to_dict(), f, sort_keys=True)

    db.save_repair_run(
        run_dir, (f1, f2), sum(s.groups for s in transcript.blocks), report.rb_total,
        str(report.eps_measured), report.helpers_P, str(transcript_path),
    )
    print(
        f"Repaired nodes {f1} and {f2}: {len(transcript.downloads)} symbols downloaded, "
        f"P={report.helpers_P}, eps={report_view.fmt(report.eps_measured)}"
    )
    return shards, transcript


def cmd_report(run_dir: Path) -> str:
    _, params, _ = load_run(run_dir)
    path = Path(run_dir) / config.TRANSCRIPT_FILE_NAME
    transcript: RepairTranscript = report_view.load_transcript(path)
    report = build_report(transcript, params)
    scaling = scaling_report(
        q=params.outer.q, u=1, outer_g=params.outer.K, N=params.N, M=params.M,
        configured_field=params.field.order,
    )
    text = report_view.render(report, scaling)
    (Path(run_dir) / config.REPORT_FILE_NAME).write_text(text)
    print(text, end="")
    return text


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=config.DATA_DIR, help="Run directory")

    parser = argparse.ArgumentParser(description="epsilon-MSCR cooperative repair simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-params", parents=[common], help="Write params.bin")
    gen.add_argument("--config", type=Path, help="Experiment config file (key = value)")
    gen.add_argument("--seed", type=int, help="Message seed")
    gen.add_argument("--groups", type=int, help="Sampled groups per block")
    gen.add_argument("--fail", type=str, help="Failed pair i1,i2 the slice is cut for")

    sub.add_parser("encode", parents=[common], help="Write all node shards")

    fail = sub.add_parser("fail", parents=[common], help="Mark two nodes failed")
    fail.add_argument("--fail", type=str, required=True, help="Nodes i1,i2")

    rep = sub.add_parser("repair", parents=[common], help="Repair the failed nodes")
    rep.add_argument("--subset-seed", type=int, help="Pick download subsets with this seed")
    rep.add_argument("--jobs", type=int, help="Parallel repair workers")

    sub.add_parser("report", parents=[common], help="Render the repair report")
    return parser


def run(args) -> None:
    if args.command == "gen-params":
        cfg = load_experiment_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.groups is not None:
            overrides["groups"] = args.groups
        if args.fail is not None:
            overrides["fail"] = parse_fail(args.fail)
        cmd_gen_params(replace(cfg, **overrides), args.out)
    elif args.command == "encode":
        cmd_encode(args.out)
    elif args.command == "fail":
        cmd_fail(args.out, parse_fail(args.fail))
    elif args.command == "repair":
        cmd_repair(args.out, subset_seed=args.subset_seed, n_jobs=args.jobs)
    elif args.command == "report":
        cmd_report(args.out)


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        run(args)
    except (ShardFormatError, IntegrityError, RepairError, SingularSystemError) as e:
        logger.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError) as e:
        logger.error("%s", e)
        print(f"usage error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
