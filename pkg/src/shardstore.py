"""
On-disk formats for a run directory: the parameter file and node shards.

Shard file (all integers big-endian):
    magic "EMSCR1\\0" + version 0x01
    32-byte SHA-256 digest of the parameter file
    node id                                 u64
    lane count                              u64
      per lane: block, |free|, free positions, |anchors|  (u64 each)
                anchors                     (u128 each)
    entry count                             u64
      per entry: block u16, b u128, symbol u16, sorted by (block, b)

Parameter file:
    magic "EMSCRP\\0" + version 0x01
    u64 fields: field order, poly, generator, subgroup order, q, k, N, K,
    seed, groups, fail1, fail2, then N evaluation points, 2n lambdas and M
    sigmas.

Writes go to a temporary file in the target directory and are moved into
place with os.replace, so readers never see a partial file.
"""

import hashlib
import logging
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

from src import indexspace
from src.indexspace import BIndex, PairMap

logger = logging.getLogger(__name__)

SHARD_MAGIC = b"EMSCR1\x00"
PARAMS_MAGIC = b"EMSCRP\x00"
VERSION = 1
DIGEST_SIZE = 32

_U16 = struct.Struct(">H")
_U64 = struct.Struct(">Q")
_U128 = struct.Struct(">QQ")
_ENTRY = struct.Struct(">HQQH")
_MASK64 = (1 << 64) - 1


class ShardFormatError(ValueError):
    """Base class for malformed shard or parameter files."""


class MagicMismatchError(ShardFormatError):
    pass


class DigestMismatchError(ShardFormatError):
    pass


class TruncatedShardError(ShardFormatError):
    pass


class ParamsFileError(ShardFormatError):
    """The parameter file is malformed or inconsistent with its own fields."""


# ---------------------------------------------------------------------------
# Slices and shards
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SliceLane:
    """
    Coordinates of one block: every anchor with the free digits ranging
    over {0, 1, 2}. Anchors fix all non-free digits.
    """

    block: int
    free: tuple
    anchors: tuple

    def coords(self, pm: PairMap) -> list[BIndex]:
        return indexspace.expand(pm, self.free, self.anchors)


@dataclass(frozen=True)
class SliceDescriptor:
    lanes: tuple = ()

    @property
    def blocks(self) -> list[int]:
        return sorted({lane.block for lane in self.lanes})

    def block_coords(self, pm: PairMap) -> dict[int, list[BIndex]]:
        """block -> sorted coordinate indices."""
        out: dict[int, set] = {}
        for lane in self.lanes:
            out.setdefault(lane.block, set()).update(lane.coords(pm))
        return {block: sorted(bs) for block, bs in sorted(out.items())}

    def coords(self, pm: PairMap) -> list[tuple[int, BIndex]]:
        return [(block, b) for block, bs in self.block_coords(pm).items() for b in bs]


@dataclass
class Shard:
    """Node i's symbols restricted to a slice: symbols[(block, b)] = int."""

    node: int
    digest: bytes
    slice: SliceDescriptor
    symbols: dict

    def check_complete(self, pm: PairMap):
        expected = set(self.slice.coords(pm))
        if set(self.symbols) != expected:
            missing = len(expected - set(self.symbols))
            extra = len(set(self.symbols) - expected)
            raise ShardFormatError(
                f"shard of node {self.node}: {missing} slice coordinates missing, {extra} extra"
            )


# ---------------------------------------------------------------------------
# Low-level cursor
# ---------------------------------------------------------------------------

class _Reader:
    def __init__(self, data: bytes, what: str):
        self.data = data
        self.offset = 0
        self.what = what

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise TruncatedShardError(
                f"{self.what} truncated at byte {self.offset} (need {n} more)"
            )
        out = self.data[self.offset: self.offset + n]
        self.offset += n
        return out

    def unpack(self, st: struct.Struct) -> tuple:
        return st.unpack(self.take(st.size))

    def u64(self) -> int:
        return self.unpack(_U64)[0]

    def u128(self) -> int:
        hi, lo = self.unpack(_U128)
        return (hi << 64) | lo

    def done(self):
        if self.offset != len(self.data):
            raise ShardFormatError(f"{self.what} has {len(self.data) - self.offset} trailing bytes")


def _u128(value: int) -> bytes:
    return _U128.pack(value >> 64, value & _MASK64)


def _check_magic(r: _Reader, magic: bytes, error: type):
    head = r.take(len(magic) + 1)
    if head[:-1] != magic:
        raise error(f"{r.what}: bad magic {head[:-1]!r}")
    if head[-1] != VERSION:
        raise error(f"{r.what}: unsupported version {head[-1]}")


def _atomic_write(path: Path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


# ---------------------------------------------------------------------------
# Shard codec
# ---------------------------------------------------------------------------

def encode_shard(shard: Shard) -> bytes:
    if len(shard.digest) != DIGEST_SIZE:
        raise ShardFormatError(f"digest must be {DIGEST_SIZE} bytes, got {len(shard.digest)}")
    parts = [SHARD_MAGIC, bytes([VERSION]), shard.digest, _U64.pack(shard.node)]

    parts.append(_U64.pack(len(shard.slice.lanes)))
    for lane in shard.slice.lanes:
        parts.append(_U64.pack(lane.block))
        parts.append(_U64.pack(len(lane.free)))
        parts.extend(_U64.pack(pos) for pos in lane.free)
        parts.append(_U64.pack(len(lane.anchors)))
        parts.extend(_u128(a) for a in lane.anchors)

    parts.append(_U64.pack(len(shard.symbols)))
    for (block, b), value in sorted(shard.symbols.items()):
        if value >= 1 << 16:
            raise ShardFormatError(f"symbol {value} does not fit in 16 bits")
        parts.append(_ENTRY.pack(block, b >> 64, b & _MASK64, value))
    return b"".join(parts)


def decode_shard(data: bytes, expected_digest: bytes | None = None) -> Shard:
    r = _Reader(data, "shard")
    _check_magic(r, SHARD_MAGIC, MagicMismatchError)
    digest = r.take(DIGEST_SIZE)
    if expected_digest is not None and digest != expected_digest:
        raise DigestMismatchError(
            f"shard digest {digest.hex()[:16]} does not match parameters {expected_digest.hex()[:16]}"
        )
    node = r.u64()

    lanes = []
    for _ in range(r.u64()):
        block = r.u64()
        free = tuple(r.u64() for _ in range(r.u64()))
        anchors = tuple(r.u128() for _ in range(r.u64()))
        lanes.append(SliceLane(block=block, free=free, anchors=anchors))

    symbols = {}
    for _ in range(r.u64()):
        block, hi, lo, value = r.unpack(_ENTRY)
        symbols[(block, (hi << 64) | lo)] = value
    r.done()
    return Shard(node=node, digest=digest, slice=SliceDescriptor(tuple(lanes)), symbols=symbols)


def write_shard(shard: Shard, path: Path) -> Path:
    _atomic_write(path, encode_shard(shard))
    logger.debug("Wrote shard of node %d (%d symbols) to %s", shard.node, len(shard.symbols), path)
    return Path(path)


def read_shard(path: Path, expected_digest: bytes | None = None) -> Shard:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"shard file {path} does not exist")
    return decode_shard(path.read_bytes(), expected_digest)


# ---------------------------------------------------------------------------
# Parameter file
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParamsRecord:
    field_order: int
    field_poly: int
    generator: int
    subgroup_order: int
    q: int
    k: int
    outer_n: int
    outer_k: int
    seed: int
    groups: int
    fail: tuple
    eval_points: tuple
    lam: tuple  # flattened (lambda_{1,0}, lambda_{1,1}, lambda_{2,0}, ...)
    sigma: tuple


def encode_params(rec: ParamsRecord) -> bytes:
    head = (
        rec.field_order, rec.field_poly, rec.generator, rec.subgroup_order,
        rec.q, rec.k, rec.outer_n, rec.outer_k, rec.seed, rec.groups,
        rec.fail[0], rec.fail[1],
    )
    values = head + tuple(rec.eval_points) + tuple(rec.lam) + tuple(rec.sigma)
    return PARAMS_MAGIC + bytes([VERSION]) + b"".join(_U64.pack(v) for v in values)


def _check_table_sizes(r: _Reader, q: int, outer_n: int, outer_k: int):
    """Reject header counts that cannot fit in the bytes left."""
    left = (len(r.data) - r.offset) // _U64.size
    if outer_n > left or 2 * q > left:
        raise ParamsFileError(
            f"parameter file header claims outer_n={outer_n}, q={q} but only {left} values follow"
        )
    # q^outer_k >= 2^outer_k for q >= 2
    if q >= 2 and outer_k > left.bit_length():
        raise ParamsFileError(f"parameter file header claims outer_k={outer_k}, too large for the file")
    if outer_n + 2 * q + q ** outer_k > left:
        raise ParamsFileError(
            f"parameter file needs {outer_n + 2 * q + q ** outer_k} table values, {left} follow"
        )


def decode_params(data: bytes) -> ParamsRecord:
    r = _Reader(data, "parameter file")
    try:
        _check_magic(r, PARAMS_MAGIC, ParamsFileError)
        head = [r.u64() for _ in range(12)]
        (order, poly, gen, sub, q, k, outer_n, outer_k, seed, groups, fail1, fail2) = head
        _check_table_sizes(r, q, outer_n, outer_k)
        eval_points = tuple(r.u64() for _ in range(outer_n))
        lam = tuple(r.u64() for _ in range(2 * q))
        sigma = tuple(r.u64() for _ in range(q ** outer_k))
        r.done()
    except TruncatedShardError as e:
        raise ParamsFileError(str(e)) from e
    return ParamsRecord(
        field_order=order, field_poly=poly, generator=gen, subgroup_order=sub,
        q=q, k=k, outer_n=outer_n, outer_k=outer_k, seed=seed, groups=groups,
        fail=(fail1, fail2), eval_points=eval_points, lam=lam, sigma=sigma,
    )


def params_digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def write_params(rec: ParamsRecord, path: Path) -> bytes:
    """Write the parameter file and return its digest."""
    data = encode_params(rec)
    _atomic_write(path, data)
    logger.info("Wrote parameter file %s", path)
    return params_digest(data)


def read_params(path: Path) -> tuple[ParamsRecord, bytes]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"parameter file {path} does not exist")
    data = path.read_bytes()
    return decode_params(data), params_digest(data)
