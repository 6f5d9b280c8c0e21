"""Gray-code level mapping, dataset production, and the binary file codecs.

Two little-endian formats live here:

PDAP pattern file    magic "PDAP", version 0x01, N as u32, C as u32,
                     then N*C raw cell bytes wordline-major.
PDAM mapping table   magic "PDAM", version 0x01, N as u16, then N u16
                     entries; entry i = source page stored at physical
                     wordline i. Payload after the 7-byte header is exactly
                     2N bytes, which is the whole metadata cost of realizing
                     an arrangement through FTL address mapping.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import LEVELS, ArchConfig, BlockPattern, Permutation
from .errors import (
    BadMagic,
    InvalidArgument,
    LevelOutOfRange,
    NotABijection,
    TooFewBlocks,
    TruncatedFile,
    UnsupportedVersion,
)

# Recorded in generation manifests so datasets can be reproduced bit-exactly.
GENERATOR_ID = "numpy-pcg64"

PATTERN_MAGIC = b"PDAP"
MAPPING_MAGIC = b"PDAM"
FORMAT_VERSION = 1

_GRAY = tuple(x ^ (x >> 1) for x in range(LEVELS))
_GRAY_INV = tuple(_GRAY.index(code) for code in range(LEVELS))
GRAY_TABLE = np.array(_GRAY, dtype=np.uint8)


def gray_encode(level: int) -> int:
    """Reflected binary Gray code of a program level; bit k lands on logical page k."""
    level = int(level)
    if not 0 <= level < LEVELS:
        raise LevelOutOfRange(f"level {level} outside 0..{LEVELS - 1}")
    return _GRAY[level]


def gray_decode(code: int) -> int:
    code = int(code)
    if not 0 <= code < LEVELS:
        raise LevelOutOfRange(f"code {code} outside 0..{LEVELS - 1}")
    return _GRAY_INV[code]


def gen_random_block(cfg: ArchConfig, seed: int) -> BlockPattern:
    """Uniform i.i.d. levels from a seeded PCG64 stream (see GENERATOR_ID)."""
    rng = np.random.Generator(np.random.PCG64(seed))
    cells = rng.integers(0, LEVELS, size=(cfg.num_wordlines, cfg.cells_per_page), dtype=np.uint8)
    return BlockPattern(cells)


def split_indices(count: int, seed: int) -> tuple[list[int], list[int]]:
    """Seeded shuffle of 0..count-1 followed by a 70/30 cut (half-up rounding)."""
    if count < 10:
        raise TooFewBlocks(f"need at least 10 blocks to split, got {count}")
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(count)
    n_train = int(np.floor(0.7 * count + 0.5))
    return [int(i) for i in order[:n_train]], [int(i) for i in order[n_train:]]


def split_dataset(
    blocks: list[BlockPattern], seed: int
) -> tuple[list[BlockPattern], list[BlockPattern]]:
    """Disjoint, covering 7:3 train/test split, deterministic given seed."""
    train_idx, test_idx = split_indices(len(blocks), seed)
    return [blocks[i] for i in train_idx], [blocks[i] for i in test_idx]


@dataclass(frozen=True)
class MappingTable:
    """Deserialized FTL arrangement artifact: entry i = source page at wordline i."""

    entries: tuple[int, ...]

    def __post_init__(self):
        n = len(self.entries)
        if sorted(self.entries) != list(range(n)):
            raise NotABijection(f"mapping entries are not a bijection on 0..{n - 1}")

    def as_permutation(self) -> Permutation:
        return Permutation(self.entries)


def write_mapping_table(perm: Permutation) -> bytes:
    n = len(perm)
    if n > 0xFFFF:
        raise InvalidArgument(f"mapping table limited to 65535 wordlines, got {n}")
    header = MAPPING_MAGIC + struct.pack("<BH", FORMAT_VERSION, n)
    payload = struct.pack(f"<{n}H", *perm.order)
    return header + payload


def read_mapping_table(data: bytes) -> MappingTable:
    if len(data) < 4 or data[:4] != MAPPING_MAGIC:
        raise BadMagic(f"expected magic {MAPPING_MAGIC!r}, got {bytes(data[:4])!r}")
    if len(data) < 7:
        raise TruncatedFile(f"mapping header needs 7 bytes, file has {len(data)}")
    version, n = struct.unpack("<BH", data[4:7])
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"mapping table version {version}, supported: {FORMAT_VERSION}")
    expected = 7 + 2 * n
    if len(data) != expected:
        raise TruncatedFile(f"mapping table for N={n} must be {expected} bytes, got {len(data)}")
    entries = struct.unpack(f"<{n}H", data[7:])
    return MappingTable(entries)


def write_pattern(pattern: BlockPattern) -> bytes:
    cells = pattern.cells
    if cells.size and (cells.min() < 0 or cells.max() >= LEVELS):
        raise LevelOutOfRange("pattern holds levels outside 0..15, refusing to encode")
    header = PATTERN_MAGIC + struct.pack(
        "<BII", FORMAT_VERSION, pattern.num_wordlines, pattern.cells_per_page
    )
    return header + cells.astype(np.uint8).tobytes(order="C")


def read_pattern(data: bytes) -> BlockPattern:
    if len(data) < 4 or data[:4] != PATTERN_MAGIC:
        raise BadMagic(f"expected magic {PATTERN_MAGIC!r}, got {bytes(data[:4])!r}")
    if len(data) < 13:
        raise TruncatedFile(f"pattern header needs 13 bytes, file has {len(data)}")
    version, n, c = struct.unpack("<BII", data[4:13])
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(f"pattern version {version}, supported: {FORMAT_VERSION}")
    expected = 13 + n * c
    if len(data) != expected:
        raise TruncatedFile(f"pattern for {n}x{c} must be {expected} bytes, got {len(data)}")
    cells = np.frombuffer(data[13:], dtype=np.uint8).reshape(n, c)
    if cells.size and cells.max() >= LEVELS:
        row, col = np.argwhere(cells >= LEVELS)[0]
        raise LevelOutOfRange(
            f"cell ({row}, {col}) holds byte {int(cells[row, col])}, allowed 0..{LEVELS - 1}"
        )
    return BlockPattern(cells)


def save_pattern(path: str | Path, pattern: BlockPattern) -> None:
    Path(path).write_bytes(write_pattern(pattern))


def load_pattern(path: str | Path) -> BlockPattern:
    return read_pattern(Path(path).read_bytes())


def save_mapping_table(path: str | Path, perm: Permutation) -> None:
    Path(path).write_bytes(write_mapping_table(perm))


def load_mapping_table(path: str | Path) -> MappingTable:
    return read_mapping_table(Path(path).read_bytes())
