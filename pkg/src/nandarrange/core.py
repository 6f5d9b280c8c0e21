"""Domain types and permutation mechanics for wordline-level page arrangement.

A block is an N x C integer matrix: row n is the physical page on wordline n,
column i is a bitline. Cells hold QLC program levels 0..15 (0 = erased).
Arrangement decisions are permutations in gather form: ``order[i]`` names the
source page stored at physical wordline position i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidArgument,
    LevelOutOfRange,
    NotABijection,
)

LEVELS = 16
ERASED = 0

# Plain ints carry program levels; range checks happen at module boundaries.
ProgramLevel = int


@dataclass(frozen=True)
class ArchConfig:
    """Block geometry plus the lateral-coupling score coefficients.

    k1 weighs the upside neighbor (wordline n+1), k2 the underside neighbor
    (wordline n-1); alpha rescales all scores without changing their order.
    """

    num_wordlines: int = 16
    cells_per_page: int = 64
    k1: float = 4.0
    k2: float = 1.0
    alpha: float = 1.0

    levels: int = LEVELS

    def __post_init__(self):
        if self.num_wordlines < 3:
            raise InvalidArgument(
                f"num_wordlines must be >= 3 (a wordline triple must exist), got {self.num_wordlines}"
            )
        if self.cells_per_page < 1:
            raise InvalidArgument(f"cells_per_page must be positive, got {self.cells_per_page}")
        if self.levels != LEVELS:
            raise InvalidArgument(f"levels is fixed at {LEVELS} for QLC, got {self.levels}")
        if not (self.k1 > 0 and self.k2 > 0 and self.alpha > 0):
            raise InvalidArgument("k1, k2 and alpha must all be positive")


@dataclass(frozen=True, eq=False)
class BlockPattern:
    """Immutable N x C matrix of program levels, wordline-major."""

    cells: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.cells)
        if arr.ndim != 2:
            raise DimensionMismatch(f"cells must be a 2-D matrix, got ndim={arr.ndim}")
        if not np.issubdtype(arr.dtype, np.integer):
            raise LevelOutOfRange(f"cells must hold integers, got dtype {arr.dtype}")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "cells", arr)

    @property
    def num_wordlines(self) -> int:
        return self.cells.shape[0]

    @property
    def cells_per_page(self) -> int:
        return self.cells.shape[1]


@dataclass(frozen=True)
class Permutation:
    """Bijection on 0..N-1; ``order[i]`` = source page placed at position i."""

    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(v) for v in self.order)
        n = len(order)
        if sorted(order) != list(range(n)):
            raise NotABijection(f"not a bijection on 0..{n - 1}: {order}")
        object.__setattr__(self, "order", order)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def of(cls, values: Iterable[int]) -> "Permutation":
        return cls(tuple(values))

    def __len__(self) -> int:
        return len(self.order)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.order, dtype=np.int64)


def validate_pattern(pattern: BlockPattern, cfg: ArchConfig) -> None:
    """Raise unless ``pattern`` satisfies every block invariant under ``cfg``.

    Reports the first offending cell in row-major order for range violations.
    """
    cells = pattern.cells
    if cells.shape != (cfg.num_wordlines, cfg.cells_per_page):
        raise DimensionMismatch(
            f"pattern is {cells.shape[0]}x{cells.shape[1]}, "
            f"config wants {cfg.num_wordlines}x{cfg.cells_per_page}"
        )
    bad = (cells < 0) | (cells > LEVELS - 1)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise LevelOutOfRange(
            f"cell ({row}, {col}) holds {int(cells[row, col])}, allowed range is 0..{LEVELS - 1}"
        )


def apply_permutation(pattern: BlockPattern, perm: Permutation) -> BlockPattern:
    """Gather rows: result row i = pattern row ``perm.order[i]``. Input unchanged."""
    if len(perm) != pattern.num_wordlines:
        raise DimensionMismatch(
            f"permutation length {len(perm)} != wordline count {pattern.num_wordlines}"
        )
    return BlockPattern(pattern.cells[perm.as_array()])


def invert_permutation(perm: Permutation) -> Permutation:
    """Return sigma^-1 so that applying it after ``perm`` restores the identity."""
    inverse = [0] * len(perm)
    for position, source in enumerate(perm.order):
        inverse[source] = position
    return Permutation(tuple(inverse))
