import numpy as np
import pytest
from hypothesis import given, strategies as st

from nandarrange import (
    ArchConfig,
    BlockPattern,
    Permutation,
    apply_permutation,
    invert_permutation,
    validate_pattern,
)
from nandarrange.errors import (
    DimensionMismatch,
    InvalidArgument,
    LevelOutOfRange,
    NotABijection,
)


def pattern_of(rows):
    return BlockPattern(np.asarray(rows, dtype=np.int64))


class TestArchConfig:
    def test_defaults(self):
        cfg = ArchConfig()
        assert (cfg.num_wordlines, cfg.cells_per_page) == (16, 64)
        assert (cfg.k1, cfg.k2, cfg.alpha) == (4.0, 1.0, 1.0)
        assert cfg.levels == 16

    def test_rejects_two_wordlines(self):
        with pytest.raises(InvalidArgument):
            ArchConfig(num_wordlines=2, cells_per_page=4)

    @pytest.mark.parametrize(
        "kwargs",
        [dict(k1=0), dict(k2=-1.0), dict(alpha=0), dict(cells_per_page=0), dict(levels=8)],
    )
    def test_rejects_bad_fields(self, kwargs):
        base = dict(num_wordlines=4, cells_per_page=8)
        base.update(kwargs)
        with pytest.raises(InvalidArgument):
            ArchConfig(**base)


class TestValidatePattern:
    def test_all_erased_block_is_valid(self):
        cfg = ArchConfig(num_wordlines=4, cells_per_page=8)
        validate_pattern(pattern_of(np.zeros((4, 8))), cfg)

    def test_level_16_rejected_with_location(self):
        cfg = ArchConfig(num_wordlines=4, cells_per_page=8)
        cells = np.zeros((4, 8), dtype=np.int64)
        cells[2, 5] = 16
        with pytest.raises(LevelOutOfRange, match=r"\(2, 5\)"):
            validate_pattern(pattern_of(cells), cfg)

    def test_shape_mismatch(self):
        cfg = ArchConfig(num_wordlines=4, cells_per_page=8)
        with pytest.raises(DimensionMismatch):
            validate_pattern(pattern_of(np.zeros((3, 8))), cfg)

    def test_negative_level_rejected(self):
        cfg = ArchConfig(num_wordlines=3, cells_per_page=1)
        with pytest.raises(LevelOutOfRange):
            validate_pattern(pattern_of([[0], [-1], [0]]), cfg)


class TestPermutation:
    def test_identity(self):
        assert Permutation.identity(4).order == (0, 1, 2, 3)

    @pytest.mark.parametrize("bad", [(0, 0, 1), (1, 2, 3), (0,) * 3])
    def test_rejects_non_bijection(self, bad):
        with pytest.raises(NotABijection):
            Permutation(bad)

    def test_apply_identity_is_noop(self):
        p = pattern_of([[1, 2], [3, 4], [5, 6]])
        out = apply_permutation(p, Permutation.identity(3))
        assert np.array_equal(out.cells, p.cells)

    def test_apply_gathers_rows(self):
        p = pattern_of([[1], [2], [3]])  # rows A, B, C
        out = apply_permutation(p, Permutation((2, 0, 1)))
        assert out.cells[:, 0].tolist() == [3, 1, 2]  # C, A, B

    def test_apply_length_mismatch(self):
        p = pattern_of([[0], [0], [0]])
        with pytest.raises(DimensionMismatch):
            apply_permutation(p, Permutation((1, 0)))

    def test_apply_leaves_input_unchanged(self):
        cells = np.arange(12).reshape(4, 3) % 16
        p = BlockPattern(cells)
        apply_permutation(p, Permutation((3, 2, 1, 0)))
        assert np.array_equal(p.cells, cells)

    def test_invert_known_values(self):
        assert invert_permutation(Permutation((2, 0, 1))).order == (1, 2, 0)
        assert invert_permutation(Permutation((1, 0))).order == (1, 0)
        ident = Permutation.identity(5)
        assert invert_permutation(ident).order == ident.order


def brute_force_inverse(perm: Permutation) -> Permutation:
    # Independent oracle: solve result[perm[i]] = i by scanning.
    n = len(perm)
    result = []
    for target in range(n):
        for i in range(n):
            if perm.order[i] == target:
                result.append(i)
                break
    return Permutation(tuple(result))


@given(st.permutations(list(range(6))), st.integers(0, 2**31 - 1))
def test_apply_then_inverse_restores(order, seed):
    rng = np.random.default_rng(seed)
    p = BlockPattern(rng.integers(0, 16, size=(6, 4), dtype=np.uint8))
    sigma = Permutation(tuple(order))
    roundtrip = apply_permutation(apply_permutation(p, sigma), brute_force_inverse(sigma))
    assert np.array_equal(roundtrip.cells, p.cells)


@given(st.permutations(list(range(7))))
def test_double_inverse_is_identity_map(order):
    sigma = Permutation(tuple(order))
    assert invert_permutation(invert_permutation(sigma)).order == sigma.order


@given(st.permutations(list(range(5))), st.integers(0, 2**31 - 1))
def test_apply_preserves_row_multiset(order, seed):
    rng = np.random.default_rng(seed)
    p = BlockPattern(rng.integers(0, 16, size=(5, 3), dtype=np.uint8))
    out = apply_permutation(p, Permutation(tuple(order)))
    before = sorted(p.cells[i].tobytes() for i in range(5))
    after = sorted(out.cells[i].tobytes() for i in range(5))
    assert before == after


@given(st.permutations(list(range(5))), st.integers(0, 2**31 - 1))
def test_apply_preserves_validity(order, seed):
    cfg = ArchConfig(num_wordlines=5, cells_per_page=3)
    rng = np.random.default_rng(seed)
    p = BlockPattern(rng.integers(0, 16, size=(5, 3), dtype=np.uint8))
    validate_pattern(p, cfg)
    validate_pattern(apply_permutation(p, Permutation(tuple(order))), cfg)


def test_block_pattern_is_read_only():
    p = pattern_of([[0], [1], [2]])
    with pytest.raises(ValueError):
        p.cells[0, 0] = 3
