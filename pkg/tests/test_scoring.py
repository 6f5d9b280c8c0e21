import itertools

import numpy as np
import pytest

from nandarrange import (
    ArchConfig,
    BlockPattern,
    Permutation,
    ae_coefficient,
    apply_permutation,
    block_score,
    build_score_tensor,
    cell_score,
    page_triple_score,
)
from nandarrange.errors import LengthMismatch, LevelOutOfRange, TooFewWordlines
from nandarrange.scoring import tensor_build_count

CFG = ArchConfig(num_wordlines=4, cells_per_page=8)

# Every erased/programmed class of the coupling table, with representative
# programmed levels.
AE_TABLE = [
    ((15, 0, 7), 5),   # P 0 P
    ((0, 0, 0), 5),    # 0 0 0
    ((3, 8, 12), 5),   # P P P
    ((0, 9, 0), 1),    # 0 P 0
    ((0, 0, 11), 5),   # 0 0 P
    ((0, 9, 3), 2),    # 0 P P
    ((6, 0, 0), 5),    # P 0 0
    ((14, 2, 0), 2),   # P P 0
]


@pytest.mark.parametrize("triple,expected", AE_TABLE)
def test_ae_table_rows(triple, expected):
    assert ae_coefficient(*triple) == expected


def test_ae_depends_only_on_erased_pattern():
    rng = np.random.default_rng(0)
    for _ in range(200):
        base = rng.integers(0, 16, size=3)
        programmed = rng.integers(1, 16, size=3)
        varied = np.where(base > 0, programmed, 0)
        assert ae_coefficient(*base) == ae_coefficient(*varied)


def test_ae_rejects_out_of_range():
    with pytest.raises(LevelOutOfRange):
        ae_coefficient(16, 0, 0)


class TestCellScore:
    def test_hand_evaluated_triples(self):
        assert cell_score(0, 0, 0, CFG) == 1280.0
        assert cell_score(15, 0, 15, CFG) == 80.0
        assert cell_score(0, 15, 0, CFG) == 1.0

    def test_positive_everywhere_and_max_at_origin(self):
        values = [
            cell_score(u, m, p, CFG)
            for u, m, p in itertools.product(range(16), repeat=3)
        ]
        assert min(values) > 0
        assert max(values) == 1280.0 == cell_score(0, 0, 0, CFG)

    def test_asymmetric_under_neighbor_swap(self):
        assert cell_score(0, 5, 9, CFG) != cell_score(9, 5, 0, CFG)

    def test_alpha_rescales_scores(self):
        scaled = ArchConfig(num_wordlines=4, cells_per_page=8, alpha=4.0)
        for triple in [(0, 0, 0), (3, 7, 12), (15, 1, 2)]:
            assert cell_score(*triple, scaled) == pytest.approx(cell_score(*triple, CFG) / 4.0)


class TestPageTripleScore:
    def test_all_zero_pages(self):
        zeros = np.zeros(4, dtype=np.int64)
        assert page_triple_score(zeros, zeros, zeros, CFG) == 5120.0

    def test_single_cell_matches_cell_score(self):
        assert page_triple_score(np.array([0]), np.array([15]), np.array([0]), CFG) == 1.0

    def test_two_cells_sum(self):
        under = np.array([0, 15])
        mid = np.array([15, 0])
        up = np.array([0, 15])
        assert page_triple_score(under, mid, up, CFG) == 81.0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            page_triple_score(np.zeros(3, dtype=int), np.zeros(4, dtype=int), np.zeros(3, dtype=int), CFG)


class TestBlockScore:
    def test_interior_triples_only(self):
        cfg = ArchConfig(num_wordlines=4, cells_per_page=1)
        assert block_score(BlockPattern(np.zeros((4, 1), dtype=np.uint8)), cfg) == 2560.0

    def test_three_wordline_sandwich(self):
        cfg = ArchConfig(num_wordlines=3, cells_per_page=1)
        pattern = BlockPattern(np.array([[0], [15], [0]], dtype=np.uint8))
        assert block_score(pattern, cfg) == 1.0

    def test_three_wordlines_equals_page_triple(self):
        cfg = ArchConfig(num_wordlines=3, cells_per_page=6)
        rng = np.random.default_rng(5)
        cells = rng.integers(0, 16, size=(3, 6), dtype=np.uint8)
        pattern = BlockPattern(cells)
        expected = page_triple_score(cells[0], cells[1], cells[2], cfg)
        assert block_score(pattern, cfg) == pytest.approx(expected, rel=1e-12)

    def test_rejects_short_blocks(self):
        with pytest.raises(TooFewWordlines):
            block_score(BlockPattern(np.zeros((2, 1), dtype=np.uint8)), CFG)


class TestScoreTensor:
    def test_repeated_indices_are_zero(self):
        cfg = ArchConfig(num_wordlines=4, cells_per_page=2)
        rng = np.random.default_rng(1)
        tensor = build_score_tensor(BlockPattern(rng.integers(0, 16, size=(4, 2), dtype=np.uint8)), cfg)
        for i in range(4):
            for j in range(4):
                assert tensor[i, i, j] == 0
                assert tensor[i, j, i] == 0
                assert tensor[j, i, i] == 0

    def test_nonzero_entry_count(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=3)
        rng = np.random.default_rng(2)
        tensor = build_score_tensor(BlockPattern(rng.integers(0, 16, size=(5, 3), dtype=np.uint8)), cfg)
        assert int((tensor > 0).sum()) == 5 * 4 * 3

    def test_all_zero_pattern_entry(self):
        cfg = ArchConfig(num_wordlines=3, cells_per_page=1)
        tensor = build_score_tensor(BlockPattern(np.zeros((3, 1), dtype=np.uint8)), cfg)
        assert tensor[0, 1, 2] == 1280.0

    def test_matches_cell_score_loops(self):
        # Independent slow path: triple loops over cell_score.
        cfg = ArchConfig(num_wordlines=4, cells_per_page=3)
        rng = np.random.default_rng(3)
        cells = rng.integers(0, 16, size=(4, 3), dtype=np.uint8)
        tensor = build_score_tensor(BlockPattern(cells), cfg)
        for a, b, c in itertools.product(range(4), repeat=3):
            if len({a, b, c}) < 3:
                continue
            expected = sum(
                cell_score(int(cells[a, i]), int(cells[b, i]), int(cells[c, i]), cfg)
                for i in range(3)
            )
            assert tensor[a, b, c] == pytest.approx(expected, rel=1e-12)

    def test_build_counter_increments(self):
        cfg = ArchConfig(num_wordlines=3, cells_per_page=1)
        before = tensor_build_count()
        build_score_tensor(BlockPattern(np.zeros((3, 1), dtype=np.uint8)), cfg)
        assert tensor_build_count() == before + 1


def test_decomposition_identity_random_instances():
    # block_score of any arrangement equals the tensor summed over the
    # permutation's consecutive triples: the property linking the block
    # objective to the training tensor.
    cfg = ArchConfig(num_wordlines=5, cells_per_page=4)
    rng = np.random.default_rng(7)
    for _ in range(5):
        pattern = BlockPattern(rng.integers(0, 16, size=(5, 4), dtype=np.uint8))
        tensor = build_score_tensor(pattern, cfg)
        for order in itertools.permutations(range(5)):
            sigma = np.asarray(order)
            direct = block_score(apply_permutation(pattern, Permutation(order)), cfg)
            via_tensor = float(tensor[sigma[:-2], sigma[1:-1], sigma[2:]].sum())
            assert direct == pytest.approx(via_tensor, rel=1e-12)


def test_alpha_invariant_argmax():
    from nandarrange import exhaustive_best

    rng = np.random.default_rng(11)
    cells = rng.integers(0, 16, size=(5, 4), dtype=np.uint8)
    base = ArchConfig(num_wordlines=5, cells_per_page=4)
    scaled = ArchConfig(num_wordlines=5, cells_per_page=4, alpha=3.0)
    pattern = BlockPattern(cells)
    assert exhaustive_best(pattern, base).perm.order == exhaustive_best(pattern, scaled).perm.order
