import itertools
import math

import numpy as np
import pytest

from nandarrange import (
    AnnealSchedule,
    ArchConfig,
    BlockPattern,
    Permutation,
    apply_permutation,
    block_score,
    exhaustive_best,
    gen_random_block,
    greedy_arrange,
    random_search,
    simulated_annealing,
)
from nandarrange.errors import InvalidArgument, TooManyWordlines


def brute_force_max(pattern, cfg):
    # Second, independently coded enumeration: no tensor, direct block_score.
    best = -math.inf
    for order in itertools.permutations(range(pattern.num_wordlines)):
        score = block_score(apply_permutation(pattern, Permutation(order)), cfg)
        best = max(best, score)
    return best


class TestExhaustive:
    def test_evaluates_24_permutations_at_n4(self):
        cfg = ArchConfig(num_wordlines=4, cells_per_page=4)
        result = exhaustive_best(gen_random_block(cfg, seed=3), cfg)
        assert result.evaluations == 24

    def test_identical_rows_give_identity(self):
        cfg = ArchConfig(num_wordlines=4, cells_per_page=4)
        cells = np.tile(np.array([1, 5, 9, 13], dtype=np.uint8), (4, 1))
        result = exhaustive_best(BlockPattern(cells), cfg)
        assert result.perm.order == (0, 1, 2, 3)

    def test_matches_independent_enumeration(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=4)
        pattern = gen_random_block(cfg, seed=42)
        result = exhaustive_best(pattern, cfg)
        assert result.score == pytest.approx(brute_force_max(pattern, cfg), rel=1e-12)

    def test_refuses_large_n(self):
        cfg = ArchConfig(num_wordlines=10, cells_per_page=2)
        with pytest.raises(TooManyWordlines):
            exhaustive_best(gen_random_block(cfg, seed=0), cfg)

    def test_score_matches_recomputation(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=4)
        pattern = gen_random_block(cfg, seed=8)
        result = exhaustive_best(pattern, cfg)
        assert result.score == block_score(apply_permutation(pattern, result.perm), cfg)


class TestRandomSearch:
    def test_single_iteration_scores_one_sample(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=4)
        pattern = gen_random_block(cfg, seed=1)
        result = random_search(pattern, cfg, iterations=1, seed=0)
        assert result.evaluations == 1
        assert result.score == block_score(apply_permutation(pattern, result.perm), cfg)

    def test_deterministic(self):
        cfg = ArchConfig(num_wordlines=6, cells_per_page=4)
        pattern = gen_random_block(cfg, seed=2)
        a = random_search(pattern, cfg, iterations=50, seed=9)
        b = random_search(pattern, cfg, iterations=50, seed=9)
        assert a.perm.order == b.perm.order and a.score == b.score

    def test_never_exceeds_exhaustive(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=4)
        pattern = gen_random_block(cfg, seed=3)
        best = exhaustive_best(pattern, cfg).score
        assert random_search(pattern, cfg, iterations=200, seed=1).score <= best

    def test_usually_finds_small_optimum(self):
        # 10000 draws over 120 permutations: the optimum is found essentially
        # always; allow one miss in 100 seeded trials.
        cfg = ArchConfig(num_wordlines=5, cells_per_page=4)
        hits = 0
        for trial in range(100):
            pattern = gen_random_block(cfg, seed=500 + trial)
            best = exhaustive_best(pattern, cfg).score
            found = random_search(pattern, cfg, iterations=10000, seed=trial).score
            hits += found == pytest.approx(best, rel=1e-12)
        assert hits >= 99

    def test_rejects_zero_iterations(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=4)
        with pytest.raises(InvalidArgument):
            random_search(gen_random_block(cfg, seed=0), cfg, iterations=0, seed=0)


class TestGreedy:
    def test_identical_rows_give_identity(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=3)
        cells = np.tile(np.array([2, 7, 11], dtype=np.uint8), (5, 1))
        assert greedy_arrange(BlockPattern(cells), cfg).perm.order == (0, 1, 2, 3, 4)

    def test_bounded_by_exhaustive(self):
        cfg = ArchConfig(num_wordlines=6, cells_per_page=8)
        for seed in range(10):
            pattern = gen_random_block(cfg, seed=seed)
            assert greedy_arrange(pattern, cfg).score <= exhaustive_best(pattern, cfg).score + 1e-9

    def test_beats_mean_of_random_permutations(self):
        cfg = ArchConfig(num_wordlines=6, cells_per_page=8)
        pattern = gen_random_block(cfg, seed=7)
        rng = np.random.default_rng(7)
        samples = [
            block_score(apply_permutation(pattern, Permutation(tuple(map(int, rng.permutation(6))))), cfg)
            for _ in range(1000)
        ]
        assert greedy_arrange(pattern, cfg).score >= np.mean(samples)

    def test_evaluation_count(self):
        cfg = ArchConfig(num_wordlines=5, cells_per_page=2)
        assert greedy_arrange(gen_random_block(cfg, seed=0), cfg).evaluations == 5 * 4


class TestSimulatedAnnealing:
    def test_schedule_validation(self):
        with pytest.raises(InvalidArgument):
            AnnealSchedule(cooling_factor=1.0)
        with pytest.raises(InvalidArgument):
            AnnealSchedule(iterations=0)
        with pytest.raises(InvalidArgument):
            AnnealSchedule(initial_temperature=0.0)

    def test_single_iteration_at_least_greedy(self):
        cfg = ArchConfig(num_wordlines=6, cells_per_page=8)
        pattern = gen_random_block(cfg, seed=11)
        greedy = greedy_arrange(pattern, cfg).score
        result = simulated_annealing(pattern, cfg, AnnealSchedule(iterations=1, seed=0))
        assert result.score >= greedy

    def test_zero_temperature_hill_climbs(self):
        cfg = ArchConfig(num_wordlines=6, cells_per_page=8)
        pattern = gen_random_block(cfg, seed=13)
        history = []
        simulated_annealing(
            pattern,
            cfg,
            AnnealSchedule(initial_temperature=1e-12, iterations=2000, seed=3),
            history=history,
        )
        assert all(b >= a for a, b in zip(history, history[1:]))

    def test_deterministic(self):
        cfg = ArchConfig(num_wordlines=6, cells_per_page=8)
        pattern = gen_random_block(cfg, seed=17)
        schedule = AnnealSchedule(iterations=500, seed=21)
        a = simulated_annealing(pattern, cfg, schedule)
        b = simulated_annealing(pattern, cfg, schedule)
        assert a.perm.order == b.perm.order and a.score == b.score

    def test_score_matches_recomputation(self):
        cfg = ArchConfig(num_wordlines=6, cells_per_page=8)
        pattern = gen_random_block(cfg, seed=19)
        result = simulated_annealing(pattern, cfg, AnnealSchedule(iterations=300, seed=5))
        assert result.score == block_score(apply_permutation(pattern, result.perm), cfg)


def test_all_solvers_return_valid_bijections_and_obey_exhaustive_bound():
    cfg = ArchConfig(num_wordlines=6, cells_per_page=6)
    for seed in range(5):
        pattern = gen_random_block(cfg, seed=100 + seed)
        best = exhaustive_best(pattern, cfg)
        others = [
            random_search(pattern, cfg, iterations=100, seed=seed),
            greedy_arrange(pattern, cfg),
            simulated_annealing(pattern, cfg, AnnealSchedule(iterations=500, seed=seed)),
        ]
        for result in [best] + others:
            assert sorted(result.perm.order) == list(range(6))
        for result in others:
            assert result.score <= best.score + 1e-9 * abs(best.score)
