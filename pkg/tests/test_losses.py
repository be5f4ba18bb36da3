import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_assignment_cost
from tdlforge.core import ContractError, ShapeError
from tdlforge.losses import (
    MatchConfig,
    hungarian_assign,
    match_loss,
    repulsion_loss,
    stage1_loss,
    stage2_loss,
    stage3_loss,
    temporal_consistency,
)


class TestTemporalConsistency:
    def test_constant_sequence(self):
        assert temporal_consistency([3.0, 3.0, 3.0]) == 0.0

    def test_unit_steps(self):
        assert temporal_consistency([0.0, 1.0, 0.0]) == pytest.approx(1.0)

    def test_hand_value(self):
        assert temporal_consistency([0.0, 2.0, 6.0]) == pytest.approx(10.0)

    def test_length_one_returns_zero(self):
        assert temporal_consistency([5.0]) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(ContractError):
            temporal_consistency([])

    def test_batched(self):
        assert temporal_consistency([[0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]) \
            == pytest.approx(0.5)


class TestStageLosses:
    def test_stage1_zero_on_perfect_constant(self):
        rows = np.array([[1.0, 1.0, 1.0]])
        assert stage1_loss(rows, rows) == 0.0

    def test_stage1_temporal_term(self):
        rows = np.array([[0.0, 1.0, 0.0]])
        assert stage1_loss(rows, rows) == pytest.approx(0.1)

    def test_stage1_without_regularizer_is_mse(self):
        cfg = MatchConfig(lambda_temporal=0.0)
        pred = np.array([[0.0, 1.0, 0.0]])
        truth = np.array([[1.0, 1.0, 1.0]])
        assert stage1_loss(pred, truth, cfg) == pytest.approx(2.0 / 3.0)

    def test_stage1_shape_mismatch(self):
        with pytest.raises(ShapeError):
            stage1_loss(np.zeros((1, 3)), np.zeros((1, 4)))

    def test_stage2_zero_on_perfect(self):
        k = np.array([[4.0, 4.0, 4.0]])
        n = np.array([[3.0, 3.0, 3.0]])
        assert stage2_loss(k, k, n, n) == 0.0

    def test_stage2_unit_k_error(self):
        k = np.array([[4.0, 4.0]])
        n = np.array([[3.0, 3.0]])
        assert stage2_loss(k + 1.0, k, n, n) == pytest.approx(1.0)

    def test_stage2_fractional_tap_count(self):
        k = np.array([[4.0, 4.0]])
        n = np.array([[3.0, 3.0]])
        assert stage2_loss(k, k, n + 0.5, n) == pytest.approx(0.25)


class TestHungarian:
    def test_one_by_one(self):
        a = hungarian_assign([[5.0]])
        assert a.pairs == ((0, 0),)
        assert a.cost == 5.0

    def test_two_by_two_diagonal(self):
        a = hungarian_assign([[1.0, 2.0], [2.0, 1.0]])
        assert a.cost == pytest.approx(2.0)
        assert sorted(a.pairs) == [(0, 0), (1, 1)]

    def test_rectangular_leaves_rows_unmatched(self):
        a = hungarian_assign([[5.0], [1.0], [3.0]])
        assert a.pairs == ((1, 0),)
        assert set(a.unmatched_pred) == {0, 2}
        assert a.cost == 1.0

    def test_more_columns_than_rows_rejected(self):
        with pytest.raises(ContractError):
            hungarian_assign([[1.0, 2.0]])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            hungarian_assign([[np.inf]])

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 7))
        m = int(rng.integers(n, 8))
        c = rng.uniform(-10.0, 10.0, size=(m, n))
        assert hungarian_assign(c).cost == brute_force_assignment_cost(c)

    def test_assignment_is_injective(self):
        rng = np.random.default_rng(0)
        c = rng.random((6, 4))
        a = hungarian_assign(c)
        rows = [r for r, _ in a.pairs]
        cols = [col for _, col in a.pairs]
        assert len(set(rows)) == len(rows)
        assert sorted(cols) == [0, 1, 2, 3]


class TestMatchLoss:
    def test_perfect_prediction(self):
        taps = [(0.0, 0.0), (100.0, -6.0)]
        loss, assign = match_loss(taps, taps)
        assert loss == 0.0
        assert len(assign.pairs) == 2

    def test_unit_displacement(self):
        cfg = MatchConfig(delay_weight=1.0)
        loss, _ = match_loss([(1.0, 0.0)], [(0.0, 0.0)], cfg)
        assert loss == pytest.approx(1.0)

    def test_swapped_order_costs_nothing(self):
        truth = [(0.0, 0.0), (100.0, -6.0)]
        pred = [(100.0, -6.0), (0.0, 0.0)]
        loss, _ = match_loss(pred, truth)
        assert loss == 0.0

    def test_empty_truth_returns_zero(self):
        loss, assign = match_loss([(0.0, 0.0)], [])
        assert loss == 0.0
        assert assign.pairs == ()
        assert assign.unmatched_pred == (0,)

    def test_fewer_predictions_rejected(self):
        with pytest.raises(ContractError):
            match_loss([(0.0, 0.0)], [(0.0, 0.0), (100.0, -3.0)])

    def test_surplus_predictions_cost_nothing(self):
        truth = [(0.0, 0.0)]
        pred = [(0.0, 0.0), (500.0, -30.0)]
        loss, assign = match_loss(pred, truth)
        assert loss == 0.0
        assert assign.unmatched_pred == (1,)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        truth = rng.uniform(-10, 10, size=(n, 2))
        pred = rng.uniform(-10, 10, size=(n, 2))
        base, _ = match_loss(pred, truth)
        for perm in itertools.permutations(range(n)):
            shuffled, _ = match_loss(pred[list(perm)], truth)
            assert math.isclose(shuffled, base, rel_tol=1e-12, abs_tol=1e-12)

    def test_power_scaling_is_quadratic(self):
        rng = np.random.default_rng(1)
        n = 4
        truth = np.column_stack([np.zeros(n), rng.uniform(-10, 10, n)])
        pred = np.column_stack([np.zeros(n), rng.uniform(-10, 10, n)])
        base, _ = match_loss(pred, truth)
        s = 3.0
        scaled, _ = match_loss(pred * [1.0, s], truth * [1.0, s])
        assert scaled == pytest.approx(s ** 2 * base, rel=1e-9)


class TestRepulsionLoss:
    def test_well_separated_is_zero(self):
        cfg = MatchConfig(repulsion_min_sep_ns=33.3)
        assert repulsion_loss([0.0, 100.0, 200.0], cfg) == 0.0

    def test_duplicate_pair_equals_min_separation(self):
        cfg = MatchConfig(repulsion_min_sep_ns=33.3)
        assert repulsion_loss([50.0, 50.0], cfg) == pytest.approx(33.3)

    def test_single_delay_returns_zero(self):
        assert repulsion_loss([5.0]) == 0.0

    def test_monotone_in_crowding(self):
        cfg = MatchConfig(repulsion_min_sep_ns=50.0)
        spread = repulsion_loss([0.0, 40.0], cfg)
        crowded = repulsion_loss([0.0, 10.0], cfg)
        assert crowded > spread

    @given(st.lists(st.floats(0.0, 500.0), min_size=2, max_size=6))
    def test_zero_iff_separated(self, delays):
        cfg = MatchConfig(repulsion_min_sep_ns=33.3)
        loss = repulsion_loss(delays, cfg)
        gaps = [abs(a - b) for a, b in itertools.combinations(delays, 2)]
        if min(gaps) >= cfg.repulsion_min_sep_ns:
            assert loss == 0.0
        else:
            assert loss > 0.0


class TestStage3:
    def frames(self):
        return [[(0.0, 0.0), (100.0, -6.0)], [(0.0, 0.0), (133.2, -9.0)]]

    def test_perfect_and_separated_is_zero(self):
        assert stage3_loss(self.frames(), self.frames()) == 0.0

    def test_alpha_zero_reduces_to_match(self):
        cfg = MatchConfig(repulsion_alpha=0.0)
        pred = [[(0.0, 0.0), (50.0, -6.0)]]
        truth = [[(0.0, 0.0), (100.0, -6.0)]]
        expected, _ = match_loss(pred[0], truth[0], cfg)
        assert stage3_loss(pred, truth, cfg) == pytest.approx(expected)

    def test_duplicate_delays_add_weighted_repulsion(self):
        cfg = MatchConfig(repulsion_alpha=2.0)
        truth = [[(0.0, 0.0), (100.0, -6.0)]]
        pred = [[(0.0, 0.0), (0.0, -6.0)]]
        base_match, _ = match_loss(pred[0], truth[0], cfg)
        rep = repulsion_loss([0.0, 0.0], cfg)
        assert stage3_loss(pred, truth, cfg) == pytest.approx(
            base_match + cfg.repulsion_alpha * rep)

    def test_frame_count_mismatch(self):
        with pytest.raises(ShapeError):
            stage3_loss(self.frames(), self.frames()[:1])
