"""Game protocol: capital accounting, the run loop, warmup, and causality."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqbet.errors import DomainError, StrategyViolationError, UsageError
from seqbet.game import (
    GameState,
    MovementSeries,
    capital_step,
    checkpoint_rounds,
    clamp_ratio,
    log_capital,
    run_game,
)

ratios_st = st.floats(-0.99, 0.99, allow_nan=False)
moves_st = st.floats(-1.0, 1.0, allow_nan=False)


class TestCapitalStep:
    def test_direct_substitution(self):
        assert capital_step(1.0, 0.5, 0.2) == pytest.approx(1.1, rel=1e-15)

    def test_zero_bet_leaves_capital_unchanged(self):
        assert capital_step(1.0, 0.0, -0.9) == 1.0

    def test_short_bet(self):
        assert capital_step(2.0, -0.5, 1.0) == pytest.approx(1.0, rel=1e-15)

    @pytest.mark.parametrize("alpha", [1.0, -1.0, 1.5, float("nan")])
    def test_rejects_bad_ratio(self, alpha):
        with pytest.raises(DomainError, match="ratio"):
            capital_step(1.0, alpha, 0.0)

    @pytest.mark.parametrize("x", [1.0001, -2.0, float("nan")])
    def test_rejects_bad_movement(self, x):
        with pytest.raises(DomainError, match="movement"):
            capital_step(1.0, 0.0, x)

    def test_rejects_nonpositive_capital(self):
        with pytest.raises(DomainError, match="capital"):
            capital_step(0.0, 0.1, 0.1)

    @given(ratios_st, moves_st, st.floats(1e-6, 1e6))
    def test_stays_positive(self, alpha, x, capital):
        assert capital_step(capital, alpha, x) > 0.0


class TestGameState:
    def test_round_zero_capital_is_exactly_one(self):
        state = GameState()
        assert state.capital == 1.0
        assert state.round == 0

    def test_log_matches_capital(self):
        state = GameState()
        for alpha, x in [(0.5, 0.2), (-0.3, 0.9), (0.8, -0.5)]:
            state = state.advance(alpha, x)
            assert state.log_capital == pytest.approx(math.log(state.capital), abs=1e-12)
        assert state.round == 3


class TestLogCapital:
    def test_no_betting(self):
        assert log_capital([0, 0, 0], np.array([0.3, -0.5, 1.0])) == 0.0

    def test_single_round(self):
        # log(1.1), direct evaluation
        assert log_capital([0.5], [0.2]) == pytest.approx(0.09531017980432493, abs=1e-12)

    def test_two_rounds(self):
        # log(1.5) + log(0.5) = log(0.75)
        assert log_capital([0.5, 0.5], [1.0, -1.0]) == pytest.approx(
            -0.2876820724517809, abs=1e-12
        )

    def test_length_mismatch(self):
        with pytest.raises(UsageError, match="match"):
            log_capital([0.5], [0.2, 0.3])

    @given(st.lists(st.tuples(ratios_st, moves_st), min_size=1, max_size=50))
    def test_matches_product_form(self, pairs):
        ratios = [a for a, _ in pairs]
        moves = [x for _, x in pairs]
        product = math.prod(1.0 + a * x for a, x in pairs)
        assert log_capital(ratios, moves) == pytest.approx(math.log(product), abs=1e-10)


class TestMovementSeries:
    def test_rejects_out_of_range(self):
        with pytest.raises(DomainError):
            MovementSeries(np.array([0.0, 1.2]))

    def test_rejects_non_finite(self):
        with pytest.raises(DomainError):
            MovementSeries(np.array([0.0, np.nan]))

    def test_len_and_label(self):
        ms = MovementSeries([0.1, -0.2], label="src")
        assert len(ms) == 2 and ms.label == "src"


class TestRunGame:
    def test_zero_strategy_zero_path(self, rng):
        ms = MovementSeries(rng.uniform(-1, 1, 40))
        res = run_game(lambda n, past: 0.0, ms, warmup=0)
        assert np.array_equal(res.log_capital_path, np.zeros(40))

    def test_warmup_suppresses_betting(self):
        ms = MovementSeries(np.array([1.0, 1.0, 1.0]))
        res = run_game(lambda n, past: 0.5, ms, warmup=2)
        assert res.ratios[0] == res.ratios[1] == 0.0
        np.testing.assert_allclose(
            res.log_capital_path, [0.0, 0.0, math.log(1.5)], atol=1e-12
        )

    def test_constant_ratio_run(self):
        # alpha = 0.1 on (0.5, -0.5): direct evaluation, cross-checked
        ms = MovementSeries(np.array([0.5, -0.5]))
        res = run_game(lambda n, past: 0.1, ms, warmup=0)
        expected = -0.0025031302181185294
        assert res.final_log_capital == pytest.approx(expected, abs=1e-12)
        assert res.final_log_capital == pytest.approx(
            log_capital(res.ratios, ms), abs=1e-12
        )

    def test_out_of_range_ratio_names_round(self):
        ms = MovementSeries(np.array([0.1, 0.1, 0.1]))
        with pytest.raises(StrategyViolationError, match="round 2"):
            run_game(lambda n, past: 1.5 if n == 2 else 0.0, ms, warmup=0)

    def test_series_not_longer_than_warmup(self):
        with pytest.raises(UsageError):
            run_game(lambda n, past: 0.0, MovementSeries([0.1, 0.2]), warmup=2)

    def test_callback_sees_only_the_past(self):
        seen = {}
        ms = MovementSeries(np.array([0.1, -0.2, 0.3, -0.4]))

        def strategy(n, past):
            seen[n] = np.array(past)
            return 0.0

        run_game(strategy, ms, warmup=1)
        assert list(seen) == [2, 3, 4]
        np.testing.assert_array_equal(seen[2], [0.1])
        np.testing.assert_array_equal(seen[4], [0.1, -0.2, 0.3])

    def test_truncated_replay_matches(self, rng):
        # Perturbing x_m for m >= n never changes alpha_n.
        values = rng.uniform(-1, 1, 30)
        perturbed = values.copy()
        perturbed[20:] = rng.uniform(-1, 1, 10)

        def momentum(n, past):
            return clamp_ratio(0.5 * past[-1])

        full = run_game(momentum, MovementSeries(values), warmup=1)
        other = run_game(momentum, MovementSeries(perturbed), warmup=1)
        np.testing.assert_array_equal(full.ratios[:20], other.ratios[:20])

    @given(st.lists(st.tuples(ratios_st, moves_st), min_size=1, max_size=40))
    @settings(max_examples=50)
    def test_log_path_telescopes(self, pairs):
        ratios = [a for a, _ in pairs]
        ms = MovementSeries(np.array([x for _, x in pairs]))
        res = run_game(lambda n, past: ratios[n - 1], ms, warmup=0)
        prev = 0.0
        for i, (alpha, x) in enumerate(pairs):
            assert res.log_capital_path[i] - prev == pytest.approx(
                math.log1p(alpha * x), abs=1e-12
            )
            prev = res.log_capital_path[i]
        # capital stays positive for any admissible inputs
        assert np.all(np.isfinite(res.log_capital_path))


class TestCheckpoints:
    def test_standard_marks(self):
        assert checkpoint_rounds(300) == [100, 200, 300]

    def test_short_run_uses_final_round(self):
        assert checkpoint_rounds(50) == [50]

    def test_intermediate(self):
        assert checkpoint_rounds(250) == [100, 200, 250]

    def test_run_game_checkpoint_values(self, rng):
        ms = MovementSeries(rng.uniform(-0.5, 0.5, 320))
        res = run_game(lambda n, past: 0.1, ms, warmup=20)
        assert set(res.checkpoints) == {100, 200, 300}
        assert res.checkpoints[100] == res.log_capital_path[119]
        assert res.checkpoints[300] == res.log_capital_path[319]
