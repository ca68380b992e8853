"""Contest primitives: success function, budgets, terminal rules, histories."""

import random

import pytest

from dynblotto import (
    ContestSpec,
    ContractError,
    CsfParams,
    History,
    InfeasibleHistoryError,
    InputError,
    Objective,
    check_history,
    csf_probability,
    history_from_winners,
    is_guaranteed_loser,
    remaining_budget,
    terminal_payoff,
    terminal_status,
    validate_spec,
)

WP = Objective.WIN_PROBABILITY


class TestValidateSpec:
    def test_example_contest_is_valid(self):
        spec = ContestSpec([2, 1, 1, 1], [100, 100])
        assert validate_spec(spec) == []

    def test_dictatorial_battle_is_flagged(self):
        spec = ContestSpec([5, 1, 1], [100, 100])
        violations = validate_spec(spec)
        assert violations == ["dictatorial battle 1"]

    def test_negative_budget_is_flagged(self):
        spec = ContestSpec([1, 1, 1], [-1, 100])
        assert any("negative budget" in v for v in validate_spec(spec))

    def test_boundary_value_is_dictatorial(self):
        # a battle worth exactly the rest combined still violates the strict rule
        spec = ContestSpec([1, 1, 1, 3], [100, 100])
        assert validate_spec(spec) == ["dictatorial battle 4"]

    def test_violations_are_data_not_errors(self):
        spec = ContestSpec([5, 1, 1], [100, 100])  # constructs fine
        assert spec.m == 3

    def test_structural_problems_raise(self):
        with pytest.raises(InputError):
            ContestSpec([1, 1], [100])  # one player
        with pytest.raises(InputError):
            ContestSpec([], [100, 100])  # no battles
        with pytest.raises(InputError):
            ContestSpec([1, 1], [100, 100], shocks={(5, 1): 1.0})


class TestCsfProbability:
    def test_nobody_spends_splits_uniformly(self):
        assert csf_probability((0, 0, 0), CsfParams(2.0, 7.0), 0) == pytest.approx(1 / 3)

    def test_equal_spends_split_evenly(self):
        assert csf_probability((50, 50), CsfParams(), 0) == pytest.approx(0.5)

    def test_exponent_two_scale_five(self):
        # beta cancels; 1 / (1 + 4)
        assert csf_probability((1, 2), CsfParams(2.0, 5.0), 0) == pytest.approx(0.2)

    def test_probabilities_sum_to_one(self):
        rng = random.Random(11)
        for _ in range(200):
            n = rng.choice([2, 3, 4, 5])
            w = [rng.uniform(0, 10) if rng.random() > 0.2 else 0.0 for _ in range(n)]
            params = CsfParams(rng.uniform(0.3, 3.0), rng.uniform(0.1, 9.0))
            total = sum(csf_probability(w, params, i) for i in range(n))
            assert abs(total - 1.0) <= 1e-12

    def test_invariant_to_beta_and_common_scaling(self):
        rng = random.Random(12)
        for _ in range(100):
            n = rng.choice([2, 3, 4])
            w = [rng.uniform(0.01, 10) for _ in range(n)]
            alpha = rng.uniform(0.3, 3.0)
            c = rng.uniform(0.01, 50.0)
            base = csf_probability(w, CsfParams(alpha, 1.0), 0)
            rescaled = csf_probability([c * x for x in w], CsfParams(alpha, 7.5), 0)
            assert rescaled == pytest.approx(base, abs=1e-12)

    def test_bad_inputs_raise(self):
        with pytest.raises(InputError):
            csf_probability((-1.0, 2.0), CsfParams(), 0)
        with pytest.raises(InputError):
            csf_probability((float("nan"), 2.0), CsfParams(), 0)
        with pytest.raises(InputError):
            csf_probability((1.0, 2.0), CsfParams(), 5)

    def test_bad_params_raise(self):
        with pytest.raises(InputError):
            CsfParams(0.0, 1.0)
        with pytest.raises(InputError):
            CsfParams(1.0, -2.0)


class TestRemainingBudget:
    def test_fresh_contest(self):
        spec = ContestSpec([1, 1, 1], [100, 100])
        assert remaining_budget(spec, History(), 0) == 100.0

    def test_after_equal_first_battle(self):
        spec = ContestSpec([1, 1, 1], [100, 100], objective=WP)
        h = History().extend((100 / 3, 100 / 3), 0)
        assert remaining_budget(spec, h, 0) == pytest.approx(200 / 3)
        assert remaining_budget(spec, h, 1) == pytest.approx(200 / 3)

    def test_negative_shock_clamps_at_zero(self):
        spec = ContestSpec([1, 1], [10, 10], shocks={(0, 2): -5.0})
        h = History().extend((10.0, 3.0), 0)
        assert remaining_budget(spec, h, 0) == 0.0

    def test_upcoming_shock_included_later_excluded(self):
        spec = ContestSpec([1, 1, 1], [10, 10], shocks={(0, 2): 4.0, (0, 3): 100.0})
        h = History().extend((2.0, 2.0), 0)
        # after battle 1: 10 + 4 - 2, the battle-3 shock invisible
        assert remaining_budget(spec, h, 0) == pytest.approx(12.0)

    def test_positive_shock_can_recover_a_negative_ledger(self):
        spec = ContestSpec([1, 1, 1], [10, 10], shocks={(0, 2): -5.0, (0, 3): 9.0})
        h = History().extend((10.0, 1.0), 0)
        assert remaining_budget(spec, h, 0) == 0.0
        h2 = h.extend((0.0, 1.0), 1)
        assert remaining_budget(spec, h2, 0) == pytest.approx(4.0)

    def test_guaranteed_loser_reads_zero(self):
        spec = ContestSpec([3, 3, 1, 1], [90, 90, 90], objective=WP)
        h = history_from_winners(spec, (0, 1))
        assert remaining_budget(spec, h, 2) == 0.0
        assert remaining_budget(spec, h, 1) > 0.0

    def test_nonincreasing_and_nonnegative(self):
        rng = random.Random(13)
        spec = ContestSpec([1, 2, 1, 1], [30, 70])
        h = History()
        previous = [remaining_budget(spec, h, i) for i in range(2)]
        for _ in range(4):
            spend = [rng.uniform(0, remaining_budget(spec, h, i) / 2) for i in range(2)]
            h = h.extend(spend, rng.randrange(2))
            current = [remaining_budget(spec, h, i) for i in range(2)]
            for before, after in zip(previous, current):
                assert 0.0 <= after <= before + 1e-12
            previous = current


class TestTerminalStatus:
    def test_big_early_lead_ends_the_contest(self):
        spec = ContestSpec([2, 1, 1, 1], [100, 100], objective=WP)
        h = history_from_winners(spec, (0, 0))
        status = terminal_status(spec, h)
        assert status.terminal and status.winners == (0,)

    def test_split_continues_to_the_last_battle(self):
        spec = ContestSpec([1, 1, 1], [100, 100], objective=WP)
        h = history_from_winners(spec, (0, 1))
        assert not terminal_status(spec, h).terminal

    def test_full_length_history_is_terminal(self):
        spec = ContestSpec([1, 1, 1], [100, 100])
        h = history_from_winners(spec, (0, 1, 0))
        assert terminal_status(spec, h).terminal

    def test_lead_equal_to_remaining_value_does_not_clinch(self):
        spec = ContestSpec([1, 1, 1, 3], [100, 100], objective=WP)
        h = history_from_winners(spec, (0, 0, 0))  # lead 3, remaining 3
        assert not terminal_status(spec, h).terminal

    def test_expected_value_never_ends_early(self):
        spec = ContestSpec([2, 1, 1, 1], [100, 100])
        h = history_from_winners(spec, (0, 0))
        assert not terminal_status(spec, h).terminal


class TestTerminalPayoff:
    def test_tied_full_contest_splits_the_prize(self):
        spec = ContestSpec([1, 1, 1, 1], [100, 100], objective=WP)
        h = history_from_winners(spec, (0, 1, 0, 1))
        assert terminal_payoff(spec, h) == (0.5, 0.5)

    def test_expected_value_payoffs_are_won_values(self):
        spec = ContestSpec([1, 1, 1], [100, 100])
        h = history_from_winners(spec, (0, 1, 1))
        assert terminal_payoff(spec, h) == (1.0, 2.0)

    def test_sweep_takes_everything(self):
        spec = ContestSpec([2, 1, 1], [60, 60, 60])
        h = history_from_winners(spec, (0, 0, 0))
        assert terminal_payoff(spec, h) == (4.0, 0.0, 0.0)

    def test_nonterminal_history_raises(self):
        spec = ContestSpec([1, 1, 1], [100, 100])
        with pytest.raises(ContractError):
            terminal_payoff(spec, history_from_winners(spec, (0,)))

    def test_payoff_components_sum_correctly(self):
        rng = random.Random(14)
        for _ in range(50):
            n = rng.choice([2, 3])
            m = rng.choice([2, 3, 4])
            objective = rng.choice([Objective.EXPECTED_VALUE, WP])
            values = [rng.uniform(0.5, 3.0) for _ in range(m)]
            spec = ContestSpec(values, [rng.uniform(1, 50) for _ in range(n)], objective=objective)
            h = History()
            while not terminal_status(spec, h).terminal:
                spends = [remaining_budget(spec, h, i) / (spec.m - len(h)) for i in range(n)]
                h = h.extend(spends, rng.randrange(n))
            total = sum(terminal_payoff(spec, h))
            expected = 1.0 if objective is WP else sum(values)
            assert abs(total - expected) <= 1e-12


class TestGuaranteedLoser:
    def test_tie_reachable_is_not_losing(self):
        spec = ContestSpec([1, 1, 1, 3], [100, 100], objective=WP)
        h = history_from_winners(spec, (0, 0, 0))
        assert not is_guaranteed_loser(spec, h, 1)

    def test_chaser_with_enough_left_is_not_losing(self):
        spec = ContestSpec([2, 1, 1, 1], [100, 100], objective=WP)
        h = history_from_winners(spec, (0,))
        assert not is_guaranteed_loser(spec, h, 1)

    def test_third_player_out_of_reach(self):
        # leaders split the two big battles; the third player cannot even tie
        spec = ContestSpec([3, 3, 1, 1], [90, 90, 90], objective=WP)
        h = history_from_winners(spec, (0, 1))
        assert is_guaranteed_loser(spec, h, 2)
        assert not is_guaranteed_loser(spec, h, 0)
        # oracle: no continuation puts player 2 among the leaders
        for w3 in range(3):
            for w4 in range(3):
                totals = [3.0, 3.0, 0.0]
                totals[w3] += 1.0
                totals[w4] += 1.0
                assert totals[2] < max(totals[0], totals[1])

    def test_expected_value_objective_rejected(self):
        spec = ContestSpec([1, 1], [10, 10])
        with pytest.raises(ContractError):
            is_guaranteed_loser(spec, History(), 0)


class TestCheckHistory:
    def test_feasible_history_passes(self):
        spec = ContestSpec([1, 1, 1], [100, 100])
        check_history(spec, history_from_winners(spec, (0, 1)))

    def test_overspending_is_infeasible(self):
        spec = ContestSpec([1, 1], [10, 10])
        h = History().extend((10.5, 2.0), 0)
        with pytest.raises(InfeasibleHistoryError):
            check_history(spec, h)

    def test_tiny_float_slack_is_tolerated(self):
        spec = ContestSpec([1, 1], [10, 10])
        h = History().extend((10.0 + 1e-12, 2.0), 0)
        check_history(spec, h)

    def test_battle_after_the_contest_ended(self):
        spec = ContestSpec([2, 1, 1, 1], [100, 100], objective=WP)
        h = history_from_winners(spec, (0, 0))
        bad = h.extend((1.0, 1.0), 1)
        with pytest.raises(InfeasibleHistoryError):
            check_history(spec, bad)

    def test_winner_out_of_range(self):
        spec = ContestSpec([1, 1], [10, 10])
        with pytest.raises(InfeasibleHistoryError):
            check_history(spec, History().extend((1.0, 1.0), 7))

    def test_too_long_history(self):
        spec = ContestSpec([1], [10, 10])
        h = History().extend((1.0, 1.0), 0).extend((1.0, 1.0), 1)
        with pytest.raises(InfeasibleHistoryError):
            check_history(spec, h)


class TestHistory:
    def test_winner_schedule_and_spent(self):
        h = History().extend((3.0, 4.0), 1).extend((1.0, 0.5), 0)
        assert h.winner_schedule() == (1, 0)
        assert h.spent(0) == pytest.approx(4.0)
        assert h.spent(1) == pytest.approx(4.5)

    def test_won_values(self):
        spec = ContestSpec([2, 1], [10, 10])
        h = history_from_winners(spec, (1, 1))
        assert h.won_values(spec) == (0.0, 3.0)

    def test_histories_compare_by_records(self):
        a = History().extend((1.0, 2.0), 0)
        b = History().extend((1.0, 2.0), 0)
        assert a == b and hash(a) == hash(b)
        assert a != b.extend((0.5, 0.5), 1)
