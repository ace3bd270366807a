"""Parallel repetition: materialization, exact values, and win probabilities."""

import itertools
from fractions import Fraction

import pytest

from anchorrep.fixtures import anchored_chsh, chsh, tiny_rigged
from anchorrep.games import (
    BudgetExceededError,
    DeterministicStrategy,
    GameValidationError,
    classical_value,
    eval_deterministic,
    validate_game,
)
from anchorrep.repetition import repeat_game, repeated_classical_value, win_probability

F = Fraction


class TestRepeatGame:
    def test_structure_n2(self):
        g2 = repeat_game(chsh(), 2)
        validate_game(g2)
        assert g2.k == 2
        assert len(g2.questions[0]) == 4
        assert len(g2.answers[0]) == 4
        assert g2.mu.p((("0", "1"), ("1", "0"))) == F(1, 16)

    def test_n1_equals_base_distribution(self):
        g1 = repeat_game(chsh(), 1)
        base = chsh()
        for x, w in base.mu.items():
            assert g1.mu.p(tuple((lab,) for lab in x)) == w

    def test_predicate_requires_all_rounds(self):
        g2 = repeat_game(chsh(), 2)
        # Round 0 wins (0&0=0, 0^0=0), round 1 loses (1&1=1 but 0^0=0).
        x = (("0", "1"), ("0", "1"))
        assert not g2.predicate(x, (("0", "0"), ("0", "0")))
        # Flip one answer in round 1 so both accept.
        assert g2.predicate(x, (("0", "1"), ("0", "0")))

    def test_limit_guard(self):
        with pytest.raises(BudgetExceededError):
            repeat_game(chsh(), 12)

    def test_rejects_bad_n(self):
        with pytest.raises(GameValidationError):
            repeat_game(chsh(), 0)


class TestRepeatedValue:
    def test_chsh_two_fold_frozen(self):
        # Exhaustively solved: the two-fold CHSH value is 10/16 = 5/8,
        # strictly above the square of the single-shot value (9/16).
        val, strat = repeated_classical_value(chsh(), 2)
        assert val == F(10, 16)
        g2 = repeat_game(chsh(), 2)
        assert eval_deterministic(g2, strat) == val

    def test_sandwich_bounds(self):
        base, _ = classical_value(chsh())
        val2, _ = repeated_classical_value(chsh(), 2)
        assert base**2 <= val2 <= base

    def test_tiny_rigged_closed_form(self):
        # The anchored losing game wins iff some player draws the anchor, so
        # the n-fold value is (2a - a^2)^n for every n.
        g = tiny_rigged(F(1, 2))
        single, _ = classical_value(g)
        assert single == F(3, 4)
        for n in (1, 2, 3):
            val, _ = repeated_classical_value(g, n)
            assert val == F(3, 4) ** n


class TestWinProbability:
    def test_empty_round_set_is_one(self):
        strat = _constant_strategy(chsh(), 2)
        assert win_probability(chsh(), 2, strat, rounds=()) == 1

    def test_all_rounds_matches_materialized_eval(self):
        g = chsh()
        strat = _winning_chsh_strategy(2)
        direct = win_probability(g, 2, strat)
        assert direct == eval_deterministic(repeat_game(g, 2), strat)

    def test_single_round_marginal(self):
        # A strategy that plays a single-round optimal answer in round 0 and
        # garbage in round 1 wins round 0 with the single-shot probability.
        g = chsh()
        base_val, base_strat = classical_value(g)
        maps = []
        for t in range(2):
            m = {}
            for q in itertools.product(g.questions[t], repeat=2):
                good = base_strat.maps[t][q[0]]
                m[q] = (good, "0" if t == 0 else "1")
            maps.append(m)
        strat = DeterministicStrategy(tuple(maps))
        assert win_probability(g, 2, strat, rounds=(0,)) == base_val

    def test_out_of_range_round(self):
        strat = _constant_strategy(chsh(), 2)
        with pytest.raises(GameValidationError):
            win_probability(chsh(), 2, strat, rounds=(2,))

    def test_anchored_rounds_intersect(self):
        # For the anchored CHSH with an all-constant strategy, winning round i
        # includes all anchor draws; the intersection over two rounds is the
        # product only if the strategy's per-round behaviour is independent,
        # which holds for constant maps.
        g = anchored_chsh(F(1, 4))
        strat = _constant_strategy(g, 2)
        p0 = win_probability(g, 2, strat, rounds=(0,))
        p1 = win_probability(g, 2, strat, rounds=(1,))
        both = win_probability(g, 2, strat, rounds=(0, 1))
        assert both == p0 * p1


def _constant_strategy(g, n):
    maps = []
    for t in range(g.k):
        first = g.answers[t][0]
        maps.append(
            {q: (first,) * n for q in itertools.product(g.questions[t], repeat=n)}
        )
    return DeterministicStrategy(tuple(maps))


def _winning_chsh_strategy(n):
    g = chsh()
    _, base = classical_value(g)
    maps = []
    for t in range(2):
        m = {}
        for q in itertools.product(g.questions[t], repeat=n):
            m[q] = tuple(base.maps[t][qi] for qi in q)
        maps.append(m)
    return DeterministicStrategy(tuple(maps))
