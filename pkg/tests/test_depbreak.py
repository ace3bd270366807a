"""Dependency-breaking tables: builders, verifiers, rounding.

The heavy cross-checks here are oracle-based: Pr(W_C) against the repetition
module's independent enumeration, per-round marginals against the base
distribution, the two-player three-branch sum recomputed from raw conditional
masses, and the trivial TV-invariance identity on random rational inputs.
"""

import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorrep import depbreak as db
from anchorrep.fixtures import anchored_chsh, chsh, cube_anchored_game, free_game
from anchorrep.games import (
    BudgetExceededError,
    DeterministicStrategy,
    Distribution,
    Game,
    GameValidationError,
    ZeroMassError,
    classical_value,
    eval_deterministic,
)
from anchorrep.repetition import repeated_classical_value, win_probability

BOT = db.BOT


def product_strategy(g: Game, n: int, single: DeterministicStrategy) -> DeterministicStrategy:
    """Play ``single`` independently in every round."""
    maps = []
    for t in range(g.k):
        m = {}
        for q in itertools.product(g.questions[t], repeat=n):
            m[q] = tuple(single.maps[t][lab] for lab in q)
        maps.append(m)
    return DeterministicStrategy(tuple(maps))


def mixing_strategy(g: Game, n: int) -> DeterministicStrategy:
    """A deliberately cross-round-correlated strategy: each round's answer is
    the parity of all non-anchor coordinates seen by that player."""
    maps = []
    for t in range(g.k):
        m = {}
        for q in itertools.product(g.questions[t], repeat=n):
            parity = sum(1 for lab in q if lab in ("1",)) % 2
            m[q] = tuple(str(parity) for _ in range(n))
        maps.append(m)
    return DeterministicStrategy(tuple(maps))


@pytest.fixture(scope="module")
def chsh_anchored():
    return anchored_chsh()


@pytest.fixture(scope="module")
def chsh_n2_table(chsh_anchored):
    _, strategy = repeated_classical_value(chsh_anchored, 2)
    return db.build_table_multi(chsh_anchored, 2, (1,), strategy)


class TestBasics:
    def test_collapse(self, chsh_anchored):
        anchors = chsh_anchored.anchors
        assert db.collapse(("0", "1"), anchors) == ("0", "1")
        assert db.collapse((BOT, "1"), anchors) == (BOT, "1")
        assert db.collapse((BOT, BOT), anchors) == (BOT, BOT)

    def test_tv_distance_frozen(self):
        p = Distribution({0: F(1, 2), 1: F(1, 2)})
        q = Distribution({0: F(1, 4), 1: F(1, 4), 2: F(1, 2)})
        assert db.tv_distance(p, q) == F(1, 2)
        assert db.tv_distance(p, p) == 0

    def test_rational_cbrt(self):
        assert db.rational_cbrt(F(27, 64)) == F(3, 4)
        assert db.rational_cbrt(F(1)) == 1
        assert db.rational_cbrt(F(0)) == 0
        assert db.rational_cbrt(F(2)) is None
        assert db.rational_cbrt(F(9, 16)) is None
        with pytest.raises(GameValidationError):
            db.rational_cbrt(F(-1, 8))

    def test_trivial_lemma_handmade(self):
        q = Distribution({0: F(1, 2), 1: F(1, 2)})
        s = Distribution({0: F(1, 4), 1: F(3, 4)})
        kernel = {
            0: Distribution({"g0": F(1, 3), "g1": F(2, 3)}),
            1: Distribution({"g0": F(1)}),
        }
        lhs, rhs, equal = db.check_trivial_lemma(q, s, kernel)
        assert equal
        assert lhs == rhs == F(1, 4)

    def test_trivial_lemma_requires_kernel_on_support(self):
        q = Distribution({0: F(1)})
        s = Distribution({0: F(1, 2), 1: F(1, 2)})
        with pytest.raises(GameValidationError):
            db.check_trivial_lemma(q, s, {0: Distribution({"g": F(1)})})

    @given(
        qw=st.lists(st.integers(1, 9), min_size=3, max_size=3),
        sw=st.lists(st.integers(1, 9), min_size=3, max_size=3),
        kw=st.lists(st.integers(1, 9), min_size=6, max_size=6),
    )
    @settings(max_examples=60, deadline=None)
    def test_trivial_lemma_property(self, qw, sw, kw):
        q = Distribution({i: F(w, sum(qw)) for i, w in enumerate(qw)})
        s = Distribution({i: F(w, sum(sw)) for i, w in enumerate(sw)})
        kernel = {
            i: Distribution(
                {
                    "u": F(kw[2 * i], kw[2 * i] + kw[2 * i + 1]),
                    "v": F(kw[2 * i + 1], kw[2 * i] + kw[2 * i + 1]),
                }
            )
            for i in range(3)
        }
        lhs, rhs, equal = db.check_trivial_lemma(q, s, kernel)
        assert equal and lhs == rhs


class TestMultiTable:
    def test_n1_empty_c_marginal_is_mu(self, chsh_anchored):
        value, single = classical_value(chsh_anchored)
        strategy = product_strategy(chsh_anchored, 1, single)
        table = db.build_table_multi(chsh_anchored, 1, (), strategy)
        marginal = table.pmf(lambda a: a.x[0])
        for x, w in chsh_anchored.mu.items():
            assert marginal.get(x, F(0)) == w
        assert table.pr_win() == 1  # W is vacuous for C = ∅
        assert table.delta() == 0.0

    def test_pr_win_matches_repetition_module(self, chsh_anchored, chsh_n2_table):
        # Independent oracle: enumerate the repeated game directly.
        expected = win_probability(
            chsh_anchored, 2, chsh_n2_table.strategy, rounds=(1,)
        )
        assert chsh_n2_table.pr_win() == expected
        assert chsh_n2_table.delta() > 0

    def test_atom_weights_are_exact_and_sum_to_one(self, chsh_n2_table):
        total = sum((a.weight for a in chsh_n2_table.atoms), F(0))
        assert total == 1
        assert all(isinstance(a.weight, F) for a in chsh_n2_table.atoms)

    def test_rejects_unanchored_game(self):
        g = chsh()
        _, s = repeated_classical_value(g, 1)
        with pytest.raises(GameValidationError):
            db.build_table_multi(g, 1, (), s)

    def test_rejects_full_c_and_bad_rounds(self, chsh_anchored):
        value, single = classical_value(chsh_anchored)
        s = product_strategy(chsh_anchored, 2, single)
        with pytest.raises(GameValidationError):
            db.build_table_multi(chsh_anchored, 2, (0, 1), s)
        with pytest.raises(GameValidationError):
            db.build_table_multi(chsh_anchored, 2, (5,), s)

    def test_budget_guard(self, chsh_anchored):
        value, single = classical_value(chsh_anchored)
        s = product_strategy(chsh_anchored, 2, single)
        with pytest.raises(BudgetExceededError) as exc:
            db.build_table_multi(chsh_anchored, 2, (1,), s, limit=10)
        assert exc.value.size == 9 * 9 * 2

    def test_zero_win_probability_rejected(self, chsh_anchored):
        g = Game(
            k=2,
            questions=chsh_anchored.questions,
            answers=chsh_anchored.answers,
            mu=chsh_anchored.mu,
            predicate=lambda x, a: False,
            anchors=chsh_anchored.anchors,
        )
        value, single = classical_value(g)
        s = product_strategy(g, 2, single)
        with pytest.raises(ZeroMassError):
            db.build_table_multi(g, 2, (1,), s)

    def test_pmf_zero_mass_conditioning_raises(self, chsh_n2_table):
        with pytest.raises(ZeroMassError):
            chsh_n2_table.pmf(lambda a: a.x, lambda a: False)


class TestLocalSampling:
    def test_exact_zero_two_player(self, chsh_n2_table):
        row = db.check_local_sampling(chsh_n2_table)
        assert row.lhs == 0
        assert row.status == "ok"
        assert row.exact

    def test_exact_zero_three_player(self):
        from anchorrep.anchoring import anchor_transform
        from anchorrep.fixtures import ghz_parity

        g = anchor_transform(ghz_parity(), F(1, 3))
        value, single = classical_value(g)
        strategy = product_strategy(g, 2, single)
        table = db.build_table_multi(g, 2, (1,), strategy)
        row = db.check_local_sampling(table)
        assert row.lhs == 0
        assert row.status == "ok"

    def test_rejects_twoplayer_kind(self):
        g = cube_anchored_game(F(3, 4), F(2, 3))
        _, single = classical_value(g)
        s = product_strategy(g, 1, single)
        table = db.build_table_twoplayer(g, 1, (), s)
        with pytest.raises(GameValidationError):
            db.check_local_sampling(table)


class TestHolensteinSuite:
    def test_all_rows_hold_n2(self, chsh_n2_table):
        rows = db.verify_holenstein_bounds(chsh_n2_table)
        names = [r.name for r in rows]
        for expected in (
            "round-marginal-stability",
            "question-reconstruction",
            "collapsed-question-decoupling",
            "collapse-insensitivity",
            "anchor-conditioning",
        ):
            assert expected in names
        # k=2, one free round: S ∈ {∅, {0}, {1}} with t outside gives 4 rows.
        subs = [r for r in rows if r.name.startswith("anchor-substitution-step")]
        assert len(subs) == 4
        for r in rows:
            assert r.status == "ok", f"{r.name}: lhs={r.lhs} rhs={r.rhs}"
            assert float(r.slack) >= 0
        for r in subs:
            assert r.exact
            assert isinstance(r.lhs, F) and isinstance(r.rhs, F)

    def test_all_rows_hold_n3_correlated(self, chsh_anchored):
        strategy = mixing_strategy(chsh_anchored, 3)
        table = db.build_table_multi(chsh_anchored, 3, (2,), strategy)
        rows = db.verify_holenstein_bounds(table)
        subs = [r for r in rows if r.name.startswith("anchor-substitution-step")]
        assert len(subs) == 4 * 2  # two free rounds
        for r in rows:
            assert r.status == "ok", f"{r.name}: lhs={r.lhs} rhs={r.rhs}"
        # The correlated strategy must actually produce nonzero skew somewhere,
        # otherwise this test exercises nothing.
        assert any(r.lhs > 0 for r in rows)

    def test_rejects_twoplayer_table(self):
        g = cube_anchored_game(F(3, 4), F(2, 3))
        _, single = classical_value(g)
        s = product_strategy(g, 1, single)
        table = db.build_table_twoplayer(g, 1, (), s)
        with pytest.raises(GameValidationError):
            db.verify_holenstein_bounds(table)


@pytest.fixture(scope="module")
def cube():
    return cube_anchored_game(F(3, 4), F(2, 3))


@pytest.fixture(scope="module")
def cube_strategy(cube):
    _, single = classical_value(cube)
    return product_strategy(cube, 2, single)


@pytest.fixture(scope="module")
def cube_table(cube, cube_strategy):
    return db.build_table_twoplayer(cube, 2, (1,), cube_strategy)


class TestTwoPlayerTable:
    def test_exact_mode_and_keep_probabilities(self, cube_table):
        assert cube_table.exact
        assert cube_table.p_keep == (F(3, 4), F(2, 3))

    def test_marginal_reconstruction_exact(self, cube_table):
        rows = db.check_marginal_reconstruction(cube_table)
        assert len(rows) == 2
        for r in rows:
            assert r.status == "ok"
            assert r.lhs == 0

    def test_pr_win_matches_repetition_module(self, cube, cube_strategy, cube_table):
        expected = win_probability(cube, 2, cube_strategy, rounds=(1,))
        assert cube_table.pr_win() == expected

    def test_three_branch_sum_oracle(self, cube):
        """Conditional on D_i = A, summing the ⊥ branch, the keep branch, and
        the resample-to-anchor branch reproduces μ(x, y) — recomputed here
        from raw conditional masses, then compared against the table."""
        _, single = classical_value(cube)
        strategy = product_strategy(cube, 1, single)
        table = db.build_table_twoplayer(cube, 1, (), strategy)
        p = F(3, 4)
        mu = cube.mu
        anchors_a = cube.anchors.sets[0]

        def marg_a(x):
            return sum((w for q, w in mu.items() if q[0] == x), F(0))

        def marg_b(y):
            return sum((w for q, w in mu.items() if q[1] == y), F(0))

        def cond_b_given_a(y, x):
            num = sum((w for q, w in mu.items() if q == (x, y)), F(0))
            return num / marg_a(x)

        anchor_mass = sum(marg_a(x) for x in cube.questions[0] if x in anchors_a)
        non_anchor_mass = 1 - anchor_mass

        def m_weight(xp):
            if xp in anchors_a:
                return p * (1 - p) * marg_a(xp) / anchor_mass
            return p * p * marg_a(xp) / non_anchor_mass

        cond_a = table.pmf(lambda a: a.x[0], lambda a: a.d[0] == "A")
        for x in cube.questions[0]:
            for y in cube.questions[1]:
                anchor_draw = (
                    marg_a(x) / anchor_mass if x in anchors_a else F(0)
                )
                branch_bot = (1 - p) * anchor_draw * marg_b(y)
                branch_keep = (
                    m_weight(x) * p * cond_b_given_a(y, x) if marg_a(x) > 0 else F(0)
                )
                branch_resample = sum(
                    (
                        m_weight(xp) * (1 - p) * anchor_draw * cond_b_given_a(y, xp)
                        for xp in cube.questions[0]
                        if marg_a(xp) > 0
                    ),
                    F(0),
                )
                total = branch_bot + branch_keep + branch_resample
                assert total == mu.p((x, y))
                assert cond_a.get((x, y), F(0)) == total

    def test_float_mode_tolerance(self, cube, cube_strategy):
        table = db.build_table_twoplayer(
            cube, 2, (1,), cube_strategy, force_float=True
        )
        assert not table.exact
        for r in db.check_marginal_reconstruction(table):
            assert r.status == "ok"
            assert r.lhs <= 1e-12

    def test_irrational_cube_root_goes_float(self, chsh_anchored):
        # 1 - anchor mass = 3/4 has no rational cube root.
        value, single = classical_value(chsh_anchored)
        s = product_strategy(chsh_anchored, 1, single)
        table = db.build_table_twoplayer(chsh_anchored, 1, (), s)
        assert not table.exact
        for r in db.check_marginal_reconstruction(table):
            assert r.status == "ok"

    def test_degenerate_all_anchor(self):
        # Every question is an anchor: keep probability collapses to zero and
        # the ⊥ branch carries everything.
        g = free_game()
        value, single = classical_value(g)
        s = product_strategy(g, 1, single)
        table = db.build_table_twoplayer(g, 1, (), s)
        assert table.exact
        assert table.p_keep == (0, 0)
        for r in db.check_marginal_reconstruction(table):
            assert r.status == "ok"
            assert r.lhs == 0

    def test_skew_rows_are_reports(self, cube_table):
        rows = db.check_twoplayer_skew(cube_table)
        assert [r.name for r in rows] == [
            "round-skew-under-conditioning",
            "question-pair-reconstruction",
            "anchor-pair-conditioning",
            "pair-product-relaxation",
        ]
        for r in rows:
            assert r.status == "report"
            assert 0 <= float(r.lhs) <= 1
            assert float(r.rhs) > 0

    def test_entangled_hook_consistency(self, cube, cube_strategy, cube_table):
        class HookStrategy:
            """Deterministic behaviour exposed through the stochastic hook."""

            def __init__(self, det):
                self.det = det

            def answer_distribution_on(self, x_vec, y_vec, coords):
                a = self.det.maps[0][x_vec]
                b = self.det.maps[1][y_vec]
                return {tuple((a[j], b[j]) for j in coords): 1.0}

        hook = db.build_table_twoplayer(cube, 2, (1,), HookStrategy(cube_strategy))
        assert not hook.exact
        assert abs(hook.pr_win() - float(cube_table.pr_win())) < 1e-9

    def test_rejects_k3_and_bad_strategy(self, cube):
        from anchorrep.anchoring import anchor_transform
        from anchorrep.fixtures import ghz_parity

        g3 = anchor_transform(ghz_parity(), F(1, 3))
        value, single = classical_value(g3)
        s3 = product_strategy(g3, 1, single)
        with pytest.raises(GameValidationError):
            db.build_table_twoplayer(g3, 1, (), s3)
        with pytest.raises(GameValidationError):
            db.build_table_twoplayer(cube, 1, (), object())


class TestRounding:
    def test_n1_empty_c_value_equals_round_win(self, chsh_anchored):
        value, single = classical_value(chsh_anchored)
        strategy = product_strategy(chsh_anchored, 1, single)
        table = db.build_table_multi(chsh_anchored, 1, (), strategy)
        rs = db.rounding_strategy_multi(table, 0)
        assert rs.exact_value() == value == F(55, 64)
        row = db.verify_rounding_gap(table, 0)
        assert row.status == "ok"
        assert row.lhs == row.rhs == F(55, 64)

    def test_gap_inequality_exact_n2(self, chsh_anchored, chsh_n2_table):
        row = db.verify_rounding_gap(chsh_n2_table, 0)
        assert row.status == "ok"
        assert isinstance(row.lhs, F) and isinstance(row.rhs, F)
        rs = db.rounding_strategy_multi(chsh_n2_table, 0)
        best, _ = classical_value(chsh_anchored)
        assert rs.exact_value() <= best

    def test_gap_inequality_correlated_n3(self, chsh_anchored):
        strategy = mixing_strategy(chsh_anchored, 3)
        table = db.build_table_multi(chsh_anchored, 3, (2,), strategy)
        for i in table.free:
            row = db.verify_rounding_gap(table, i)
            assert row.status == "ok", f"round {i}: lhs={row.lhs} rhs={row.rhs}"
        best, _ = classical_value(chsh_anchored)
        assert db.rounding_strategy_multi(table, 0).exact_value() <= best

    def test_sampled_strategy_is_playable(self, chsh_anchored, chsh_n2_table):
        rs = db.rounding_strategy_multi(chsh_n2_table, 0, shared_sample_seed=11)
        assert rs.sampled is not None
        v = eval_deterministic(chsh_anchored, rs.sampled)
        assert 0 <= v <= 1

    def test_anchor_event_unreachable(self, chsh_anchored):
        g = Game(
            k=2,
            questions=chsh_anchored.questions,
            answers=chsh_anchored.answers,
            mu=chsh_anchored.mu,
            predicate=lambda x, a: a == ("1", "1"),
            anchors=chsh_anchored.anchors,
        )
        maps = []
        for t in range(2):
            m = {}
            for q in itertools.product(g.questions[t], repeat=2):
                first_answer = "0"
                second = "1" if q[0] != BOT else "0"
                m[q] = (first_answer, second)
            maps.append(m)
        strategy = DeterministicStrategy(tuple(maps))
        table = db.build_table_multi(g, 2, (1,), strategy)
        with pytest.raises(ZeroMassError, match="anchor event unreachable"):
            db.rounding_strategy_multi(table, 0)

    def test_rejects_non_free_round(self, chsh_n2_table):
        with pytest.raises(GameValidationError):
            db.rounding_strategy_multi(chsh_n2_table, 1)
