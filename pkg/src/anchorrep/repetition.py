"""n-fold parallel repetition of a game.

The repeated game sends each player an n-tuple of questions drawn i.i.d. from
the base distribution and accepts iff the base predicate accepts in every
coordinate.  Question and answer labels of the repeated game are n-tuples of
base labels, so a repeated game is itself a ``Game`` and every exact routine
(validation, strategy evaluation, ``classical_value``) applies unchanged.

Materialization cost grows doubly exponentially, so ``repeat_game`` refuses
oversized products up front, and ``win_probability`` — the exact probability
that a strategy wins all coordinates in a subset C — works directly on the
base game without materializing anything.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

from .games import (
    AnchorSets,
    BudgetExceededError,
    DeterministicStrategy,
    Distribution,
    Game,
    GameValidationError,
    classical_value,
)

__all__ = ["repeat_game", "repeated_classical_value", "win_probability"]


def repeat_game(g: Game, n: int, *, limit: int = 10**7) -> Game:
    """The n-fold repetition of ``g``, materialized as an explicit ``Game``.

    The question distribution has one entry per n-tuple of base support
    atoms; alphabets are n-fold products.  ``limit`` bounds the total number
    of stored entries (support atoms plus alphabet labels) before any work
    happens.

    Raises:
        BudgetExceededError: when the materialization would exceed ``limit``.
    """
    if n < 1:
        raise GameValidationError(f"repetition count must be >= 1, got {n}")
    support = len(g.mu.support())
    entries = support**n + sum(len(a) ** n for a in g.questions) + sum(
        len(a) ** n for a in g.answers
    )
    if entries > limit:
        raise BudgetExceededError(
            f"materializing the {n}-fold repetition needs ~{entries} entries, "
            f"over the limit {limit}",
            size=entries,
        )

    questions = tuple(
        tuple(itertools.product(alphabet, repeat=n)) for alphabet in g.questions
    )
    answers = tuple(
        tuple(itertools.product(alphabet, repeat=n)) for alphabet in g.answers
    )

    acc: dict = {}
    for atoms in itertools.product(list(g.mu.support_items()), repeat=n):
        # atoms[i] = (x_i, w_i); the repeated question gives player t the
        # tuple of its coordinates across rounds.
        x_rep = tuple(tuple(atoms[i][0][t] for i in range(n)) for t in range(g.k))
        w = math.prod((a[1] for a in atoms), start=Fraction(1))
        acc[x_rep] = acc.get(x_rep, Fraction(0)) + w
    mu = Distribution(acc)

    base_pred = g.predicate
    k = g.k

    def predicate(x, a, _pred=base_pred, _n=n, _k=k):
        for i in range(_n):
            xi = tuple(x[t][i] for t in range(_k))
            ai = tuple(a[t][i] for t in range(_k))
            if not _pred(xi, ai):
                return False
        return True

    # Anchor structure does not carry over coordinate-wise (an n-tuple with a
    # single anchored round is neither fully anchored nor fully original), so
    # repeated games are emitted without an anchor declaration.
    return Game(k=k, questions=questions, answers=answers, mu=mu, predicate=predicate)


def repeated_classical_value(
    g: Game, n: int, *, budget: int | None = None, limit: int = 10**7
) -> tuple[Fraction, DeterministicStrategy]:
    """Exact classical value of the n-fold repetition (materialize + solve)."""
    return classical_value(repeat_game(g, n, limit=limit), budget=budget)


def win_probability(
    g: Game,
    n: int,
    strategy: DeterministicStrategy,
    rounds: tuple[int, ...] | None = None,
) -> Fraction:
    """Exact probability that ``strategy`` wins every round in ``rounds``.

    ``strategy`` is a deterministic strategy of the n-fold repetition (its
    maps take n-tuple questions to n-tuple answers).  ``rounds`` selects the
    0-based coordinates whose predicates must all accept; ``None`` means all
    n, and the empty tuple gives probability 1.

    The sum runs over the repeated question support (``support^n`` atoms), so
    this is exponential in n but does not materialize the repeated game.
    """
    if rounds is None:
        rounds = tuple(range(n))
    for i in rounds:
        if not 0 <= i < n:
            raise GameValidationError(f"round index {i} out of range for n={n}")
    rounds = tuple(sorted(set(rounds)))
    if not rounds:
        return Fraction(1)
    total = Fraction(0)
    support = list(g.mu.support_items())
    for atoms in itertools.product(support, repeat=n):
        x_rep = tuple(tuple(atoms[i][0][t] for i in range(n)) for t in range(g.k))
        a_rep = strategy.answers(x_rep)
        ok = True
        for i in rounds:
            xi = tuple(x_rep[t][i] for t in range(g.k))
            ai = tuple(a_rep[t][i] for t in range(g.k))
            if not g.predicate(xi, ai):
                ok = False
                break
        if ok:
            total += math.prod((a[1] for a in atoms), start=Fraction(1))
    return total
