"""Non-signaling value of a game via linear programming.

A non-signaling box assigns to every question tuple a distribution over
answer tuples such that, for each player, marginalizing out that player's
answer yields a distribution that does not depend on that player's question.
Imposing this per player is enough: iterating the single-player condition
gives independence for every subset of players.

The optimum over boxes is a finite LP — variables p(a|x) over the full
question/answer product (zero-mass questions included, since the constraints
couple them to the rest), normalization per question, and the per-player
marginal equalities.  scipy's HiGHS solver does the work; the result is a
float upper bound on both the classical and the entangled value.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linprog

from .games import BudgetExceededError, Game

__all__ = ["nonsignaling_value"]

# Dense constraint matrices: refuse problems whose matrix would be huge.
_MAX_DENSE_ENTRIES = 5 * 10**7


def nonsignaling_value(g: Game) -> float:
    """Maximum winning probability over non-signaling boxes (float, HiGHS)."""
    xs = list(itertools.product(*g.questions))
    as_ = list(itertools.product(*g.answers))
    nx, na = len(xs), len(as_)
    n_vars = nx * na
    x_index = {x: i for i, x in enumerate(xs)}
    a_index = {a: i for i, a in enumerate(as_)}

    def var(xi: int, ai: int) -> int:
        return xi * na + ai

    rows = []
    rhs = []

    # Normalization: sum_a p(a|x) = 1.
    for xi in range(nx):
        row = np.zeros(n_vars)
        row[xi * na : (xi + 1) * na] = 1.0
        rows.append(row)
        rhs.append(1.0)

    # Per-player non-signaling: for player t, others' answer marginal at
    # (x_-t, x_t) equals the one at (x_-t, first question of t).
    for t in range(g.k):
        others_q = [g.questions[u] for u in range(g.k) if u != t]
        others_a = [g.answers[u] for u in range(g.k) if u != t]
        base_q = g.questions[t][0]
        for x_rest in itertools.product(*others_q):
            for q in g.questions[t][1:]:
                x_hi = _splice(x_rest, t, q)
                x_lo = _splice(x_rest, t, base_q)
                for a_rest in itertools.product(*others_a):
                    row = np.zeros(n_vars)
                    for at in g.answers[t]:
                        ai = a_index[_splice(a_rest, t, at)]
                        row[var(x_index[x_hi], ai)] += 1.0
                        row[var(x_index[x_lo], ai)] -= 1.0
                    rows.append(row)
                    rhs.append(0.0)

    if n_vars * len(rows) > _MAX_DENSE_ENTRIES:
        raise BudgetExceededError(
            f"non-signaling LP needs a {len(rows)}x{n_vars} dense constraint "
            f"matrix, over the {_MAX_DENSE_ENTRIES}-entry limit",
            size=n_vars * len(rows),
        )

    c = np.zeros(n_vars)
    for xi, x in enumerate(xs):
        w = float(g.mu.p(x))
        if w == 0.0:
            continue
        for ai, a in enumerate(as_):
            if g.predicate(x, a):
                c[var(xi, ai)] -= w  # linprog minimizes

    res = linprog(
        c,
        A_eq=np.array(rows),
        b_eq=np.array(rhs),
        bounds=(0.0, 1.0),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"non-signaling LP failed: {res.message}")
    return -float(res.fun)


def _splice(rest: tuple, t: int, value) -> tuple:
    return rest[:t] + (value,) + rest[t:]
