"""Anchoring transform and parallel-repetition decay bounds.

``anchor_transform`` maps a game G to its anchored variant: each player's
question is independently replaced by a fresh anchor symbol with probability
alpha, and the predicate accepts outright whenever any player holds the
anchor.  The transform is exact (Fraction weights) and records the singleton
anchor sets on the output, so ``is_anchored`` verifies it by construction.

The closed-form relation between the two game values,

    val(G_anchored) = 1 - (1 - alpha)^k * (1 - val(G)),

is exposed as ``predicted_value`` and doubles as an oracle in the tests: the
transform and the formula are computed by disjoint code paths.

``classical_decay_bound`` and ``quantum_decay_reference`` evaluate the
exponential upper bounds on the value of the n-fold repetition of an anchored
game.  They are plain formula evaluations — the inputs (anchor mass, gap to 1,
answer bits) are the caller's responsibility — and use log base 2 throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .games import (
    AnchorSets,
    Distribution,
    Game,
    GameValidationError,
    as_fraction,
)

__all__ = [
    "DecayBoundParams",
    "anchor_transform",
    "anchor_transform_general",
    "answer_bits",
    "classical_decay_bound",
    "predicted_value",
    "quantum_decay_reference",
]


def anchor_transform(g: Game, alpha, bot: str = "⊥") -> Game:
    """Anchored variant of ``g`` with symmetric anchor probability ``alpha``.

    Each player's question alphabet gains the fresh symbol ``bot``; with
    probability ``alpha``, independently per player, the player's question is
    replaced by ``bot``.  The predicate accepts whenever any coordinate equals
    ``bot`` and defers to ``g.predicate`` otherwise.  ``alpha`` must be a
    rational in (0, 1).
    """
    a = as_fraction(alpha)
    if not 0 < a < 1:
        raise GameValidationError(f"anchor probability must be in (0,1), got {a}")
    per_player = [Distribution({bot: a, "": 1 - a}) for _ in range(g.k)]
    anchor_dists = [Distribution({bot: Fraction(1)})] * g.k
    return _anchored(g, per_player, anchor_dists, {bot})


def anchor_transform_general(
    g: Game,
    alphas: list,
    anchor_dists: list[Distribution],
) -> Game:
    """Anchored variant with per-player anchor probabilities and alphabets.

    Player ``t`` keeps their question with probability ``1 - alphas[t]`` and
    otherwise draws a fresh anchor symbol from ``anchor_dists[t]`` (whose
    outcomes must be disjoint from every original question alphabet).  The
    predicate accepts whenever any player holds one of their anchor symbols.
    """
    if len(alphas) != g.k or len(anchor_dists) != g.k:
        raise GameValidationError("need one anchor probability and alphabet per player")
    fracs = [as_fraction(a) for a in alphas]
    for a in fracs:
        if not 0 < a < 1:
            raise GameValidationError(f"anchor probability must be in (0,1), got {a}")
    fresh = set()
    for d in anchor_dists:
        fresh.update(d.outcomes())
    per_player = []
    for t, (a, d) in enumerate(zip(fracs, anchor_dists)):
        pmf = {sym: a * d.p(sym) for sym in d.outcomes()}
        pmf[""] = 1 - a
        per_player.append(Distribution(pmf))
    return _anchored(g, per_player, anchor_dists, fresh)


def _anchored(
    g: Game,
    per_player: list[Distribution],
    anchor_dists: list[Distribution],
    fresh: set,
) -> Game:
    """Shared construction: mix ``g.mu`` with per-player anchor draws.

    ``per_player[t]`` gives the law of player t's replacement draw, with the
    empty string standing for "keep the original question".
    """
    if "" in fresh:
        raise GameValidationError("the empty string cannot serve as an anchor symbol")
    for t, alphabet in enumerate(g.questions):
        clash = fresh & set(alphabet)
        if clash:
            raise GameValidationError(
                f"anchor symbols {sorted(map(repr, clash))} already appear in "
                f"player {t}'s question alphabet"
            )

    questions = tuple(
        tuple(alphabet) + tuple(s for s in anchor_dists[t].outcomes())
        for t, alphabet in enumerate(g.questions)
    )
    anchor_sets = AnchorSets(
        tuple(frozenset(anchor_dists[t].outcomes()) for t in range(g.k))
    )

    # mu'(x') = sum over original x consistent with the kept coordinates of
    # mu(x) * prod_t (replacement mass at x'_t).  Expanding per support atom
    # of mu over the 2^k keep/replace patterns is exact and cheap.
    acc: dict = {}
    for x, w in g.mu.support_items():
        for pattern in itertools.product(*(per_player[t].support() for t in range(g.k))):
            x2 = tuple(x[t] if pattern[t] == "" else pattern[t] for t in range(g.k))
            mass = w
            for t in range(g.k):
                mass *= per_player[t].p(pattern[t])
            acc[x2] = acc.get(x2, Fraction(0)) + mass
    mu2 = Distribution(acc)

    base_pred = g.predicate
    anchor_lookup = tuple(frozenset(d.outcomes()) for d in anchor_dists)

    def predicate(x, a, _base=base_pred, _anchors=anchor_lookup):
        if any(x[t] in _anchors[t] for t in range(len(x))):
            return True
        return bool(_base(x, a))

    return Game(
        k=g.k,
        questions=questions,
        answers=g.answers,
        mu=mu2,
        predicate=predicate,
        anchors=anchor_sets,
    )


def predicted_value(base_value, alpha, k: int):
    """Closed-form value of the symmetric anchored game.

    Works polymorphically: Fractions in, Fraction out; floats in, float out.
    """
    return 1 - (1 - alpha) ** k * (1 - base_value)


def answer_bits(g: Game) -> float:
    """log2 of the joint answer alphabet size."""
    size = math.prod(len(a) for a in g.answers)
    return math.log2(size)


@dataclass(frozen=True)
class DecayBoundParams:
    """Inputs to the repetition decay bounds.

    Attributes:
        k: number of players.
        alpha: anchor probability (the per-player mass of the anchor set).
        eps: gap to perfection, ``1 - val(G)`` for the anchored game.
        s: answer bits, ``log2`` of the joint answer alphabet size.
        n: number of parallel repetitions.
    """

    k: int
    alpha: float
    eps: float
    s: float
    n: int

    def __post_init__(self):
        if self.k < 2:
            raise GameValidationError(f"k must be >= 2, got {self.k}")
        if not 0 < float(self.alpha) <= 1:
            raise GameValidationError(f"alpha must be in (0,1], got {self.alpha}")
        if not 0 < float(self.eps) <= 1:
            raise GameValidationError(f"eps must be in (0,1], got {self.eps}")
        if float(self.s) <= 0:
            raise GameValidationError(f"answer bits must be positive, got {self.s}")
        if self.n < 1:
            raise GameValidationError(f"n must be >= 1, got {self.n}")


def classical_decay_bound(p: DecayBoundParams) -> float:
    """Exponential decay bound for classical strategies.

    exp(- alpha^(2k) * eps^3 * n / (384 * s * k^2)).
    """
    a = float(p.alpha)
    exponent = (a ** (2 * p.k)) * float(p.eps) ** 3 * p.n / (384.0 * float(p.s) * p.k**2)
    return math.exp(-exponent)


def quantum_decay_reference(p: DecayBoundParams, c: float) -> float:
    """Reference decay curve for entangled strategies of two-player games.

    exp(- c * alpha^16 * eps^8 * n / s) with a caller-supplied constant c > 0.
    The constant is not pinned by this package; pass the value you want to
    plot or compare against.
    """
    if p.k != 2:
        raise GameValidationError("the entangled reference curve is for k=2 only")
    if not c > 0:
        raise GameValidationError(f"constant must be positive, got {c}")
    a = float(p.alpha)
    exponent = c * a**16 * float(p.eps) ** 8 * p.n / float(p.s)
    return math.exp(-exponent)
