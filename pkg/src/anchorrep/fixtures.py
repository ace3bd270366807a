"""Named example games used by the test-suite and the command line.

Each builder returns a fresh, fully validated ``Game``.  The registry at the
bottom maps the CLI's ``--game`` names to builders.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from .anchoring import anchor_transform, anchor_transform_general
from .games import AnchorSets, Distribution, Game, GameValidationError

__all__ = [
    "BUILTIN_GAMES",
    "anchored_chsh",
    "build_fixture",
    "chsh",
    "cube_anchored_game",
    "free_game",
    "ghz_parity",
    "tiny_rigged",
]

F = Fraction


def chsh() -> Game:
    """The standard two-player XOR game on uniform bit pairs."""
    qs = ("0", "1")
    mu = Distribution({(x, y): F(1, 4) for x in qs for y in qs})

    def pred(x, a):
        return (int(a[0]) ^ int(a[1])) == (int(x[0]) & int(x[1]))

    return Game(k=2, questions=(qs, qs), answers=(qs, qs), mu=mu, predicate=pred)


def anchored_chsh(alpha=F(1, 4)) -> Game:
    """CHSH with a fresh anchor question added at probability ``alpha``."""
    return anchor_transform(chsh(), alpha)


def ghz_parity() -> Game:
    """Three players, uniform even-parity question triples, XOR = OR predicate."""
    qs = ("0", "1")
    support = [
        x for x in itertools.product(qs, repeat=3) if sum(map(int, x)) % 2 == 0
    ]
    mu = Distribution({x: F(1, len(support)) for x in support})

    def pred(x, a):
        want = int(x[0]) | int(x[1]) | int(x[2])
        return (int(a[0]) ^ int(a[1]) ^ int(a[2])) == want

    return Game(
        k=3,
        questions=(qs, qs, qs),
        answers=(qs, qs, qs),
        mu=mu,
        predicate=pred,
    )


def free_game() -> Game:
    """A two-player game with a product question distribution.

    Free games are anchored with every question serving as an anchor; the
    builder declares the full alphabets as anchor sets accordingly.
    """
    qa = ("0", "1")
    mu = Distribution.tensor(
        Distribution({"0": F(1, 3), "1": F(2, 3)}),
        Distribution({"0": F(1, 2), "1": F(1, 2)}),
    )

    def pred(x, a):
        return (int(a[0]) | int(a[1])) == (int(x[0]) ^ int(x[1]))

    return Game(
        k=2,
        questions=(qa, qa),
        answers=(qa, qa),
        mu=mu,
        predicate=pred,
        anchors=AnchorSets((frozenset(qa), frozenset(qa))),
    )


def tiny_rigged(alpha=F(1, 2)) -> Game:
    """A losing one-question game, anchored; repetition values in closed form.

    The base game has a single question pair and no accepting answers, so its
    value is 0 and the anchored value is ``1 - (1-alpha)^2 = 2a - a^2``.  The
    anchored game wins exactly when at least one player draws the anchor,
    independently across repetitions, so ``val(anchored^n) = (2a - a^2)^n``:
    a rare case where the repeated value is known in closed form and small
    enough to verify by full enumeration.
    """
    base = Game(
        k=2,
        questions=(("q",), ("q",)),
        answers=(("z",), ("0", "1")),
        mu=Distribution({("q", "q"): F(1)}),
        predicate=lambda x, a: False,
    )
    return anchor_transform(base, alpha)


def cube_anchored_game(ratio_a: Fraction, ratio_b: Fraction, *, seed: int = 7) -> Game:
    """An anchored two-player game whose anchor masses are perfect cubes.

    ``ratio_a`` and ``ratio_b`` (rationals in (0, 1)) give the per-player
    probability of keeping the original question, chosen so that
    ``1 - anchor_mass = ratio**3`` has an exact rational cube root — the
    regime where downstream dependency-breaking tables stay in exact
    arithmetic.  The base game's question distribution is correlated and
    seeded, so distinct seeds yield distinct fixtures.
    """
    rng = random.Random(seed)
    qa = ("0", "1")
    weights = [rng.randint(1, 5) for _ in range(4)]
    total = sum(weights)
    mu = Distribution(
        {
            (x, y): F(w, total)
            for (x, y), w in zip(itertools.product(qa, qa), weights)
        }
    )
    bits = [rng.randint(0, 1) for _ in range(16)]

    def pred(x, a, _bits=tuple(bits)):
        idx = (int(x[0]) * 2 + int(x[1])) * 4 + int(a[0]) * 2 + int(a[1])
        return bool(_bits[idx])

    base = Game(k=2, questions=(qa, qa), answers=(qa, qa), mu=mu, predicate=pred)
    alphas = [1 - ratio_a**3, 1 - ratio_b**3]
    for a in alphas:
        if not 0 < a < 1:
            raise GameValidationError(f"keep-ratio {ratio_a}, {ratio_b} out of range")
    anchor_dists = [Distribution({"⊥": F(1)}), Distribution({"⊥": F(1)})]
    return anchor_transform_general(base, alphas, anchor_dists)


BUILTIN_GAMES = {
    "chsh": chsh,
    "anchored-chsh": anchored_chsh,
    "ghz-parity": ghz_parity,
    "free": free_game,
    "tiny-rigged": tiny_rigged,
}


def build_fixture(name: str) -> Game:
    try:
        builder = BUILTIN_GAMES[name]
    except KeyError:
        raise GameValidationError(
            f"unknown builtin game {name!r}; choose from {sorted(BUILTIN_GAMES)}"
        ) from None
    return builder()
