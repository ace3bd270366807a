"""Finite one-round multiplayer games with exact rational scoring.

A game couples a question distribution over a product alphabet with a boolean
predicate on question/answer pairs.  Everything on the classical side is kept
in exact arithmetic (`fractions.Fraction`): the question distribution, values
of deterministic strategies, and the optimal classical value.  Floating point
enters only in the quantum and linear-programming modules.

Conventions used throughout the package:

* Players are indexed ``0..k-1``.
* A *label* is a string, or (for repeated games) a tuple of labels.  Question
  and answer tuples are plain Python tuples with one label per player.
* ``classical_value`` enumerates the first ``k-1`` players' deterministic
  strategies exhaustively and computes the last player's best response per
  question.  Ties are broken deterministically: the last player prefers the
  lowest answer index in alphabet order, and the first maximizing outer
  strategy in enumeration order is returned.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "AnchorSets",
    "BudgetExceededError",
    "DEFAULT_ENUMERATION_BUDGET",
    "BUDGET_ENV_VAR",
    "DeterministicStrategy",
    "Distribution",
    "Game",
    "GameValidationError",
    "ZeroMassError",
    "answer_space",
    "as_fraction",
    "classical_value",
    "eval_deterministic",
    "is_anchored",
    "question_space",
    "validate_game",
]

DEFAULT_ENUMERATION_BUDGET = 10**8
BUDGET_ENV_VAR = "REPREP_BUDGET"

# Largest common denominator for which the chunked int64 enumeration is safe:
# partial sums stay below den * (number of support atoms) < 2**62.
_INT64_SAFE_DEN = 2**48


class GameValidationError(ValueError):
    """A game, distribution, or strategy violates a structural contract."""


class ZeroMassError(ValueError):
    """Conditioning on an event of probability zero."""


class BudgetExceededError(RuntimeError):
    """An enumeration or materialization would exceed the configured budget.

    Attributes:
        size: the computed size of the work that was refused.
    """

    def __init__(self, message: str, size: int):
        super().__init__(message)
        self.size = size


def as_fraction(value) -> Fraction:
    """Coerce ints, Fractions and ``"num/den"`` strings to an exact Fraction.

    Floats are rejected: silent binary rounding has no place in the exact
    layer.  Use an explicit string or Fraction instead.
    """
    if isinstance(value, bool):
        raise GameValidationError(f"expected a rational, got bool {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise GameValidationError(f"malformed rational string {value!r}") from exc
    if isinstance(value, float):
        raise GameValidationError(
            f"floats are not exact; pass a Fraction or a 'num/den' string (got {value!r})"
        )
    raise GameValidationError(f"cannot interpret {value!r} as a rational")


class Distribution:
    """A finitely supported probability distribution with exact weights.

    Weights must be nonnegative Fractions summing to exactly 1.  Outcomes with
    zero weight may be listed (they are kept, e.g. questions that never occur
    but remain in the alphabet); unlisted outcomes have mass 0.
    """

    __slots__ = ("_pmf",)

    def __init__(self, pmf: Mapping | Iterable[tuple]):
        items = pmf.items() if isinstance(pmf, Mapping) else pmf
        acc: dict = {}
        for outcome, weight in items:
            w = as_fraction(weight)
            if w < 0:
                raise GameValidationError(f"negative weight {w} for outcome {outcome!r}")
            if outcome in acc:
                raise GameValidationError(f"duplicate outcome {outcome!r}")
            acc[outcome] = w
        total = sum(acc.values(), Fraction(0))
        if total != 1:
            raise GameValidationError(f"weights sum to {total}, expected exactly 1")
        self._pmf = acc

    def p(self, outcome) -> Fraction:
        return self._pmf.get(outcome, Fraction(0))

    def outcomes(self) -> tuple:
        return tuple(self._pmf)

    def items(self) -> Iterator[tuple]:
        return iter(self._pmf.items())

    def support(self) -> tuple:
        return tuple(o for o, w in self._pmf.items() if w > 0)

    def support_items(self) -> Iterator[tuple]:
        return ((o, w) for o, w in self._pmf.items() if w > 0)

    def restrict(self, keep: Callable) -> "Distribution":
        """Condition on the event ``keep(outcome)``; exact renormalization."""
        kept = [(o, w) for o, w in self._pmf.items() if w > 0 and keep(o)]
        total = sum((w for _, w in kept), Fraction(0))
        if total == 0:
            raise ZeroMassError("conditioning on an event of probability zero")
        return Distribution([(o, w / total) for o, w in kept])

    def push(self, fn: Callable) -> "Distribution":
        """Image distribution under ``fn`` (exact marginalization)."""
        acc: dict = {}
        for o, w in self._pmf.items():
            key = fn(o)
            acc[key] = acc.get(key, Fraction(0)) + w
        return Distribution(acc)

    @staticmethod
    def tensor(*dists: "Distribution") -> "Distribution":
        """Product distribution over tuples of outcomes."""
        acc: dict = {}
        for combo in itertools.product(*(d._pmf.items() for d in dists)):
            outcome = tuple(o for o, _ in combo)
            w = math.prod((w for _, w in combo), start=Fraction(1))
            acc[outcome] = acc.get(outcome, Fraction(0)) + w
        return Distribution(acc)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        keys = set(self._pmf) | set(other._pmf)
        return all(self.p(k) == other.p(k) for k in keys)

    def __hash__(self):
        return hash(frozenset((o, w) for o, w in self._pmf.items() if w > 0))

    def __len__(self) -> int:
        return len(self._pmf)

    def __repr__(self) -> str:
        inner = ", ".join(f"{o!r}: {w}" for o, w in list(self._pmf.items())[:4])
        more = ", ..." if len(self._pmf) > 4 else ""
        return f"Distribution({{{inner}{more}}})"


@dataclass(frozen=True)
class AnchorSets:
    """Per-player anchor question sets (one frozenset of labels per player)."""

    sets: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "sets", tuple(frozenset(s) for s in self.sets))


@dataclass(frozen=True, eq=False)
class DeterministicStrategy:
    """One answer map per player: question label -> answer label."""

    maps: tuple[Mapping, ...]

    def answers(self, x: tuple) -> tuple:
        return tuple(m[q] for m, q in zip(self.maps, x))

    def __eq__(self, other):
        if not isinstance(other, DeterministicStrategy):
            return NotImplemented
        return len(self.maps) == len(other.maps) and all(
            dict(a) == dict(b) for a, b in zip(self.maps, other.maps)
        )


@dataclass(frozen=True, eq=False)
class Game:
    """A k-player one-round game.

    Attributes:
        k: number of players (>= 2).
        questions: per-player question alphabets (ordered, duplicate-free).
        answers: per-player answer alphabets.
        mu: exact question distribution over k-tuples of question labels.
        predicate: total boolean map ``(question_tuple, answer_tuple) -> bool``.
        anchors: optional per-player anchor question sets.
    """

    k: int
    questions: tuple[tuple, ...]
    answers: tuple[tuple, ...]
    mu: Distribution
    predicate: Callable[[tuple, tuple], bool]
    anchors: AnchorSets | None = None

    def __post_init__(self):
        if self.k != len(self.questions) or self.k != len(self.answers):
            raise GameValidationError(
                f"k={self.k} but {len(self.questions)} question and "
                f"{len(self.answers)} answer alphabets"
            )


def question_space(g: Game) -> Iterator[tuple]:
    return itertools.product(*g.questions)


def answer_space(g: Game) -> Iterator[tuple]:
    return itertools.product(*g.answers)


def _check_label(label) -> bool:
    if isinstance(label, str):
        return True
    if isinstance(label, tuple):
        return all(_check_label(part) for part in label)
    return False


def validate_game(g: Game, *, predicate_sweep_limit: int = 10**7) -> None:
    """Check every structural contract of a game; raise with a precise message.

    The predicate is swept over the full question x answer product to verify
    totality (a partial predicate is an error, not an implicit 0).  Games whose
    product domain exceeds ``predicate_sweep_limit`` entries are refused.
    """
    if g.k < 2:
        raise GameValidationError(f"a game needs at least 2 players, got k={g.k}")
    for t, alphabet in enumerate(g.questions):
        _validate_alphabet(alphabet, f"player {t} questions")
    for t, alphabet in enumerate(g.answers):
        _validate_alphabet(alphabet, f"player {t} answers")
    qsets = [set(a) for a in g.questions]
    for x, w in g.mu.items():
        if not isinstance(x, tuple) or len(x) != g.k:
            raise GameValidationError(f"mu outcome {x!r} is not a {g.k}-tuple")
        for t, lab in enumerate(x):
            if lab not in qsets[t]:
                raise GameValidationError(
                    f"mu outcome {x!r}: label {lab!r} not in player {t}'s questions"
                )
    if g.anchors is not None:
        if len(g.anchors.sets) != g.k:
            raise GameValidationError("anchor sets must list one set per player")
        for t, s in enumerate(g.anchors.sets):
            extra = s - qsets[t]
            if extra:
                raise GameValidationError(
                    f"player {t} anchor labels {sorted(map(repr, extra))} not in alphabet"
                )
    domain = math.prod(len(a) for a in g.questions) * math.prod(len(a) for a in g.answers)
    if domain > predicate_sweep_limit:
        raise BudgetExceededError(
            f"predicate domain has {domain} entries, over the sweep limit "
            f"{predicate_sweep_limit}",
            size=domain,
        )
    for x in question_space(g):
        for a in answer_space(g):
            v = g.predicate(x, a)
            if not isinstance(v, (bool, int)) or v not in (0, 1, True, False):
                raise GameValidationError(
                    f"partial predicate: V({x!r}, {a!r}) returned {v!r}, expected a boolean"
                )


def _validate_alphabet(alphabet, what: str) -> None:
    if not alphabet:
        raise GameValidationError(f"{what}: alphabet is empty")
    if len(set(alphabet)) != len(alphabet):
        raise GameValidationError(f"{what}: duplicate labels")
    for lab in alphabet:
        if not _check_label(lab):
            raise GameValidationError(
                f"{what}: label {lab!r} must be a string or a tuple of labels"
            )


def eval_deterministic(g: Game, s: DeterministicStrategy) -> Fraction:
    """Exact expected predicate value of a deterministic strategy."""
    if len(s.maps) != g.k:
        raise GameValidationError(f"strategy has {len(s.maps)} maps for {g.k} players")
    total = Fraction(0)
    for x, w in g.mu.support_items():
        try:
            a = s.answers(x)
        except KeyError as exc:
            raise GameValidationError(f"strategy undefined on question {exc}") from exc
        if g.predicate(x, a):
            total += w
    return total


def _resolve_budget(budget: int | None) -> int:
    if budget is not None:
        return int(budget)
    env = os.environ.get(BUDGET_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise GameValidationError(
                f"{BUDGET_ENV_VAR}={env!r} is not an integer"
            ) from exc
    return DEFAULT_ENUMERATION_BUDGET


def _common_denominator(mu: Distribution) -> int:
    den = 1
    for _, w in mu.support_items():
        den = den * w.denominator // math.gcd(den, w.denominator)
    return den


def classical_value(
    g: Game, budget: int | None = None
) -> tuple[Fraction, DeterministicStrategy]:
    """Exact optimal classical value and an optimal deterministic strategy.

    Players ``0..k-2`` are enumerated exhaustively; player ``k-1`` plays the
    per-question best response (argmax of the conditional expected predicate
    value, lowest answer index on ties).  The first maximizing outer strategy
    in enumeration order is returned.  The enumeration order is
    ``itertools.product`` over (player, question) slots, players in order,
    questions in alphabet order, answers in alphabet order.

    The work estimate ``(#outer strategies) * |questions of player k-1|``
    counts enumerated (strategy, question) pairs and is checked against
    ``budget`` (default: the ``REPREP_BUDGET`` environment variable, else
    ``10**8``) before any work happens.

    Raises:
        BudgetExceededError: if the strategy space is too large; the exception
            carries the computed size.
    """
    budget = _resolve_budget(budget)
    k = g.k
    resp = k - 1
    qs = [list(a) for a in g.questions]
    ans = [list(a) for a in g.answers]

    slot_sizes: list[int] = []
    slot_of: dict[tuple[int, int], int] = {}
    for t in range(k - 1):
        for j in range(len(qs[t])):
            slot_of[(t, j)] = len(slot_sizes)
            slot_sizes.append(len(ans[t]))
    n_outer = math.prod(slot_sizes) if slot_sizes else 1
    cost = n_outer * len(qs[resp])
    if cost > budget:
        raise BudgetExceededError(
            f"best-response enumeration needs {cost} (strategy, question) pairs, "
            f"over the budget {budget}",
            size=cost,
        )

    q_index = [{q: i for i, q in enumerate(a)} for a in qs]
    n_ak = len(ans[resp])
    den = _common_denominator(g.mu)

    # Group support atoms by the responder's question.  Each atom carries the
    # slots its outer questions occupy and an integer payoff row per outer
    # answer combination: row[a_resp] = den * mu(x) * V(x, a).
    outer_combo_spaces = [range(len(ans[t])) for t in range(k - 1)]
    groups: list[list[tuple[tuple[int, ...], list[list[int]]]]] = [
        [] for _ in range(len(qs[resp]))
    ]
    n_atoms = 0
    for x, w in g.mu.support_items():
        n_atoms += 1
        xk_idx = q_index[resp][x[resp]]
        slots = tuple(slot_of[(t, q_index[t][x[t]])] for t in range(k - 1))
        num = int(w * den)
        rows = []
        for combo in itertools.product(*outer_combo_spaces):
            row = []
            for j in range(n_ak):
                a = tuple(ans[t][combo[t]] for t in range(k - 1)) + (ans[resp][j],)
                row.append(num if g.predicate(x, a) else 0)
            rows.append(row)
        groups[xk_idx].append((slots, rows))

    # Partial sums stay below den * n_atoms, so int64 is safe only then.
    if den * max(n_atoms, 1) < _INT64_SAFE_DEN:
        np_groups = [
            [(slots, np.array(rows, dtype=np.int64)) for slots, rows in atoms]
            for atoms in groups
        ]
        best_total, best_index = _scan_outer_numpy(np_groups, slot_sizes, n_outer, n_ak)
    else:
        best_total, best_index = _scan_outer_exact(groups, slot_sizes, n_outer, n_ak)

    outer_choice = (
        np.unravel_index(best_index, slot_sizes) if slot_sizes else ()
    )
    maps: list[dict] = []
    pos = 0
    for t in range(k - 1):
        m = {}
        for j, q in enumerate(qs[t]):
            m[q] = ans[t][int(outer_choice[pos])]
            pos += 1
        maps.append(m)

    # Recompute the responder's best response exactly (first max in answer
    # alphabet order) for the winning outer strategy.
    resp_map: dict = {}
    for xk_idx, q in enumerate(qs[resp]):
        sums = [0] * n_ak
        for slots, rows in groups[xk_idx]:
            combo_idx = 0
            for s in slots:
                combo_idx = combo_idx * slot_sizes[s] + int(outer_choice[s])
            row = rows[combo_idx]
            for j in range(n_ak):
                sums[j] += int(row[j])
        best_j = max(range(n_ak), key=lambda j: (sums[j], -j))
        resp_map[q] = ans[resp][best_j]
    maps.append(resp_map)

    strategy = DeterministicStrategy(tuple(maps))
    value = Fraction(best_total, den)
    # Exact cross-check of the assembled strategy against the scan result.
    if eval_deterministic(g, strategy) != value:
        raise AssertionError("best-response scan and strategy evaluation disagree")
    return value, strategy


def _scan_outer_numpy(groups, slot_sizes, n_outer, n_ak) -> tuple[int, int]:
    """Chunked int64 scan over outer strategies; returns (best, first index)."""
    chunk = 1 << 14
    best_total = -1
    best_index = 0
    for start in range(0, n_outer, chunk):
        stop = min(start + chunk, n_outer)
        idx = np.arange(start, stop, dtype=np.int64)
        if slot_sizes:
            fcols = np.stack(np.unravel_index(idx, slot_sizes), axis=1)
        else:
            fcols = np.zeros((len(idx), 0), dtype=np.int64)
        totals = np.zeros(len(idx), dtype=np.int64)
        for atoms in groups:
            acc = np.zeros((len(idx), n_ak), dtype=np.int64)
            for slots, rows in atoms:
                if slots:
                    combo = fcols[:, slots[0]].copy()
                    for s in slots[1:]:
                        combo *= slot_sizes[s]
                        combo += fcols[:, s]
                    acc += rows[combo]
                else:
                    acc += rows[0]
            totals += acc.max(axis=1)
        j = int(np.argmax(totals))
        if int(totals[j]) > best_total:
            best_total = int(totals[j])
            best_index = start + j
    return best_total, best_index


def _scan_outer_exact(groups, slot_sizes, n_outer, n_ak) -> tuple[int, int]:
    """Pure-Python big-int scan (fallback for huge denominators)."""
    best_total = -1
    best_index = 0
    for index, f in enumerate(itertools.product(*(range(s) for s in slot_sizes))):
        total = 0
        for atoms in groups:
            acc = [0] * n_ak
            for slots, rows in atoms:
                combo = 0
                for s in slots:
                    combo = combo * slot_sizes[s] + f[s]
                row = rows[combo]
                for j in range(n_ak):
                    acc[j] += row[j]
            total += max(acc)
        if total > best_total:
            best_total = total
            best_index = index
    return best_total, best_index


def _player_marginal(mu: Distribution, t: int) -> dict:
    acc: dict = {}
    for x, w in mu.items():
        acc[x[t]] = acc.get(x[t], Fraction(0)) + w
    return acc


def is_anchored(g: Game) -> tuple[bool, Fraction]:
    """Verify the declared anchor sets and report the anchor mass.

    Returns ``(flag, alpha_max)`` where ``alpha_max`` is the smallest
    per-player probability of hitting that player's anchor set, and ``flag``
    is True iff ``alpha_max > 0`` and the question distribution factorizes on
    every question tuple whose coordinates touch an anchor set: with
    ``F = {t : x_t in anchors[t]}``,

        mu(x) = mu(restriction of x off F) * prod_{t in F} mu_t(x_t).

    The scan is exact and covers the full question product, including tuples
    of probability zero.  A game without declared anchors reports
    ``(False, 0)``; discovery of anchor sets is out of scope.
    """
    if g.anchors is None:
        return False, Fraction(0)
    if len(g.anchors.sets) != g.k:
        raise GameValidationError("anchor sets must list one set per player")
    marginals = [_player_marginal(g.mu, t) for t in range(g.k)]
    alpha = min(
        sum((marginals[t].get(lab, Fraction(0)) for lab in g.anchors.sets[t]), Fraction(0))
        for t in range(g.k)
    )

    # Cache marginals of mu on each encountered coordinate subset.
    proj_cache: dict[tuple[int, ...], dict] = {}

    def projection_mass(coords: tuple[int, ...], values: tuple) -> Fraction:
        if coords not in proj_cache:
            acc: dict = {}
            for x, w in g.mu.items():
                key = tuple(x[t] for t in coords)
                acc[key] = acc.get(key, Fraction(0)) + w
            proj_cache[coords] = acc
        return proj_cache[coords].get(values, Fraction(0))

    factorizes = True
    for x in question_space(g):
        f_set = [t for t in range(g.k) if x[t] in g.anchors.sets[t]]
        if not f_set:
            continue
        rest = tuple(t for t in range(g.k) if t not in f_set)
        rhs = projection_mass(rest, tuple(x[t] for t in rest))
        for t in f_set:
            rhs *= marginals[t].get(x[t], Fraction(0))
        if g.mu.p(x) != rhs:
            factorizes = False
            break
    return (factorizes and alpha > 0), alpha
