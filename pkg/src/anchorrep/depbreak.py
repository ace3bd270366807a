"""Dependency-breaking tables for repeated anchored games, with verifiers.

Conditioned on the right auxiliary variable, the players' questions in a
repeated game become independent across players — that is what makes
round-by-round rounding arguments work.  This module builds the full joint
distribution of (questions, auxiliary variable, answers-on-C, win flag) as an
explicit table of atoms, for two constructions:

* ``build_table_multi`` — for k >= 2 players: per free round, a uniformly
  random (k-1)-subset ``D_i`` of players is revealed together with those
  players' *collapsed* questions (anchor labels are identified with a single
  symbol ⊥).  Exact rational arithmetic; deterministic strategies only.

* ``build_table_twoplayer`` — the two-player anchor-weighted variant: per
  free round a fair coin ``D_i`` picks a side, and ``M_i`` is either the bare
  anchor symbol or an "anchor-or-x" value drawn with weights built from
  ``p = (1 - anchor mass)^(1/3)``; the revealed side's question is then
  resampled and the other side's question drawn from its conditional given
  the revealed value.  Stays rational when both cube roots are rational and
  the strategy is deterministic, otherwise runs in floats.  Entangled
  strategies plug in through an ``answer_distribution_on`` hook.

On top of the tables sit the verifiers: the local-sampling product-form check
(an exact-zero total-variation identity), the suite of conditioned-
distribution inequalities with recorded slacks, the two-player marginal
reconstruction, and the rounding construction that extracts a single-round
strategy and verifies the win-probability gap inequality exactly.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple

from .games import (
    AnchorSets,
    BudgetExceededError,
    DeterministicStrategy,
    Distribution,
    Game,
    GameValidationError,
    ZeroMassError,
    is_anchored,
)

__all__ = [
    "BOT",
    "Atom",
    "CheckRow",
    "DepBreakTable",
    "RoundedStrategy",
    "build_table_multi",
    "build_table_twoplayer",
    "check_local_sampling",
    "check_marginal_reconstruction",
    "check_trivial_lemma",
    "check_twoplayer_skew",
    "collapse",
    "rational_cbrt",
    "rounding_strategy_multi",
    "tv_distance",
    "verify_holenstein_bounds",
    "verify_rounding_gap",
]

BOT = "⊥"

DEFAULT_TABLE_LIMIT = 3 * 10**6


def collapse(x: tuple, anchors: AnchorSets) -> tuple:
    """Coordinatewise collapse: anchor labels map to ⊥, others to themselves."""
    return tuple(
        BOT if lab in anchors.sets[t] else lab for t, lab in enumerate(x)
    )


def tv_distance(p: Distribution, q: Distribution):
    """Total variation distance between two finitely supported distributions."""
    keys = set(p.outcomes()) | set(q.outcomes())
    total = sum((abs(p.p(k) - q.p(k)) for k in keys), Fraction(0))
    return total / 2


def _tv_dict(p: dict, q: dict):
    """TV distance between two pmf dicts (Fraction- or float-valued)."""
    total = 0
    for k in p.keys() | q.keys():
        total += abs(p.get(k, 0) - q.get(k, 0))
    return total / 2


def _normalize(d: dict) -> dict:
    total = sum(d.values())
    return {k: v / total for k, v in d.items()}


def check_trivial_lemma(q: Distribution, s: Distribution, kernel: dict) -> tuple:
    """Prepending a shared kernel leaves the total variation unchanged.

    ``kernel`` maps each outcome ``f`` of the two distributions to a
    ``Distribution`` over ``g``.  Returns ``(lhs, rhs, equal)`` where ``lhs``
    is the TV between the two (f, g) joints and ``rhs`` the TV between the
    originals.
    """
    outcomes = set(q.outcomes()) | set(s.outcomes())
    for f in set(q.support()) | set(s.support()):
        if f not in kernel:
            raise GameValidationError(f"kernel undefined on outcome {f!r}")
    joint_q: dict = {}
    joint_s: dict = {}
    for f in outcomes:
        if f not in kernel:
            continue
        for g_out, w in kernel[f].items():
            joint_q[(f, g_out)] = q.p(f) * w
            joint_s[(f, g_out)] = s.p(f) * w
    lhs = _tv_dict(joint_q, joint_s)
    rhs = tv_distance(q, s)
    return lhs, rhs, lhs == rhs


def rational_cbrt(value: Fraction) -> Fraction | None:
    """Exact cube root of a nonnegative rational, or None when irrational."""
    if value < 0:
        raise GameValidationError(f"cube root of negative value {value}")
    num, den = value.numerator, value.denominator
    rn = round(num ** (1 / 3)) if num else 0
    rd = round(den ** (1 / 3))
    for cn in (rn - 1, rn, rn + 1):
        for cd in (rd - 1, rd, rd + 1):
            if cn >= 0 and cd > 0 and cn**3 == num and cd**3 == den:
                return Fraction(cn, cd)
    return None


class Atom(NamedTuple):
    """One outcome of the joint table.

    weight: probability mass (Fraction in exact mode, float otherwise).
    x: question matrix — an n-tuple of per-round question tuples.
    d: per free round (ascending), the revealed side — a tuple of included
       player indices for the multiplayer table, "A"/"B" for the two-player
       table.
    m: per free round, the revealed value (collapsed question tuple of the
       included players; ("⊥",) or ("⊥/", label) for the two-player table).
    z: per round of C (ascending), that round's answer tuple.
    win: whether the strategy's answers satisfy the predicate on all of C.
    """

    weight: object
    x: tuple
    d: tuple
    m: tuple
    z: tuple
    win: bool


@dataclass(frozen=True)
class CheckRow:
    """One verified or reported (in)equality."""

    name: str
    lhs: object
    rhs: object
    status: str  # "ok" | "violated" | "report"
    exact: bool

    @property
    def slack(self):
        return self.rhs - self.lhs


class DepBreakTable:
    """Exact (or float) joint pmf over (X, D, M, Z, W) for a fixed strategy."""

    def __init__(
        self,
        *,
        game: Game,
        kind: str,
        n: int,
        C: tuple[int, ...],
        atoms: tuple[Atom, ...],
        strategy,
        exact: bool,
        alpha: Fraction,
        p_keep: tuple | None = None,
    ):
        self.game = game
        self.kind = kind
        self.n = n
        self.C = tuple(sorted(C))
        self.free = tuple(i for i in range(n) if i not in self.C)
        self.m = len(self.free)
        self.atoms = atoms
        self.strategy = strategy
        self.exact = exact
        self.alpha = alpha
        self.p_keep = p_keep
        self._pos_free = {i: p for p, i in enumerate(self.free)}
        total = sum(a.weight for a in atoms)
        if exact:
            if total != 1:
                raise GameValidationError(f"table mass is {total}, expected 1")
        elif abs(total - 1.0) > 1e-9:
            raise GameValidationError(f"table mass is {total}, expected 1")

    # ----- accessors -------------------------------------------------------

    def pr_win(self):
        return sum(a.weight for a in self.atoms if a.win)

    def delta(self) -> float:
        """(|C| * joint answer bits + log2(1/Pr(W))) / m."""
        if self.m == 0:
            raise GameValidationError("delta is undefined when C covers all rounds")
        pw = self.pr_win()
        if pw == 0:
            raise ZeroMassError("Pr(W_C) = 0")
        s = math.log2(math.prod(len(a) for a in self.game.answers))
        return (len(self.C) * s + math.log2(1 / float(pw))) / self.m

    def omega_at(self, atom: Atom, i: int):
        """The auxiliary variable's component for free round i."""
        p = self._pos_free[i]
        return (atom.d[p], atom.m[p])

    def omega_minus(self, atom: Atom, i: int):
        """All components of the auxiliary variable except free round i's."""
        parts = []
        for j in self.free:
            if j != i:
                p = self._pos_free[j]
                parts.append(("f", j, atom.d[p], atom.m[p]))
        for j in self.C:
            parts.append(("c", j, atom.x[j]))
        return tuple(parts)

    def omega_full(self, atom: Atom):
        parts = []
        for j in self.free:
            p = self._pos_free[j]
            parts.append(("f", j, atom.d[p], atom.m[p]))
        for j in self.C:
            parts.append(("c", j, atom.x[j]))
        return tuple(parts)

    def y_at(self, atom: Atom, i: int) -> tuple:
        """Collapsed question tuple of round i."""
        return collapse(atom.x[i], self.game.anchors)

    # ----- pmf machinery ---------------------------------------------------

    def pmf(
        self,
        key: Callable[[Atom], object],
        given: Callable[[Atom], bool] | None = None,
    ) -> dict:
        """Normalized pmf of ``key(atom)``, optionally conditioned on ``given``.

        Raises ZeroMassError when the conditioning event has zero mass.
        """
        acc: dict = {}
        total = 0
        for a in self.atoms:
            if given is not None and not given(a):
                continue
            k = key(a)
            acc[k] = acc.get(k, 0) + a.weight
            total += a.weight
        if total == 0:
            raise ZeroMassError("conditioning on an event of probability zero")
        return {k: v / total for k, v in acc.items()}


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def _round_answers(strategy: DeterministicStrategy, x_matrix: tuple, k: int, n: int):
    """Full answer matrix (per round, per player) of a deterministic strategy."""
    per_player = []
    for t in range(k):
        q = tuple(x_matrix[j][t] for j in range(n))
        per_player.append(strategy.maps[t][q])
    return tuple(tuple(per_player[t][j] for t in range(k)) for j in range(n))


def _validate_c(n: int, C) -> tuple[int, ...]:
    if n < 1:
        raise GameValidationError(f"n must be positive, got {n}")
    c = tuple(sorted(set(int(i) for i in C)))
    for i in c:
        if not 0 <= i < n:
            raise GameValidationError(f"round index {i} out of range for n={n}")
    if len(c) >= n:
        raise GameValidationError("C must leave at least one free round")
    return c


def build_table_multi(
    g: Game,
    n: int,
    C,
    strategy: DeterministicStrategy,
    *,
    limit: int = DEFAULT_TABLE_LIMIT,
) -> DepBreakTable:
    """Joint table for the multiplayer construction (exact, deterministic).

    Per free round, ``D_i`` is a uniformly random (k-1)-subset of players and
    ``M_i`` their collapsed questions; rounds in ``C`` contribute their full
    question tuple to the auxiliary variable and their answers to ``z``.
    """
    ok, alpha = is_anchored(g)
    if not ok:
        raise GameValidationError("the game must be anchored (declared and verified)")
    if not isinstance(strategy, DeterministicStrategy):
        raise GameValidationError(
            "the multiplayer table requires a deterministic strategy"
        )
    c = _validate_c(n, C)
    free = [i for i in range(n) if i not in c]
    k = g.k

    support = list(g.mu.support_items())
    subsets = [tuple(t for t in range(k) if t != omit) for omit in range(k)]
    n_atoms = len(support) ** n * len(subsets) ** len(free)
    if n_atoms > limit:
        raise BudgetExceededError(
            f"table would hold {n_atoms} atoms, over the limit {limit}", size=n_atoms
        )

    d_weight = Fraction(1, k) ** len(free)
    atoms = []
    for combo in itertools.product(support, repeat=n):
        x_matrix = tuple(x for x, _ in combo)
        w_q = math.prod((w for _, w in combo), start=Fraction(1))
        answers = _round_answers(strategy, x_matrix, k, n)
        z = tuple(answers[j] for j in c)
        win = all(bool(g.predicate(x_matrix[j], answers[j])) for j in c)
        collapsed = [collapse(x_matrix[i], g.anchors) for i in free]
        for d_combo in itertools.product(subsets, repeat=len(free)):
            m_vals = tuple(
                tuple(collapsed[p][t] for t in d_combo[p])
                for p in range(len(free))
            )
            atoms.append(
                Atom(
                    weight=w_q * d_weight,
                    x=x_matrix,
                    d=d_combo,
                    m=m_vals,
                    z=z,
                    win=win,
                )
            )
    table = DepBreakTable(
        game=g,
        kind="multi",
        n=n,
        C=c,
        atoms=tuple(atoms),
        strategy=strategy,
        exact=True,
        alpha=alpha,
    )
    if len(c) > 0 and table.pr_win() == 0:
        raise ZeroMassError("Pr(W_C) = 0 for this strategy and C")
    return table


def _marginal(g: Game, player: int, keep: Callable) -> list:
    """[(label, conditional mass)] of one player's question under ``keep``."""
    acc: dict = {}
    for x, w in g.mu.items():
        if w > 0 and keep(x[player]):
            acc[x[player]] = acc.get(x[player], Fraction(0)) + w
    total = sum(acc.values(), Fraction(0))
    if total == 0:
        raise ZeroMassError("conditioning a question marginal on a zero-mass set")
    return [(lab, w / total) for lab, w in acc.items()]


def _conditional_other(g: Game, fixed_player: int, fixed_label, out_player: int):
    acc: dict = {}
    total = Fraction(0)
    for x, w in g.mu.items():
        if w > 0 and x[fixed_player] == fixed_label:
            acc[x[out_player]] = acc.get(x[out_player], Fraction(0)) + w
            total += w
    if total == 0:
        raise ZeroMassError(
            f"question {fixed_label!r} of player {fixed_player} has zero mass"
        )
    return [(lab, w / total) for lab, w in acc.items()]


def _side_branches(p, marg, anchor_set, anchor_marg, conv):
    """The (m_value, m_weight, resample pmf) triples of one side's reveal.

    ``marg`` and ``anchor_marg`` hold Fractions; ``p`` already lives in the
    target domain, so every returned weight does too.
    """
    branches = []
    anchor_resample = [(lab, conv(w)) for lab, w in anchor_marg]
    one_minus = 1 - p
    if one_minus != 0:
        branches.append(((BOT,), one_minus, anchor_resample))
    non_anchor_mass = sum(
        (w for lab, w in marg if lab not in anchor_set), Fraction(0)
    )
    anchor_mass = sum((w for lab, w in marg if lab in anchor_set), Fraction(0))
    for lab, w in marg:
        if lab not in anchor_set:
            m_w = p * p * conv(w / non_anchor_mass)
        else:
            m_w = p * one_minus * conv(w / anchor_mass)
        if m_w == 0:
            continue
        # Keep the named question with probability p, else an anchor draw;
        # merge in case the named question is itself an anchor label.
        resample: dict = {lab: p}
        for a_lab, a_w in anchor_resample:
            contrib = one_minus * a_w
            if contrib != 0:
                resample[a_lab] = resample.get(a_lab, 0) + contrib
        branches.append(((f"{BOT}/", lab), m_w, list(resample.items())))
    return branches


def _twoplayer_round_atoms(g: Game, pa, pb, conv):
    """All (d, m, (x, y), weight) outcomes of one free round."""
    anchors_a, anchors_b = g.anchors.sets[0], g.anchors.sets[1]
    mu_x = _marginal(g, 0, lambda lab: True)
    mu_y = _marginal(g, 1, lambda lab: True)
    mu_x_anchor = _marginal(g, 0, lambda lab: lab in anchors_a)
    mu_y_anchor = _marginal(g, 1, lambda lab: lab in anchors_b)
    half = conv(Fraction(1, 2))
    out = []
    sides = (
        ("A", 0, pa, mu_x, mu_x_anchor, anchors_a, mu_y, 1),
        ("B", 1, pb, mu_y, mu_y_anchor, anchors_b, mu_x, 0),
    )
    for side, own, p, own_marg, own_anchor, own_set, other_marg, other in sides:
        for m_val, m_w, resample in _side_branches(
            p, own_marg, own_set, own_anchor, conv
        ):
            if m_val == (BOT,):
                other_list = [(lab, conv(w)) for lab, w in other_marg]
            else:
                other_list = [
                    (lab, conv(w))
                    for lab, w in _conditional_other(g, own, m_val[1], other)
                ]
            for own_lab, p_own in resample:
                for other_lab, p_other in other_list:
                    w = half * m_w * p_own * p_other
                    if w == 0:
                        continue
                    xy = (own_lab, other_lab) if side == "A" else (other_lab, own_lab)
                    out.append((side, m_val, xy, w))
    return out


def build_table_twoplayer(
    g: Game,
    n: int,
    C,
    strategy,
    *,
    limit: int = DEFAULT_TABLE_LIMIT,
    force_float: bool = False,
) -> DepBreakTable:
    """Joint table for the two-player anchor-weighted construction.

    Per free round: a fair coin picks the side ``D_i``; on side A the revealed
    value ``M_i`` is ⊥ with probability ``1 - p_A`` and "⊥-or-x" with weight
    ``p_A² μ(x | non-anchor)`` or ``p_A (1-p_A) μ(x | anchor)``; the A-side
    question is resampled (⊥ branch: anchor-conditioned marginal; ⊥-or-x:
    keep x with probability ``p_A``, else an anchor-conditioned draw) while
    the B-side question is drawn from its conditional given the revealed
    value (μ(y) under ⊥, μ(y|x) under ⊥-or-x) — independently of the A-side
    resample.  Side B is symmetric; rounds in C draw (x, y) from μ directly.

    Exact (Fractions) when both ``(1 - anchor mass)^(1/3)`` are rational and
    the strategy is deterministic; floats otherwise.  Entangled strategies
    must expose ``answer_distribution_on(x_vec, y_vec, coords)``.
    """
    ok, alpha = is_anchored(g)
    if not ok:
        raise GameValidationError("the game must be anchored (declared and verified)")
    if g.k != 2:
        raise GameValidationError("the two-player table requires k=2")
    c = _validate_c(n, C)
    free = [i for i in range(n) if i not in c]

    mass_a = _anchor_mass(g, 0)
    mass_b = _anchor_mass(g, 1)
    root_a = rational_cbrt(1 - mass_a)
    root_b = rational_cbrt(1 - mass_b)
    deterministic = isinstance(strategy, DeterministicStrategy)
    if not deterministic and not hasattr(strategy, "answer_distribution_on"):
        raise GameValidationError(
            "strategy must be deterministic or expose answer_distribution_on"
        )
    exact = (
        root_a is not None and root_b is not None and deterministic and not force_float
    )
    if exact:
        conv = lambda v: v
        pa, pb = root_a, root_b
    else:
        conv = float
        pa = float(1 - mass_a) ** (1 / 3)
        pb = float(1 - mass_b) ** (1 / 3)

    free_atoms = _twoplayer_round_atoms(g, pa, pb, conv)
    c_atoms = [(x, conv(w)) for x, w in g.mu.support_items()]

    n_x = len(free_atoms) ** len(free) * max(len(c_atoms), 1) ** len(c)
    if n_x > limit:
        raise BudgetExceededError(
            f"table would hold at least {n_x} atoms, over the limit {limit}",
            size=n_x,
        )

    one = conv(Fraction(1))
    answer_cache: dict = {}

    def answers_for(x_matrix):
        if x_matrix not in answer_cache:
            if deterministic:
                ans = _round_answers(strategy, x_matrix, 2, n)
                z = tuple(ans[j] for j in c)
                win = all(bool(g.predicate(x_matrix[j], ans[j])) for j in c)
                answer_cache[x_matrix] = [(z, one, win)]
            else:
                x_vec = tuple(x_matrix[j][0] for j in range(n))
                y_vec = tuple(x_matrix[j][1] for j in range(n))
                dist = strategy.answer_distribution_on(x_vec, y_vec, c)
                rows = []
                for z, pz in dist.items():
                    if pz <= 0:
                        continue
                    win = all(
                        bool(g.predicate(x_matrix[j], z[p_]))
                        for p_, j in enumerate(c)
                    )
                    rows.append((z, pz, win))
                answer_cache[x_matrix] = rows
        return answer_cache[x_matrix]

    atoms = []
    c_products = list(itertools.product(c_atoms, repeat=len(c)))
    for free_combo in itertools.product(free_atoms, repeat=len(free)):
        w_free = math.prod((fa[3] for fa in free_combo), start=one)
        d_combo = tuple(fa[0] for fa in free_combo)
        m_combo = tuple(fa[1] for fa in free_combo)
        for c_combo in c_products:
            x_parts: list = [None] * n
            for pos, i in enumerate(free):
                x_parts[i] = free_combo[pos][2]
            w = w_free
            for pos, i in enumerate(c):
                x_parts[i] = c_combo[pos][0]
                w = w * c_combo[pos][1]
            if w == 0:
                continue
            x_matrix = tuple(x_parts)
            for z, pz, win in answers_for(x_matrix):
                atoms.append(
                    Atom(
                        weight=w * pz,
                        x=x_matrix,
                        d=d_combo,
                        m=m_combo,
                        z=z,
                        win=win,
                    )
                )

    table = DepBreakTable(
        game=g,
        kind="twoplayer",
        n=n,
        C=c,
        atoms=tuple(atoms),
        strategy=strategy,
        exact=exact,
        alpha=alpha,
        p_keep=(pa, pb),
    )
    if len(c) > 0 and table.pr_win() == 0:
        raise ZeroMassError("Pr(W_C) = 0 for this strategy and C")
    return table


def _anchor_mass(g: Game, player: int) -> Fraction:
    total = Fraction(0)
    for x, w in g.mu.items():
        if x[player] in g.anchors.sets[player]:
            total += w
    return total


# --------------------------------------------------------------------------
# Verifiers
# --------------------------------------------------------------------------


def check_marginal_reconstruction(table: DepBreakTable) -> list[CheckRow]:
    """Per round, the table's question marginal reproduces the game
    distribution — exactly in rational mode, to 1e-12 otherwise."""
    tol = Fraction(0) if table.exact else 1e-12
    rows = []
    for i in range(table.n):
        marginal = table.pmf(lambda a, _i=i: a.x[_i])
        worst = 0
        for x in itertools.product(*table.game.questions):
            target = table.game.mu.p(x)
            got = marginal.get(x, 0)
            diff = abs(got - (target if table.exact else float(target)))
            worst = max(worst, diff)
        rows.append(
            CheckRow(
                name=f"marginal-reconstruction[i={i}]",
                lhs=worst,
                rhs=tol,
                status="ok" if worst <= tol else "violated",
                exact=table.exact,
            )
        )
    return rows


def check_local_sampling(table: DepBreakTable) -> CheckRow:
    """Question-side factorization across players, given the rest of the view.

    For every free round i and every positive-mass (x_i, omega_minus, z), the
    joint conditional of the off-round questions equals the product of the
    per-player kernels (each conditioned on the full omega_minus, the player's
    own round-i question, and the player's own C answers).  The reported value
    is the worst TV distance over all conditionals; it must be exactly zero.
    """
    if table.kind != "multi":
        raise GameValidationError("local-sampling check applies to multiplayer tables")
    k = table.game.k
    worst = Fraction(0)
    for i in table.free:
        joint: dict = {}
        kernels: list[dict] = [dict() for _ in range(k)]
        for a in table.atoms:
            om = table.omega_minus(a, i)
            x_rest = tuple(a.x[j] for j in range(table.n) if j != i)
            jkey = (a.x[i], om, a.z)
            block = joint.setdefault(jkey, {})
            block[x_rest] = block.get(x_rest, Fraction(0)) + a.weight
            for t in range(k):
                zt = tuple(z_round[t] for z_round in a.z)
                tkey = (om, a.x[i][t], zt)
                xt_rest = tuple(a.x[j][t] for j in range(table.n) if j != i)
                kblock = kernels[t].setdefault(tkey, {})
                kblock[xt_rest] = kblock.get(xt_rest, Fraction(0)) + a.weight
        norm_kernels = [
            {key: _normalize(d) for key, d in kernels[t].items()} for t in range(k)
        ]
        for (x_i, om, z), block in joint.items():
            cond = _normalize(block)
            product_mass = Fraction(0)
            diff = Fraction(0)
            zts = [tuple(z_round[t] for z_round in z) for t in range(k)]
            for x_rest, p in cond.items():
                q = Fraction(1)
                for t in range(k):
                    xt_rest = tuple(x_rest[j][t] for j in range(table.n - 1))
                    q *= norm_kernels[t][(om, x_i[t], zts[t])].get(
                        xt_rest, Fraction(0)
                    )
                product_mass += q
                diff += abs(p - q)
            # Mass the product law puts outside the joint support.
            diff += 1 - product_mass
            worst = max(worst, diff / 2)
    return CheckRow(
        name="local-sampling-factorization",
        lhs=worst,
        rhs=Fraction(0),
        status="ok" if worst == 0 else "violated",
        exact=True,
    )


def verify_holenstein_bounds(table: DepBreakTable) -> list[CheckRow]:
    """The conditioned-distribution inequality suite for multiplayer tables.

    Emits averaged rows for the three stability bounds (√δ each), the
    collapse-insensitivity sum (3k√δ), the anchor-conditioning bound
    ((6k α^{-k} + 1)√δ), and exact per-(i, S, t) anchor-substitution rows
    (factor 2 α^{-(|S|+1)}, rational on both sides).
    """
    if table.kind != "multi":
        raise GameValidationError("this suite applies to multiplayer tables")
    if table.m == 0:
        raise GameValidationError("no free rounds to verify")
    sqrt_delta = math.sqrt(table.delta())
    k = table.game.k
    alpha = table.alpha
    win = lambda a: a.win
    rows: list[CheckRow] = []

    # (i) round-marginal stability: E_i || P_{X_i Ω_i | W} - P_{X_i Ω_i} ||.
    acc_i = Fraction(0)
    for i in table.free:
        key = lambda a, _i=i: (a.x[_i], table.omega_at(a, _i))
        acc_i += _tv_dict(table.pmf(key, win), table.pmf(key))
    rows.append(_bound_row("round-marginal-stability", acc_i / table.m, sqrt_delta))

    # (ii) question reconstruction:
    # E_i || P_{X_i Z Ω_{-i} | W} - P_{X_i|Y_i} P_{Y_i Z Ω_{-i} | W} ||.
    acc_ii = Fraction(0)
    for i in table.free:
        joint = table.pmf(
            lambda a, _i=i: (a.x[_i], a.z, table.omega_minus(a, _i)), win
        )
        x_marg = table.pmf(lambda a, _i=i: a.x[_i])
        y_of = {x: collapse(x, table.game.anchors) for x in x_marg}
        y_mass: dict = {}
        for x, w in x_marg.items():
            y_mass[y_of[x]] = y_mass.get(y_of[x], Fraction(0)) + w
        cond_w = table.pmf(
            lambda a, _i=i: (table.y_at(a, _i), a.z, table.omega_minus(a, _i)), win
        )
        product: dict = {}
        for (y, z, om), w in cond_w.items():
            for x, wx in x_marg.items():
                if y_of[x] == y:
                    product[(x, z, om)] = (wx / y_mass[y]) * w
        acc_ii += _tv_dict(joint, product)
    rows.append(_bound_row("question-reconstruction", acc_ii / table.m, sqrt_delta))

    # (iii) collapsed-question decoupling:
    # E_i || P_{Y_i Z Ω | W} - P_{Y_i | Ω_i} P_{Z Ω | W} ||.
    acc_iii = Fraction(0)
    for i in table.free:
        joint = table.pmf(
            lambda a, _i=i: (table.y_at(a, _i), a.z, table.omega_full(a)), win
        )
        y_omega = table.pmf(
            lambda a, _i=i: (table.y_at(a, _i), table.omega_at(a, _i))
        )
        omega_i = table.pmf(lambda a, _i=i: table.omega_at(a, _i))
        by_omega_i: dict = {}
        for (y, omi), w in y_omega.items():
            by_omega_i.setdefault(omi, []).append((y, w / omega_i[omi]))
        zomega = table.pmf(lambda a, _i=i: (a.z, table.omega_full(a)), win)
        product: dict = {}
        for (z, om), w in zomega.items():
            part = om[_free_index(om, i)]
            for y, wy in by_omega_i[(part[2], part[3])]:
                product[(y, z, om)] = wy * w
        acc_iii += _tv_dict(joint, product)
    rows.append(
        _bound_row("collapsed-question-decoupling", acc_iii / table.m, sqrt_delta)
    )

    # Per-(i, t) collapse-insensitivity terms, reused by the substitution rows:
    # || P_{Y_i} P_{Z Ω_{-i} | W, Y_i} - P_{Y_i} P_{Z Ω_{-i} | W, Y_i^{-t}} ||.
    term: dict = {}
    for i in table.free:
        y_marg = table.pmf(lambda a, _i=i: table.y_at(a, _i))
        by_y: dict = {}
        for a in table.atoms:
            if not a.win:
                continue
            y = table.y_at(a, i)
            block = by_y.setdefault(y, {})
            kk = (a.z, table.omega_minus(a, i))
            block[kk] = block.get(kk, Fraction(0)) + a.weight
        cond_y = {y: _normalize(d) for y, d in by_y.items()}
        for t in range(k):
            merged: dict = {}
            for y, d in by_y.items():
                rest = y[:t] + y[t + 1 :]
                m = merged.setdefault(rest, {})
                for kk, w in d.items():
                    m[kk] = m.get(kk, Fraction(0)) + w
            cond_rest = {rest: _normalize(d) for rest, d in merged.items()}
            total = Fraction(0)
            for y, wy in y_marg.items():
                if y not in cond_y:
                    raise ZeroMassError(
                        f"event W with round collapse {y!r} has zero mass"
                    )
                total += wy * _tv_dict(cond_y[y], cond_rest[y[:t] + y[t + 1 :]])
            term[(i, t)] = total

    acc_cor = sum(
        (sum((term[(i, t)] for t in range(k)), Fraction(0)) for i in table.free),
        Fraction(0),
    )
    rows.append(
        _bound_row("collapse-insensitivity", acc_cor / table.m, 3 * k * sqrt_delta)
    )

    # Anchor conditioning:
    # E_i || P_{X_i Ω_{-i} Z | W} - P_{X_i} P_{Ω_{-i} Z | W, Y_i = ⊥^k} ||.
    acc_prop = Fraction(0)
    bots = (BOT,) * k
    for i in table.free:
        joint = table.pmf(
            lambda a, _i=i: (a.x[_i], a.z, table.omega_minus(a, _i)), win
        )
        x_marg = table.pmf(lambda a, _i=i: a.x[_i])
        anchor_cond = table.pmf(
            lambda a, _i=i: (a.z, table.omega_minus(a, _i)),
            lambda a, _i=i: a.win and table.y_at(a, _i) == bots,
        )
        product = {
            (x, z, om): wx * w
            for x, wx in x_marg.items()
            for (z, om), w in anchor_cond.items()
        }
        acc_prop += _tv_dict(joint, product)
    rhs_prop = (6 * k * float(alpha) ** (-k) + 1) * sqrt_delta
    rows.append(_bound_row("anchor-conditioning", acc_prop / table.m, rhs_prop))

    # Exact substitution rows, one per (i, S, t) with S a proper subset, t ∉ S.
    for i in table.free:
        y_marg = table.pmf(lambda a, _i=i: table.y_at(a, _i))
        for s_size in range(k):
            for s in itertools.combinations(range(k), s_size):
                for t in range(k):
                    if t in s:
                        continue
                    lhs = _substitution_lhs(table, i, s, t, y_marg)
                    rhs = 2 * alpha ** (-(len(s) + 1)) * term[(i, t)]
                    rows.append(
                        CheckRow(
                            name=(
                                f"anchor-substitution-step"
                                f"[i={i},S={_set_name(s)},t={t}]"
                            ),
                            lhs=lhs,
                            rhs=rhs,
                            status="ok" if lhs <= rhs else "violated",
                            exact=True,
                        )
                    )
    return rows


def _set_name(s: tuple) -> str:
    return "{" + ",".join(str(t) for t in s) + "}"


def _free_index(om_tuple: tuple, i: int) -> int:
    for idx, part in enumerate(om_tuple):
        if part[0] == "f" and part[1] == i:
            return idx
    raise KeyError(i)


def _bound_row(name: str, lhs, rhs) -> CheckRow:
    return CheckRow(
        name=name,
        lhs=lhs,
        rhs=rhs,
        status="ok" if float(lhs) <= float(rhs) else "violated",
        exact=False,
    )


def _substitution_lhs(table: DepBreakTable, i: int, s: tuple, t: int, y_marg: dict):
    """|| P_Y ( P_{ZΩ₋ᵢ|W, Y^S=⊥, Y^rest} − P_{ZΩ₋ᵢ|W, Y^{S∪t}=⊥, Y^rest'} ) ||."""
    k = table.game.k
    s_t = tuple(sorted(s + (t,)))

    def grouped(anchored: tuple):
        rest = tuple(u for u in range(k) if u not in anchored)
        acc: dict = {}
        for a in table.atoms:
            if not a.win:
                continue
            y = table.y_at(a, i)
            if any(y[u] != BOT for u in anchored):
                continue
            key = tuple(y[u] for u in rest)
            block = acc.setdefault(key, {})
            kk = (a.z, table.omega_minus(a, i))
            block[kk] = block.get(kk, Fraction(0)) + a.weight
        return {key: _normalize(d) for key, d in acc.items()}, rest

    cond_s, rest_s = grouped(s)
    cond_st, rest_st = grouped(s_t)
    total = Fraction(0)
    for y, wy in y_marg.items():
        key_s = tuple(y[u] for u in rest_s)
        key_st = tuple(y[u] for u in rest_st)
        if key_s not in cond_s or key_st not in cond_st:
            raise ZeroMassError("anchor-substitution conditioning event has zero mass")
        total += wy * _tv_dict(cond_s[key_s], cond_st[key_st])
    return total


def check_twoplayer_skew(table: DepBreakTable) -> list[CheckRow]:
    """Report rows for the two-player conditioned-distribution quantities.

    The reference bounds carry unstated universal constants, so these rows
    are informational: each records the averaged left-hand side next to the
    relevant scale (√δ or √δ/α²) without asserting an inequality.
    """
    if table.kind != "twoplayer":
        raise GameValidationError("this report applies to two-player tables")
    sqrt_delta = math.sqrt(table.delta())
    alpha = float(table.alpha)
    win = lambda a: a.win
    rows = []

    def report(name, lhs, rhs):
        rows.append(
            CheckRow(name=name, lhs=lhs, rhs=rhs, status="report", exact=table.exact)
        )

    # 1. Round skew under conditioning on W.
    acc = 0
    for i in table.free:
        key = lambda a, _i=i: (table.omega_at(a, _i), a.x[_i])
        acc += _tv_dict(table.pmf(key, win), table.pmf(key))
    report("round-skew-under-conditioning", acc / table.m, sqrt_delta)

    # 2. Pair reconstruction: P_{Ω Z X_iY_i | W} vs P_{Ω Z | W} P_{X_iY_i | Ω}.
    acc = 0
    for i in table.free:
        joint = table.pmf(lambda a, _i=i: (table.omega_full(a), a.z, a.x[_i]), win)
        oz = table.pmf(lambda a, _i=i: (table.omega_full(a), a.z), win)
        xy_omega = table.pmf(lambda a, _i=i: (table.omega_at(a, _i), a.x[_i]))
        om_marg = table.pmf(lambda a, _i=i: table.omega_at(a, _i))
        by_omega_i: dict = {}
        for (omi, xy), w in xy_omega.items():
            by_omega_i.setdefault(omi, []).append((xy, w / om_marg[omi]))
        product = {}
        for (om, z), w in oz.items():
            part = om[_free_index(om, i)]
            for xy, wxy in by_omega_i[(part[2], part[3])]:
                product[(om, z, xy)] = w * wxy
        acc += _tv_dict(joint, product)
    report("question-pair-reconstruction", acc / table.m, sqrt_delta)

    # 3 & 4. Anchor-pair conditioning and the per-pair product relaxation.
    anchors_a = table.game.anchors.sets[0]
    anchors_b = table.game.anchors.sets[1]
    acc3 = 0
    acc4 = 0
    for i in table.free:
        xy_marg = table.pmf(lambda a, _i=i: a.x[_i])
        anchor_kernel = table.pmf(
            lambda a, _i=i: (a.z, table.omega_minus(a, _i)),
            lambda a, _i=i: a.win
            and a.x[_i][0] in anchors_a
            and a.x[_i][1] in anchors_b,
        )
        per_pair: dict = {}
        for a in table.atoms:
            if not a.win:
                continue
            block = per_pair.setdefault(a.x[i], {})
            kk = (a.z, table.omega_minus(a, i))
            block[kk] = block.get(kk, 0) + a.weight
        joint = table.pmf(
            lambda a, _i=i: (a.x[_i], a.z, table.omega_minus(a, _i)), win
        )
        total3 = 0
        product4: dict = {}
        for xy, w in xy_marg.items():
            if xy not in per_pair:
                raise ZeroMassError(f"event W with round pair {xy!r} has zero mass")
            cond = _normalize(per_pair[xy])
            total3 += w * _tv_dict(anchor_kernel, cond)
            for (z, om), wk in cond.items():
                product4[(xy, z, om)] = w * wk
        acc3 += total3
        acc4 += _tv_dict(joint, product4)
    report("anchor-pair-conditioning", acc3 / table.m, sqrt_delta / alpha**2)
    report("pair-product-relaxation", acc4 / table.m, sqrt_delta / alpha**2)
    return rows


# --------------------------------------------------------------------------
# Rounding
# --------------------------------------------------------------------------


@dataclass
class RoundedStrategy:
    """Single-round strategy extracted from a table at a chosen free round.

    The shared part is a sample from P_{Ω_{-i} Z | W, Y_i = ⊥^k}; each player
    completes their own question vector with their local kernel and answers
    with the repeated strategy's round-i answer.  ``exact_value`` enumerates
    everything: shared samples, fresh round-i questions, and every player's
    kernel draw.
    """

    table: DepBreakTable
    round_index: int
    shared: dict  # (omega_minus, z) -> weight
    kernels: list  # per player: (omega_minus, own x_i, own z) -> {x_rest: w}
    fallback: list  # per player: omega_minus -> {x_rest: w}
    sampled: DeterministicStrategy | None = field(default=None)

    def exact_value(self) -> Fraction:
        g = self.table.game
        total = Fraction(0)
        for (om, z), w_shared in self.shared.items():
            for x_i, w_q in g.mu.support_items():
                total += w_shared * w_q * self._win_probability(om, z, x_i)
        return total

    def _win_probability(self, om, z, x_i) -> Fraction:
        g = self.table.game
        i = self.round_index
        per_player = []
        for t in range(g.k):
            zt = tuple(z_round[t] for z_round in z)
            kd = self.kernels[t].get((om, x_i[t], zt))
            if kd is None:
                kd = self.fallback[t][om]
            per_player.append(list(kd.items()))
        total = Fraction(0)
        for combo in itertools.product(*per_player):
            w = math.prod((c[1] for c in combo), start=Fraction(1))
            a_i = []
            for t in range(g.k):
                q = list(combo[t][0])
                q.insert(i, x_i[t])
                a_i.append(self.table.strategy.maps[t][tuple(q)][i])
            if g.predicate(x_i, tuple(a_i)):
                total += w
        return total

    def sample(self, rng: random.Random) -> DeterministicStrategy:
        """One shared-randomness draw, realized as a deterministic strategy."""
        g = self.table.game
        i = self.round_index
        om, z = _weighted_choice(rng, list(self.shared.items()))
        maps = []
        for t in range(g.k):
            zt = tuple(z_round[t] for z_round in z)
            answer_map: dict = {}
            for q in g.questions[t]:
                kd = self.kernels[t].get((om, q, zt))
                if kd is None:
                    kd = self.fallback[t][om]
                x_rest = _weighted_choice(rng, list(kd.items()))
                full = list(x_rest)
                full.insert(i, q)
                answer_map[q] = self.table.strategy.maps[t][tuple(full)][i]
            maps.append(answer_map)
        return DeterministicStrategy(tuple(maps))


def _weighted_choice(rng: random.Random, items: list):
    r = rng.random()
    acc = 0.0
    for value, w in items:
        acc += float(w)
        if r <= acc:
            return value
    return items[-1][0]


def rounding_strategy_multi(
    table: DepBreakTable, i: int, shared_sample_seed: int | None = None
) -> RoundedStrategy:
    """Extract the single-round strategy at free round ``i``.

    When ``shared_sample_seed`` is given, one shared-randomness draw is
    realized immediately and stored as ``.sampled``.

    Raises:
        ZeroMassError("anchor event unreachable") when W ∧ {Y_i = ⊥^k} has
        zero probability.
    """
    if table.kind != "multi":
        raise GameValidationError("rounding applies to multiplayer tables")
    if i not in table._pos_free:
        raise GameValidationError(f"round {i} is not a free round of this table")
    g = table.game
    k = g.k
    bots = (BOT,) * k

    shared_raw: dict = {}
    for a in table.atoms:
        if a.win and table.y_at(a, i) == bots:
            key = (table.omega_minus(a, i), a.z)
            shared_raw[key] = shared_raw.get(key, Fraction(0)) + a.weight
    if not shared_raw:
        raise ZeroMassError("anchor event unreachable")
    shared = _normalize(shared_raw)

    kernels_raw: list[dict] = [dict() for _ in range(k)]
    fallback_raw: list[dict] = [dict() for _ in range(k)]
    for a in table.atoms:
        om = table.omega_minus(a, i)
        for t in range(k):
            zt = tuple(z_round[t] for z_round in a.z)
            xt_rest = tuple(a.x[j][t] for j in range(table.n) if j != i)
            block = kernels_raw[t].setdefault((om, a.x[i][t], zt), {})
            block[xt_rest] = block.get(xt_rest, Fraction(0)) + a.weight
            fb = fallback_raw[t].setdefault(om, {})
            fb[xt_rest] = fb.get(xt_rest, Fraction(0)) + a.weight
    kernels = [
        {key: _normalize(d) for key, d in kernels_raw[t].items()} for t in range(k)
    ]
    fallback = [
        {key: _normalize(d) for key, d in fallback_raw[t].items()} for t in range(k)
    ]
    rs = RoundedStrategy(
        table=table, round_index=i, shared=shared, kernels=kernels, fallback=fallback
    )
    if shared_sample_seed is not None:
        rs.sampled = rs.sample(random.Random(shared_sample_seed))
    return rs


def verify_rounding_gap(table: DepBreakTable, i: int) -> CheckRow:
    """Pr(W_i | W) ≤ extracted value + ‖joint − product‖ — checked exactly.

    The TV term compares P_{X_i Ω_{-i} Z | W} with
    P_{X_i} P_{Ω_{-i} Z | W, Y_i = ⊥^k}; every quantity is rational.
    """
    rs = rounding_strategy_multi(table, i)
    g = table.game
    win = lambda a: a.win

    pr_w = table.pr_win()
    pr_wi_and_w = Fraction(0)
    for a in table.atoms:
        if not a.win:
            continue
        answers = _round_answers(table.strategy, a.x, g.k, table.n)
        if g.predicate(a.x[i], answers[i]):
            pr_wi_and_w += a.weight
    lhs = pr_wi_and_w / pr_w

    joint = table.pmf(lambda a, _i=i: (a.x[_i], a.z, table.omega_minus(a, _i)), win)
    x_marg = table.pmf(lambda a, _i=i: a.x[_i])
    product = {
        (x, z, om): wx * w
        for x, wx in x_marg.items()
        for (om, z), w in rs.shared.items()
    }
    tv = _tv_dict(joint, product)
    rhs = rs.exact_value() + tv
    return CheckRow(
        name=f"rounding-gap[i={i}]",
        lhs=lhs,
        rhs=rhs,
        status="ok" if lhs <= rhs else "violated",
        exact=True,
    )
