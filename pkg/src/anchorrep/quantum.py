"""Entangled strategies and the quantum side of the rounding argument.

A two-player entangled strategy is kept in a canonical form: the shared pure
state is written with a diagonal coefficient matrix ``T = diag(schmidt)`` (a
Schmidt decomposition with both registers expressed in the same basis), and
every POVM is stored in that basis.  Any pure-state strategy can be brought
to this form by rotating the two registers separately, which leaves all
outcome probabilities unchanged — :meth:`EntangledStrategy.from_state` does
exactly that.  In this form the Born rule for a product observable becomes

    <psi| X (x) Y |psi> = sum_{k,l} s_k s_l X[k,l] Y[k,l],

which doubles as the matrix identity ``Tr(X sqrt(rho) Y^T sqrt(rho))`` with
``rho`` the reduced state — the transpose is taken in the Schmidt basis.

On top of strategies this module builds the objects used by the round-by-
round analysis of a repeated anchored game: the families of conditioned
states ``Phi`` with their normalization identities, the classical-quantum
block states with their conditioning and domination properties, and the
extracted single-round strategy whose value is compared against
``Pr(W_i | W)`` with explicitly computed alignment and skew residuals.
All logarithms are base 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .anchoring import anchor_transform, predicted_value
from .depbreak import BOT, CheckRow, DepBreakTable, build_table_twoplayer
from .games import (
    DeterministicStrategy,
    Game,
    GameValidationError,
    ZeroMassError,
    classical_value,
)
from .qinfo import (
    CQState,
    EIG_FLOOR,
    QuantumValidationError,
    check_povm,
    cq_max_relative_entropy,
    cq_relative_entropy,
    partial_trace,
    psd_power,
    psd_sqrt,
    random_povm,
    uhlmann_unitary,
)

__all__ = [
    "EntangledStrategy",
    "embed_deterministic",
    "extend_with_default_answers",
    "repeated_strategy",
    "smoothed_strategy",
    "chsh_qubit_strategy",
    "entangled_value_eval",
    "SeesawResult",
    "seesaw",
    "PhiFamily",
    "build_phi_family",
    "check_gamma_identity",
    "check_gamma_sum",
    "check_mixing_identity",
    "check_measurement_consistency",
    "CQBundle",
    "build_cq_states",
    "check_cq_marginal",
    "check_cq_domination",
    "check_cq_conditioning_entropy",
    "check_sinf_bound",
    "check_ando",
    "check_anchoring_consistency",
    "QuantumRoundingReport",
    "quantum_rounding_value",
    "phi_suite_rows",
    "rounding_suite_rows",
]

MIX = f"{BOT}/"

_GAMMA_TOL = 1e-12


# ---------------------------------------------------------------------------
# strategies


class EntangledStrategy:
    """A two-player strategy: shared pure state plus per-question POVMs.

    ``schmidt`` holds the square roots of the Schmidt weights; the shared
    state is ``sum_k schmidt[k] |k>|k>``.  ``povms`` is a pair of mappings
    ``question label -> {answer label: d x d effect}``, both players'
    operators expressed in the Schmidt basis.
    """

    def __init__(self, d: int, schmidt, povms: Sequence[Mapping]):
        if d < 1:
            raise QuantumValidationError(f"dimension must be >= 1, got {d}")
        s = np.asarray(schmidt, dtype=float)
        if s.shape != (d,):
            raise QuantumValidationError(
                f"schmidt vector has shape {s.shape}, expected ({d},)"
            )
        if np.any(s < -1e-12):
            raise QuantumValidationError("schmidt coefficients must be nonnegative")
        s = np.clip(s, 0.0, None)
        norm = float(np.sum(s * s))
        if abs(norm - 1.0) > 1e-10:
            raise QuantumValidationError(
                f"schmidt weights sum to {norm!r}, expected 1"
            )
        if len(povms) != 2:
            raise QuantumValidationError("exactly two players are supported")
        checked = []
        for player, table in enumerate(povms):
            per = {}
            for q, effects in table.items():
                per[q] = check_povm(effects, name=f"player {player} question {q!r}")
                for eff in per[q].values():
                    if eff.shape != (d, d):
                        raise QuantumValidationError(
                            f"player {player} question {q!r}: effect dimension "
                            f"{eff.shape} != ({d}, {d})"
                        )
            checked.append(per)
        self.d = d
        self.schmidt = s
        self.povms = (checked[0], checked[1])
        self._ss = np.outer(s, s)
        self._coarse_cache: dict = {}

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_state(cls, state, povms_a: Mapping, povms_b: Mapping) -> "EntangledStrategy":
        """Canonicalize an arbitrary pure-state strategy.

        ``state`` is either a length-d^2 vector or a d x d coefficient
        matrix.  Both registers are rotated into the Schmidt basis and the
        POVMs are conjugated accordingly; outcome probabilities are
        untouched.
        """
        t = np.asarray(state, dtype=complex)
        if t.ndim == 1:
            d = int(round(math.sqrt(t.size)))
            if d * d != t.size:
                raise QuantumValidationError(
                    f"state vector length {t.size} is not a perfect square"
                )
            t = t.reshape(d, d)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise QuantumValidationError("state must be square")
        nrm = float(np.linalg.norm(t))
        if abs(nrm - 1.0) > 1e-10:
            raise QuantumValidationError(f"state norm is {nrm!r}, expected 1")
        u, s, vh = np.linalg.svd(t)
        rot_a = {
            q: {a: u.conj().T @ np.asarray(e, dtype=complex) @ u for a, e in eff.items()}
            for q, eff in povms_a.items()
        }
        rot_b = {
            q: {
                a: vh.conj() @ np.asarray(e, dtype=complex) @ vh.T
                for a, e in eff.items()
            }
            for q, eff in povms_b.items()
        }
        return cls(t.shape[0], s, (rot_a, rot_b))

    # -- evaluation ----------------------------------------------------------

    def born(self, x: np.ndarray, y: np.ndarray) -> float:
        """``<psi| X (x) Y |psi>`` for the shared state."""
        return float(np.sum(self._ss * x * y).real)

    def state_matrix(self) -> np.ndarray:
        return np.diag(self.schmidt.astype(complex))

    def state_vector(self) -> np.ndarray:
        return self.state_matrix().reshape(-1)

    def effect(self, player: int, question, answer) -> np.ndarray:
        table = self.povms[player]
        if question not in table:
            raise QuantumValidationError(
                f"player {player} has no POVM for question {question!r}"
            )
        return table[question][answer]

    def coarse_effect(self, player: int, question, assignment: Mapping) -> np.ndarray:
        """Sum of effects over answers matching a partial coordinate map.

        Only meaningful when the answer labels are tuples (a repeated-game
        strategy); ``assignment`` maps round index -> required label.
        """
        key = (player, question, tuple(sorted(assignment.items())))
        cached = self._coarse_cache.get(key)
        if cached is not None:
            return cached
        table = self.povms[player]
        if question not in table:
            raise QuantumValidationError(
                f"player {player} has no POVM for question {question!r}"
            )
        out = np.zeros((self.d, self.d), dtype=complex)
        for answer, eff in table[question].items():
            if all(answer[j] == lab for j, lab in assignment.items()):
                out = out + eff
        self._coarse_cache[key] = out
        return out

    def answer_distribution_on(self, x_vec: tuple, y_vec: tuple, coords) -> dict:
        """Joint pmf of the two players' answers on the given rounds.

        This is the hook consumed by the dependency-breaking table builder:
        the keys are tuples, one ``(a_j, b_j)`` pair per requested round.
        """
        coords = tuple(coords)
        if not coords:
            return {(): 1.0}
        out = {}
        for a_part in itertools.product(
            *[sorted({ans[j] for ans in self.povms[0][x_vec]}) for j in coords]
        ):
            ea = self.coarse_effect(0, x_vec, dict(zip(coords, a_part)))
            for b_part in itertools.product(
                *[sorted({ans[j] for ans in self.povms[1][y_vec]}) for j in coords]
            ):
                eb = self.coarse_effect(1, y_vec, dict(zip(coords, b_part)))
                p = self.born(ea, eb)
                if p > 0:
                    z = tuple((a, b) for a, b in zip(a_part, b_part))
                    out[z] = out.get(z, 0.0) + p
        return out


def embed_deterministic(g: Game, strategy: DeterministicStrategy) -> EntangledStrategy:
    """Embed a deterministic strategy as a d=1 entangled strategy."""
    if g.k != 2:
        raise GameValidationError("entangled strategies are two-player")
    one = np.array([[1.0]], dtype=complex)
    zero = np.array([[0.0]], dtype=complex)
    povms = []
    for player in range(2):
        per = {}
        for q in g.questions[player]:
            chosen = strategy.maps[player][q]
            per[q] = {a: (one if a == chosen else zero) for a in g.answers[player]}
        povms.append(per)
    return EntangledStrategy(1, np.array([1.0]), povms)


def extend_with_default_answers(s: EntangledStrategy, g: Game) -> EntangledStrategy:
    """Cover the game's extra questions with a fixed-answer POVM.

    Used to play an anchored game with a strategy for the base game: on any
    question the strategy does not know (the anchor questions), the player
    deterministically reports the first answer label.
    """
    eye = np.eye(s.d, dtype=complex)
    zero = np.zeros((s.d, s.d), dtype=complex)
    povms = []
    for player in range(2):
        per = dict(s.povms[player])
        for q in g.questions[player]:
            if q not in per:
                labels = tuple(g.answers[player])
                per[q] = {a: (eye if a == labels[0] else zero) for a in labels}
        povms.append(per)
    return EntangledStrategy(s.d, s.schmidt, povms)


def repeated_strategy(s: EntangledStrategy, n: int) -> EntangledStrategy:
    """Play n coordinates independently: tensor powers of state and POVMs."""
    if n < 1:
        raise GameValidationError(f"n must be positive, got {n}")
    schmidt = s.schmidt
    for _ in range(n - 1):
        schmidt = np.kron(schmidt, s.schmidt)
    povms = []
    for player in range(2):
        base = s.povms[player]
        per = {}
        for q_combo in itertools.product(sorted(base), repeat=n):
            effects = {}
            for a_combo in itertools.product(*[sorted(base[q]) for q in q_combo]):
                eff = np.array([[1.0]], dtype=complex)
                for q, a in zip(q_combo, a_combo):
                    eff = np.kron(eff, base[q][a])
                effects[a_combo] = eff
            per[q_combo] = effects
        povms.append(per)
    return EntangledStrategy(s.d**n, schmidt, povms)


def smoothed_strategy(s: EntangledStrategy, eps: float) -> EntangledStrategy:
    """Mix every POVM with white noise; keeps completeness, adds full rank."""
    if not 0 <= eps < 1:
        raise QuantumValidationError("eps must be in [0, 1)")
    eye = np.eye(s.d, dtype=complex)
    povms = []
    for player in range(2):
        per = {}
        for q, effects in s.povms[player].items():
            k = len(effects)
            per[q] = {a: (1 - eps) * e + eps * eye / k for a, e in effects.items()}
        povms.append(per)
    return EntangledStrategy(s.d, s.schmidt, povms)


def _basis_projectors(theta: float) -> dict:
    c, s = math.cos(theta), math.sin(theta)
    v0 = np.array([c, s], dtype=complex)
    v1 = np.array([-s, c], dtype=complex)
    return {"0": np.outer(v0, v0.conj()), "1": np.outer(v1, v1.conj())}


def chsh_qubit_strategy() -> EntangledStrategy:
    """The optimal qubit strategy for the standard XOR game fixture.

    Maximally entangled state, measurement bases at 0 and pi/4 for the first
    player, +-pi/8 for the second; value (2 + sqrt 2)/4.
    """
    inv = 1.0 / math.sqrt(2.0)
    povm_a = {"0": _basis_projectors(0.0), "1": _basis_projectors(math.pi / 4)}
    povm_b = {"0": _basis_projectors(math.pi / 8), "1": _basis_projectors(-math.pi / 8)}
    return EntangledStrategy(2, np.array([inv, inv]), (povm_a, povm_b))


def entangled_value_eval(g: Game, s: EntangledStrategy) -> float:
    """Winning probability of an entangled strategy in a two-player game."""
    if g.k != 2:
        raise GameValidationError("entangled evaluation requires k=2")
    total = 0.0
    for (x, y), w in g.mu.support_items():
        povm_a = s.povms[0].get(x)
        povm_b = s.povms[1].get(y)
        if povm_a is None or povm_b is None:
            raise QuantumValidationError(
                f"strategy lacks a POVM for questions ({x!r}, {y!r})"
            )
        wf = float(w)
        for a, ea in povm_a.items():
            for b, eb in povm_b.items():
                if g.predicate((x, y), (a, b)):
                    total += wf * s.born(ea, eb)
    return total


# ---------------------------------------------------------------------------
# seesaw


class SeesawResult(NamedTuple):
    value: float
    strategy: EntangledStrategy
    objectives: tuple
    restart_values: tuple


def _hermitize(m: np.ndarray) -> np.ndarray:
    return (m + m.conj().T) / 2.0


def _best_povm_response(effects: dict, gains: dict, sweeps: int = 3) -> dict:
    """Improve a POVM against per-outcome gain operators.

    Pairwise exchanges: for each pair of outcomes the combined mass
    ``S = E_p + E_q`` is re-split optimally (an eigenspace split of
    ``sqrt(S) (G_p - G_q) sqrt(S)``), which never decreases the objective.
    For two outcomes a single sweep is an exact best response.
    """
    labels = sorted(effects)
    if len(labels) == 1:
        return dict(effects)
    out = {a: effects[a].copy() for a in labels}
    for _ in range(sweeps if len(labels) > 2 else 1):
        for p, q in itertools.combinations(labels, 2):
            s = out[p] + out[q]
            root = psd_sqrt(s)
            pencil = _hermitize(root @ (gains[p] - gains[q]) @ root)
            eigs, vecs = np.linalg.eigh(pencil)
            pos = vecs[:, eigs > 0]
            proj = pos @ pos.conj().T
            keep = _hermitize(root @ proj @ root)
            out[p] = keep
            out[q] = _hermitize(s - keep)
    return out


def seesaw(
    g: Game,
    d: int,
    *,
    iterations: int = 80,
    seed: int = 0,
    restarts: int = 10,
    tol: float = 1e-12,
    include_classical_start: bool = True,
) -> SeesawResult:
    """Alternating lower-bound search for the entangled value.

    Each iteration updates the first player's POVMs, the second player's
    POVMs (both by monotone eigenspace exchanges), then replaces the state
    with the top eigenvector of the game operator.  The objective never
    decreases.  Runs seeded random restarts plus, by default, one restart
    from an embedded optimal classical strategy, so the result is always at
    least the classical value (up to float rounding).
    """
    if g.k != 2:
        raise GameValidationError("seesaw requires k=2")
    if d < 1:
        raise GameValidationError("dimension must be positive")
    questions_a, questions_b = g.questions
    answers_a, answers_b = g.answers
    mu = [((x, y), float(w)) for (x, y), w in g.mu.support_items()]
    pred = {
        (x, y): {
            (a, b): bool(g.predicate((x, y), (a, b)))
            for a in answers_a
            for b in answers_b
        }
        for (x, y), _ in mu
    }

    def objective(t, pa, pb):
        total = 0.0
        for (x, y), w in mu:
            for a in answers_a:
                ea = pa[x][a]
                for b in answers_b:
                    if pred[(x, y)][(a, b)]:
                        total += w * float(
                            np.trace(t.conj().T @ ea @ t @ pb[y][b].T).real
                        )
        return total

    def alice_step(t, pa, pb):
        new = {}
        for x in questions_a:
            gains = {}
            for a in answers_a:
                acc = np.zeros((d, d), dtype=complex)
                for (xq, y), w in mu:
                    if xq != x:
                        continue
                    for b in answers_b:
                        if pred[(x, y)][(a, b)]:
                            acc = acc + w * (t @ pb[y][b].T @ t.conj().T)
                gains[a] = _hermitize(acc)
            new[x] = _best_povm_response(pa[x], gains)
        return new

    def bob_step(t, pa, pb):
        new = {}
        for y in questions_b:
            gains = {}
            for b in answers_b:
                acc = np.zeros((d, d), dtype=complex)
                for (x, yq), w in mu:
                    if yq != y:
                        continue
                    for a in answers_a:
                        if pred[(x, y)][(a, b)]:
                            acc = acc + w * (t.conj().T @ pa[x][a] @ t).T
                gains[b] = _hermitize(acc)
            new[y] = _best_povm_response(pb[y], gains)
        return new

    def state_step(pa, pb):
        op = np.zeros((d * d, d * d), dtype=complex)
        for (x, y), w in mu:
            for a in answers_a:
                for b in answers_b:
                    if pred[(x, y)][(a, b)]:
                        op = op + w * np.kron(pa[x][a], pb[y][b])
        eigs, vecs = np.linalg.eigh(_hermitize(op))
        psi = vecs[:, -1]
        return psi.reshape(d, d)

    def run(t, pa, pb):
        trajectory = [objective(t, pa, pb)]
        for _ in range(iterations):
            pa = alice_step(t, pa, pb)
            trajectory.append(objective(t, pa, pb))
            pb = bob_step(t, pa, pb)
            trajectory.append(objective(t, pa, pb))
            t = state_step(pa, pb)
            trajectory.append(objective(t, pa, pb))
            if trajectory[-1] - trajectory[-4] < tol:
                break
        for prev, cur in zip(trajectory, trajectory[1:]):
            if cur < prev - 1e-9:
                raise RuntimeError(
                    f"seesaw objective decreased: {prev!r} -> {cur!r}"
                )
        return trajectory, t, pa, pb

    starts = []
    seeds = np.random.SeedSequence(seed).spawn(max(restarts, 0))
    for ss in seeds:
        rng = np.random.default_rng(ss)
        raw = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        t0 = raw / np.linalg.norm(raw)
        pa0 = {x: random_povm(rng, d, len(answers_a)) for x in questions_a}
        pa0 = {
            x: {a: eff[j] for j, a in enumerate(answers_a)} for x, eff in pa0.items()
        }
        pb0 = {y: random_povm(rng, d, len(answers_b)) for y in questions_b}
        pb0 = {
            y: {b: eff[j] for j, b in enumerate(answers_b)} for y, eff in pb0.items()
        }
        starts.append((t0, pa0, pb0))
    if include_classical_start:
        _, det = classical_value(g)
        eye = np.eye(d, dtype=complex)
        zero = np.zeros((d, d), dtype=complex)
        t0 = np.zeros((d, d), dtype=complex)
        t0[0, 0] = 1.0
        pa0 = {
            x: {a: (eye if a == det.maps[0][x] else zero) for a in answers_a}
            for x in questions_a
        }
        pb0 = {
            y: {b: (eye if b == det.maps[1][y] else zero) for b in answers_b}
            for y in questions_b
        }
        starts.append((t0, pa0, pb0))

    best = None
    restart_values = []
    for t0, pa0, pb0 in starts:
        trajectory, t, pa, pb = run(t0, pa0, pb0)
        restart_values.append(trajectory[-1])
        if best is None or trajectory[-1] > best[0]:
            best = (trajectory[-1], trajectory, t, pa, pb)
    value, trajectory, t, pa, pb = best
    strategy = EntangledStrategy.from_state(t, pa, pb)
    return SeesawResult(value, strategy, tuple(trajectory), tuple(restart_values))


# ---------------------------------------------------------------------------
# Phi families


@dataclass(eq=False)
class PhiFamily:
    """Conditioned averaged operators and the states they generate.

    Everything is specific to one free round ``i``, one value of the
    auxiliary variable off that round, and one answer tuple ``z`` on C.
    Keys for the state dictionary: a plain question label, ``BOT`` (an
    anchor-conditioned average), or ``(MIX, x)`` for the keep-or-anchor
    mixture with the table's keep probability.
    """

    table: DepBreakTable
    strategy: EntangledStrategy
    i: int
    omega_minus: tuple
    z: tuple
    p_a: float
    p_b: float
    a_ops: dict
    b_ops: dict
    a_full: dict
    b_full: dict
    a_cond: dict
    b_cond: dict
    phi: dict = field(default_factory=dict)
    gamma: dict = field(default_factory=dict)

    def a_keys(self):
        """Plain question labels (the anchor label may coincide with BOT)."""
        return [x for x in self.table.game.questions[0] if x in self.a_ops]

    def b_keys(self):
        return [y for y in self.table.game.questions[1] if y in self.b_ops]

    def phi_tilde(self, key) -> np.ndarray:
        g = self.gamma[key]
        if g <= _GAMMA_TOL:
            raise ZeroMassError(
                f"state {key!r} has zero normalization for z={self.z!r}"
            )
        return self.phi[key] / g


def _question_sets(g: Game):
    qa = [x for x in g.questions[0]]
    qb = [y for y in g.questions[1]]
    return qa, qb


def _z_assignments(table: DepBreakTable, z: tuple):
    a_assign = {j: z[p][0] for p, j in enumerate(table.C)}
    b_assign = {j: z[p][1] for p, j in enumerate(table.C)}
    return a_assign, b_assign


def _conditional_vec(table, atoms, side: int, predicate) -> dict:
    """Normalized pmf of one player's question vector over filtered atoms."""
    acc: dict = {}
    total = 0.0
    for a in atoms:
        if not predicate(a):
            continue
        w = float(a.weight)
        vec = tuple(r[side] for r in a.x)
        acc[vec] = acc.get(vec, 0.0) + w
        total += w
    if total <= 0:
        raise ZeroMassError("conditioning on an event of probability zero")
    return {v: w / total for v, w in acc.items()}


def _averaged_operator(s: EntangledStrategy, player: int, cond: dict, assignment) -> np.ndarray:
    out = np.zeros((s.d, s.d), dtype=complex)
    for vec, w in cond.items():
        out = out + w * s.coarse_effect(player, vec, assignment)
    return out


def build_phi_family(
    g: Game,
    n: int,
    C,
    s: EntangledStrategy,
    i: int,
    omega_minus: tuple,
    z: tuple,
    *,
    table: DepBreakTable | None = None,
) -> PhiFamily:
    """Averaged measurement operators and conditioned states at ``(i, omega_minus, z)``.

    For each question ``x`` the operator ``A_x`` averages the strategy's
    coarse effect (answers on C fixed to ``z``) over the question vector
    conditioned on the auxiliary variable off round ``i`` and on ``X_i = x``;
    ``A_BOT`` conditions on an anchor question instead, and the mixture key
    blends them with the keep probability.  The states are
    ``sqrt(A) (x) sqrt(B) |psi>``, stored as coefficient matrices, with their
    norms ``gamma``.
    """
    if table is None:
        table = build_table_twoplayer(g, n, C, s)
    if table.strategy is not s:
        raise GameValidationError("table was built for a different strategy")
    if i not in table._pos_free:
        raise GameValidationError(f"round {i} is not a free round of the table")
    for player in range(2):
        anchors = g.anchors.sets[player]
        if BOT in g.questions[player] and frozenset(anchors) != frozenset({BOT}):
            # The anchor-set key would shadow a distinct plain question.
            raise GameValidationError(
                f"question label {BOT!r} requires the anchor set to be exactly "
                f"{{{BOT!r}}}"
            )
    atoms = [a for a in table.atoms if table.omega_minus(a, i) == omega_minus]
    if not atoms:
        raise ZeroMassError("the auxiliary value has probability zero")
    a_assign, b_assign = _z_assignments(table, z)
    qa, qb = _question_sets(g)
    anchors_a, anchors_b = g.anchors.sets[0], g.anchors.sets[1]
    p_a = float(table.p_keep[0])
    p_b = float(table.p_keep[1])

    a_cond: dict = {}
    b_cond: dict = {}
    a_ops: dict = {}
    b_ops: dict = {}
    a_full: dict = {}
    b_full: dict = {}

    def fill(side, cond_map, ops, full, questions, anchors, assign, answers):
        for x in questions:
            try:
                cond = _conditional_vec(
                    table, atoms, side, lambda at, x=x: at.x[i][side] == x
                )
            except ZeroMassError:
                continue
            cond_map[x] = cond
            ops[x] = _averaged_operator(s, side, cond, assign)
            full[x] = {
                a_i: _averaged_operator(s, side, cond, {**assign, i: a_i})
                for a_i in answers
            }
        cond = _conditional_vec(
            table, atoms, side, lambda at: at.x[i][side] in anchors
        )
        cond_map[BOT] = cond
        ops[BOT] = _averaged_operator(s, side, cond, assign)
        full[BOT] = {
            a_i: _averaged_operator(s, side, cond, {**assign, i: a_i})
            for a_i in answers
        }

    fill(0, a_cond, a_ops, a_full, qa, anchors_a, a_assign, g.answers[0])
    fill(1, b_cond, b_ops, b_full, qb, anchors_b, b_assign, g.answers[1])

    for x in qa:
        if x in a_ops:
            a_ops[(MIX, x)] = (1 - p_a) * a_ops[BOT] + p_a * a_ops[x]
    for y in qb:
        if y in b_ops:
            b_ops[(MIX, y)] = (1 - p_b) * b_ops[BOT] + p_b * b_ops[y]

    fam = PhiFamily(
        table=table,
        strategy=s,
        i=i,
        omega_minus=omega_minus,
        z=z,
        p_a=p_a,
        p_b=p_b,
        a_ops=a_ops,
        b_ops=b_ops,
        a_full=a_full,
        b_full=b_full,
        a_cond=a_cond,
        b_cond=b_cond,
    )
    t_mat = s.state_matrix()
    roots_a = {k: psd_sqrt(m) for k, m in a_ops.items()}
    roots_b = {k: psd_sqrt(m) for k, m in b_ops.items()}
    for ka, ra in roots_a.items():
        for kb, rb in roots_b.items():
            mat = ra @ t_mat @ rb.T
            fam.phi[(ka, kb)] = mat
            fam.gamma[(ka, kb)] = float(np.linalg.norm(mat))
    return fam


def _pair_condition(table, i, ka, kb, anchors_a, anchors_b):
    """Membership test for round-i questions matching a (key_a, key_b) pair."""

    def test_side(key, anchors):
        if key == BOT:
            return lambda lab: lab in anchors
        return lambda lab, key=key: lab == key

    ta = test_side(ka, anchors_a)
    tb = test_side(kb, anchors_b)
    return lambda at: ta(at.x[i][0]) and tb(at.x[i][1])


def check_gamma_identity(fam: PhiFamily, atol: float = 1e-10) -> list:
    """gamma^2 equals the conditional probability of ``z`` from the table.

    Checked for every pair of plain-question and anchor keys; the mixture
    keys satisfy the same identity by linearity and are covered by the
    mixing check.
    """
    table = fam.table
    g = table.game
    anchors_a, anchors_b = g.anchors.sets[0], g.anchors.sets[1]
    rows = []
    worst = 0.0
    for ka in fam.a_keys() + [BOT]:
        for kb in fam.b_keys() + [BOT]:
            cond = _pair_condition(table, fam.i, ka, kb, anchors_a, anchors_b)
            try:
                pmf = table.pmf(
                    key=lambda at: at.z,
                    given=lambda at: table.omega_minus(at, fam.i) == fam.omega_minus
                    and cond(at),
                )
            except ZeroMassError:
                continue
            expect = float(pmf.get(fam.z, 0.0))
            got = fam.gamma[(ka, kb)] ** 2
            worst = max(worst, abs(got - expect))
    rows.append(
        CheckRow(
            name="phi-gamma-identity",
            lhs=worst,
            rhs=atol,
            status="ok" if worst <= atol else "violated",
            exact=False,
        )
    )
    return rows


def check_gamma_sum(
    g: Game,
    n: int,
    C,
    s: EntangledStrategy,
    i: int,
    omega_minus: tuple,
    *,
    table: DepBreakTable | None = None,
    atol: float = 1e-10,
) -> CheckRow:
    """Summing gamma^2 over every possible ``z`` returns 1 for each pair."""
    if table is None:
        table = build_table_twoplayer(g, n, C, s)
    c = table.C
    answer_pairs = [
        [(a, b) for a in g.answers[0] for b in g.answers[1]] for _ in c
    ]
    worst = 0.0
    totals: dict = {}
    for z in itertools.product(*answer_pairs):
        fam = build_phi_family(g, n, C, s, i, omega_minus, z, table=table)
        if not totals:
            totals = {k: 0.0 for k in fam.gamma}
        for k, gam in fam.gamma.items():
            totals[k] += gam**2
    for k, total in totals.items():
        worst = max(worst, abs(total - 1.0))
    return CheckRow(
        name="phi-gamma-sum",
        lhs=worst,
        rhs=atol,
        status="ok" if worst <= atol else "violated",
        exact=False,
    )


def check_mixing_identity(fam: PhiFamily, atol: float = 1e-10) -> CheckRow:
    """The mixture operators match a direct table conditioning.

    Conditioning the table on round i's auxiliary value being the
    keep-or-anchor reveal of ``x`` must average the coarse effect to
    ``(1 - p) A_BOT + p A_x`` — the keep probability mixture.
    """
    table = fam.table
    worst = 0.0
    atoms = [
        a for a in table.atoms if table.omega_minus(a, fam.i) == fam.omega_minus
    ]
    a_assign, b_assign = _z_assignments(table, fam.z)
    for side, ops, assign, d_side in (
        (0, fam.a_ops, a_assign, "A"),
        (1, fam.b_ops, b_assign, "B"),
    ):
        for key, expected in ops.items():
            if not (isinstance(key, tuple) and key and key[0] == MIX):
                continue
            x = key[1]
            try:
                cond = _conditional_vec(
                    table,
                    atoms,
                    side,
                    lambda at: table.omega_at(at, fam.i) == (d_side, (MIX, x)),
                )
            except ZeroMassError:
                continue
            direct = _averaged_operator(fam.strategy, side, cond, assign)
            worst = max(worst, float(np.max(np.abs(direct - expected))))
    return CheckRow(
        name="phi-mixing-identity",
        lhs=worst,
        rhs=atol,
        status="ok" if worst <= atol else "violated",
        exact=False,
    )


def _hat_povm(full: Mapping, coarse: np.ndarray, answer_labels) -> dict:
    """Conjugate the finer averaged effects by the coarse pseudo-inverse root.

    The effects sum to the projector onto the coarse operator's support; the
    missing orthocomplement is assigned to the first answer label so the
    result is an exact POVM.
    """
    inv = psd_power(coarse, -0.5)
    out = {a: _hermitize(inv @ full[a] @ inv) for a in answer_labels}
    total = sum(out.values())
    d = coarse.shape[0]
    first = answer_labels[0]
    out[first] = out[first] + (np.eye(d) - total)
    return out


def check_measurement_consistency(fam: PhiFamily, atol: float = 1e-10) -> CheckRow:
    """Measuring the conditioned states reproduces the strategy's answers.

    For each question pair, measuring ``Phi~_{x,y}`` with the conjugated
    round-i POVMs gives exactly the conditional answer distribution
    ``P(a_i, b_i | omega_minus, z, x, y)`` computed directly from the
    averaged operators.
    """
    g = fam.table.game
    worst = 0.0
    for x in fam.a_keys():
        hat_a = _hat_povm(fam.a_full[x], fam.a_ops[x], tuple(g.answers[0]))
        for y in fam.b_keys():
            gam = fam.gamma[(x, y)]
            if gam <= _GAMMA_TOL:
                continue
            hat_b = _hat_povm(fam.b_full[y], fam.b_ops[y], tuple(g.answers[1]))
            phi = fam.phi[(x, y)] / gam
            for a in g.answers[0]:
                for b in g.answers[1]:
                    via_phi = float(
                        np.trace(phi.conj().T @ hat_a[a] @ phi @ hat_b[b].T).real
                    )
                    direct = fam.strategy.born(fam.a_full[x][a], fam.b_full[y][b])
                    direct /= gam**2
                    worst = max(worst, abs(via_phi - direct))
    return CheckRow(
        name="phi-measurement-consistency",
        lhs=worst,
        rhs=atol,
        status="ok" if worst <= atol else "violated",
        exact=False,
    )


# ---------------------------------------------------------------------------
# classical-quantum block states


@dataclass(eq=False)
class CQBundle:
    """The four block states of the conditioning argument.

    ``xi`` carries classical registers (auxiliary variable, first player's
    question vector, answers on C) and the two quantum registers; ``pi`` is
    the second player's analogue.  The ``*_w`` variants are conditioned on
    the C rounds being won.
    """

    xi: CQState
    xi_w: CQState
    pi: CQState
    pi_w: CQState
    pr_win: float
    table: DepBreakTable
    strategy: EntangledStrategy
    d: int


def build_cq_states(
    g: Game,
    n: int,
    C,
    s: EntangledStrategy,
    *,
    table: DepBreakTable | None = None,
) -> CQBundle:
    """Assemble the block states used by the conditioning argument.

    For each (auxiliary value, question vector, z): the block is the joint
    weight times the projector onto ``sqrt(own coarse effect) (x)
    sqrt(other player's averaged effect) |psi>``.  Tracing the quantum part
    recovers the table's classical distribution exactly.
    """
    if table is None:
        table = build_table_twoplayer(g, n, C, s)
    if table.strategy is not s:
        raise GameValidationError("table was built for a different strategy")
    if not table.C:
        raise GameValidationError("the construction needs at least one checked round")
    t_mat = s.state_matrix()
    d = s.d

    by_omega: dict = {}
    for at in table.atoms:
        by_omega.setdefault(table.omega_full(at), []).append(at)

    xi_blocks: dict = {}
    pi_blocks: dict = {}
    win_keys: set = set()
    pr_win = float(table.pr_win())

    for omega, atoms in by_omega.items():
        p_omega = sum(float(a.weight) for a in atoms)
        x_cond = _conditional_vec(table, atoms, 0, lambda a: True)
        y_cond = _conditional_vec(table, atoms, 1, lambda a: True)
        z_values = sorted({a.z for a in atoms})
        win_by_z = {a.z: a.win for a in atoms}
        for z in z_values:
            a_assign, b_assign = _z_assignments(table, z)
            b_avg = _averaged_operator(s, 1, y_cond, b_assign)
            root_b = psd_sqrt(b_avg)
            a_avg = _averaged_operator(s, 0, x_cond, a_assign)
            root_a = psd_sqrt(a_avg)
            for x_vec, wx in x_cond.items():
                u = psd_sqrt(s.coarse_effect(0, x_vec, a_assign)) @ t_mat @ root_b.T
                vec = u.reshape(-1)
                block = (p_omega * wx) * np.outer(vec, vec.conj())
                key = (omega, x_vec, z)
                xi_blocks[key] = block
                if win_by_z[z]:
                    win_keys.add(key)
            for y_vec, wy in y_cond.items():
                u = root_a @ t_mat @ psd_sqrt(s.coarse_effect(1, y_vec, b_assign)).T
                vec = u.reshape(-1)
                pi_blocks[(omega, y_vec, z)] = (p_omega * wy) * np.outer(
                    vec, vec.conj()
                )

    xi = CQState(xi_blocks, validate=False)
    pi = CQState(pi_blocks, validate=False)
    won_pairs = {(k[0], k[2]) for k in win_keys}

    def won(key):
        omega, _vec, z = key
        return (omega, z) in won_pairs

    xi_w = xi.conditioned(won)
    pi_w = pi.conditioned(won)
    return CQBundle(
        xi=xi, xi_w=xi_w, pi=pi, pi_w=pi_w, pr_win=pr_win, table=table,
        strategy=s, d=d,
    )


def check_cq_marginal(bundle: CQBundle, atol: float = 1e-10) -> CheckRow:
    """Tracing the quantum registers reproduces the table's joint pmf."""
    table = bundle.table
    worst = 0.0
    for side, state in ((0, bundle.xi), (1, bundle.pi)):
        pmf = table.pmf(
            key=lambda at: (
                table.omega_full(at),
                tuple(r[side] for r in at.x),
                at.z,
            )
        )
        got = state.pmf()
        keys = set(pmf) | set(got)
        for k in keys:
            worst = max(worst, abs(float(pmf.get(k, 0.0)) - got.get(k, 0.0)))
    return CheckRow(
        name="cq-classical-marginal",
        lhs=worst,
        rhs=atol,
        status="ok" if worst <= atol else "violated",
        exact=False,
    )


def check_cq_domination(bundle: CQBundle, slack: float = 1e-9) -> CheckRow:
    """Winning-conditioned blocks, rescaled by Pr(W), sit below the originals."""
    lowest = 0.0
    for plain, conditioned in ((bundle.xi, bundle.xi_w), (bundle.pi, bundle.pi_w)):
        for key, block in conditioned.blocks.items():
            diff = plain.block(key) - bundle.pr_win * block
            lowest = min(lowest, float(np.linalg.eigvalsh(_hermitize(diff))[0]))
    worst = -lowest
    return CheckRow(
        name="cq-state-domination",
        lhs=worst,
        rhs=slack,
        status="ok" if worst <= slack else "violated",
        exact=False,
    )


def check_cq_conditioning_entropy(bundle: CQBundle, atol: float = 1e-8) -> CheckRow:
    """S(conditioned || original) is exactly log2(1 / Pr W)."""
    lhs = cq_relative_entropy(bundle.xi_w, bundle.xi)
    rhs = math.log2(1.0 / bundle.pr_win) + atol
    return CheckRow(
        name="cq-conditioning-entropy",
        lhs=lhs,
        rhs=rhs,
        status="ok" if lhs <= rhs else "violated",
        exact=False,
    )


def check_sinf_bound(bundle: CQBundle, slack: float = 1e-6) -> CheckRow:
    """Per-(omega, z) max-relative-entropy bound against the answer count.

    Relative to the product of the question-vector marginal and the second
    quantum register's marginal, conditioning on (omega, z) costs at most
    ``|C| log2(|A| |B|)`` bits in max-relative entropy.  This is checked
    pointwise on every positive-probability (omega, z).
    """
    table = bundle.table
    g = table.game
    d = bundle.d
    bound = len(table.C) * math.log2(len(g.answers[0]) * len(g.answers[1]))
    by_omega: dict = {}
    for key, block in bundle.xi.blocks.items():
        omega, x_vec, z = key
        by_omega.setdefault(omega, []).append((x_vec, z, block))
    worst = -math.inf
    for omega, rows in by_omega.items():
        p_omega = sum(float(np.trace(b).real) for _, _, b in rows)
        rho_b = np.zeros((d, d), dtype=complex)
        traced: dict = {}
        x_mass: dict = {}
        for x_vec, z, block in rows:
            tb = partial_trace(block, (d, d), 1)
            traced[(x_vec, z)] = tb
            rho_b = rho_b + tb
            x_mass[x_vec] = x_mass.get(x_vec, 0.0) + float(np.trace(block).real)
        rho_b = rho_b / p_omega
        z_values = sorted({z for _, z, _ in rows})
        for z in z_values:
            p_z = sum(
                float(np.trace(b).real) for (xv, zz), b in traced.items() if zz == z
            )
            if p_z <= EIG_FLOOR:
                continue
            rho_blocks = {
                xv: traced[(xv, zz)] / p_omega
                for (xv, zz) in traced
                if zz == z
            }
            sigma_blocks = {
                xv: (x_mass[xv] / p_omega) * rho_b for xv in rho_blocks
            }
            rho = CQState(
                {k: v / (p_z / p_omega) for k, v in rho_blocks.items()},
                validate=False,
            )
            sigma = CQState(sigma_blocks, validate=False)
            val = cq_max_relative_entropy(rho, sigma)
            worst = max(worst, val)
    return CheckRow(
        name="cq-sinf-bound",
        lhs=worst,
        rhs=bound + slack,
        status="ok" if worst <= bound + slack else "violated",
        exact=False,
    )


# ---------------------------------------------------------------------------
# standalone identities


def check_ando(schmidt, x: np.ndarray, y: np.ndarray, atol: float = 1e-10) -> CheckRow:
    """Product-observable expectation as a one-register trace formula.

    For a state in canonical Schmidt form, ``<psi| X (x) Y |psi>`` equals
    ``Tr(X sqrt(rho) Y^T sqrt(rho))`` with ``rho`` the reduced state and the
    transpose taken in the Schmidt basis.  The left side is evaluated from
    the explicit Kronecker product, the right side through an independent
    eigendecomposition square root.
    """
    s = np.asarray(schmidt, dtype=float)
    t = np.diag(s.astype(complex))
    psi = t.reshape(-1)
    lhs = float((psi.conj() @ np.kron(x, y) @ psi).real)
    rho = t @ t.conj().T
    root = psd_sqrt(rho)
    rhs = float(np.trace(np.asarray(x, dtype=complex) @ root @ np.asarray(y, dtype=complex).T @ root).real)
    diff = abs(lhs - rhs)
    return CheckRow(
        name="ando-identity",
        lhs=diff,
        rhs=atol,
        status="ok" if diff <= atol else "violated",
        exact=False,
    )


def check_anchoring_consistency(
    g: Game, s: EntangledStrategy, alpha, atol: float = 1e-10
) -> list:
    """Anchoring a game rescales an extended strategy's value exactly.

    Extending a base-game strategy with default answers on the anchor
    questions wins the anchored game with probability
    ``1 - (1-alpha)^2 (1 - v)`` where ``v`` is the base value; this also
    certifies that the anchored game's entangled value is at least that
    prediction.
    """
    anchored = anchor_transform(g, alpha)
    ext = extend_with_default_answers(s, anchored)
    got = entangled_value_eval(anchored, ext)
    base = entangled_value_eval(g, s)
    expect = float(predicted_value(base, float(alpha), 2))
    diff = abs(got - expect)
    rows = [
        CheckRow(
            name="anchored-extension-value",
            lhs=diff,
            rhs=atol,
            status="ok" if diff <= atol else "violated",
            exact=False,
        ),
        CheckRow(
            name="anchored-value-lower-bound",
            lhs=expect,
            rhs=got + atol,
            status="ok" if expect <= got + atol else "violated",
            exact=False,
        ),
    ]
    return rows


# ---------------------------------------------------------------------------
# quantum rounding


@dataclass(eq=False)
class QuantumRoundingReport:
    """Value of the extracted strategy and the residuals of the comparison.

    ``value`` is the exact winning probability of the protocol that samples
    (auxiliary value, z) conditioned on W, aligns the anchor-conditioned
    state with the local Uhlmann unitaries, and measures the conjugated
    round-i POVMs.  ``pr_wi_given_w`` is the probability that round i's
    predicate passes conditioned on W.  ``alignment`` and ``skew`` are the
    averaged trace-distance and total-variation residuals that make

        pr_wi_given_w <= value + alignment + skew

    a theorem rather than an estimate; ``rows`` records it plus the
    reference-rate comparisons.
    """

    value: float
    pr_wi_given_w: float
    alignment: float
    skew: float
    i: int
    delta: float
    alpha: float
    rows: list = field(default_factory=list)


def _pr_round_win_given_w(table: DepBreakTable, s: EntangledStrategy, i: int) -> float:
    """Pr(round i's predicate passes | W) for a strategy with the hook."""
    g = table.game
    coords = tuple(sorted(set(table.C) | {i}))
    pos_i = coords.index(i)
    c_pos = [coords.index(j) for j in table.C]
    num = 0.0
    den = 0.0
    cache: dict = {}
    for at in table.atoms:
        if not at.win:
            continue
        w = float(at.weight)
        den += w
        key = (at.x, at.z)
        if key not in cache:
            x_vec = tuple(r[0] for r in at.x)
            y_vec = tuple(r[1] for r in at.x)
            dist = s.answer_distribution_on(x_vec, y_vec, coords)
            mass_z = 0.0
            mass_win = 0.0
            for z_ext, p in dist.items():
                if tuple(z_ext[p_] for p_ in c_pos) != at.z:
                    continue
                mass_z += p
                if g.predicate(at.x[i], z_ext[pos_i]):
                    mass_win += p
            cache[key] = mass_win / mass_z if mass_z > 0 else 0.0
        num += w * cache[key]
    if den <= 0:
        raise ZeroMassError("Pr(W) is zero")
    return num / den


def quantum_rounding_value(
    g: Game,
    n: int,
    C,
    s: EntangledStrategy,
    i: int,
    *,
    table: DepBreakTable | None = None,
) -> QuantumRoundingReport:
    """Evaluate the extracted one-round entangled strategy exactly.

    The protocol: sample the off-round auxiliary value and the C answers
    conditioned on winning; both players share the anchor-conditioned state
    for that sample; on questions (x, y) they apply the Uhlmann unitaries
    aligning it with the x- (resp. y-) conditioned states and measure the
    conjugated round-i POVMs.  The report carries the exactly-evaluated
    value together with alignment and skew residuals such that
    ``Pr(W_i | W) <= value + alignment + skew``.
    """
    if table is None:
        table = build_table_twoplayer(g, n, C, s)
    if table.strategy is not s:
        raise GameValidationError("table was built for a different strategy")
    if i not in table._pos_free:
        raise GameValidationError(f"round {i} must be a free round")
    if not table.C:
        raise GameValidationError("conditioning set C must be nonempty")

    mu = [((x, y), float(w)) for (x, y), w in g.mu.support_items()]
    winning = {
        (x, y): [
            (a, b)
            for a in g.answers[0]
            for b in g.answers[1]
            if g.predicate((x, y), (a, b))
        ]
        for (x, y), _ in mu
    }

    shared = table.pmf(
        key=lambda at: (table.omega_minus(at, i), at.z),
        given=lambda at: at.win,
    )
    cond_pairs = {}
    for (omega, z), weight in shared.items():
        cond_pairs[(omega, z)] = float(weight)

    pair_q = table.pmf(
        key=lambda at: (table.omega_minus(at, i), at.z, at.x[i]),
        given=lambda at: at.win,
    )

    value = 0.0
    alignment = 0.0
    skew = 0.0
    gamma_conc = 0.0
    gamma_mean = 0.0
    align_x = align_y = align_xy = align_combined = 0.0

    for (omega, z), weight in sorted(cond_pairs.items(), key=lambda kv: repr(kv[0])):
        fam = build_phi_family(g, n, C, s, i, omega, z, table=table)
        if fam.gamma[(BOT, BOT)] <= _GAMMA_TOL:
            raise ZeroMassError(
                "the anchor-conditioned state has zero mass at a winning sample"
            )
        ref = fam.phi_tilde((BOT, BOT))
        units_a = {}
        units_b = {}
        for x in fam.a_keys():
            if fam.gamma[(x, BOT)] > _GAMMA_TOL:
                units_a[x] = uhlmann_unitary(
                    ref, fam.phi_tilde((x, BOT)), "left"
                ).unitary
            else:
                units_a[x] = np.eye(s.d, dtype=complex)
        for y in fam.b_keys():
            if fam.gamma[(BOT, y)] > _GAMMA_TOL:
                units_b[y] = uhlmann_unitary(
                    ref, fam.phi_tilde((BOT, y)), "right"
                ).unitary
            else:
                units_b[y] = np.eye(s.d, dtype=complex)

        hat_a = {
            x: _hat_povm(fam.a_full[x], fam.a_ops[x], tuple(g.answers[0]))
            for x in fam.a_keys()
        }
        hat_b = {
            y: _hat_povm(fam.b_full[y], fam.b_ops[y], tuple(g.answers[1]))
            for y in fam.b_keys()
        }

        local_value = 0.0
        local_align = 0.0
        for (x, y), w in mu:
            theta = units_a[x] @ ref @ units_b[y].T
            win = 0.0
            for a, b in winning[(x, y)]:
                win += float(
                    np.trace(theta.conj().T @ hat_a[x][a] @ theta @ hat_b[y][b].T).real
                )
            local_value += w * win
            gam = fam.gamma[(x, y)]
            if gam > _GAMMA_TOL:
                target = fam.phi[(x, y)] / gam
                overlap = abs(np.vdot(target.reshape(-1), theta.reshape(-1)))
                local_align += w * math.sqrt(max(0.0, 1.0 - min(1.0, overlap) ** 2))

        # question-pair skew between the winning-conditioned pair law and mu
        tv = 0.0
        seen = set()
        for (x, y), w in mu:
            got = pair_q.get((omega, z, (x, y)), 0.0)
            tv += abs(float(got) / weight - w)
            seen.add((x, y))
        for (om2, z2, pair), got in pair_q.items():
            if om2 == omega and z2 == z and pair not in seen:
                tv += float(got) / weight
        tv /= 2.0

        value += weight * local_value
        alignment += weight * local_align
        skew += weight * tv

        # report-only residual rates
        g_bb = fam.gamma[(BOT, BOT)] ** 2
        for (x, y), w in mu:
            gamma_conc += weight * w * abs(fam.gamma[(x, y)] ** 2 - g_bb)
            gamma_mean += weight * w * fam.gamma[(x, y)] ** 2
            theta = units_a[x] @ ref @ units_b[y].T
            if fam.gamma[(x, y)] > _GAMMA_TOL:
                diff = theta - fam.phi_tilde((x, y))
                align_combined += weight * w * float(np.linalg.norm(diff)) ** 2
        mu_x: dict = {}
        mu_y: dict = {}
        for (x, y), w in mu:
            mu_x[x] = mu_x.get(x, 0.0) + w
            mu_y[y] = mu_y.get(y, 0.0) + w
        for x, w in mu_x.items():
            if fam.gamma[(x, BOT)] > _GAMMA_TOL:
                diff = units_a[x] @ ref - fam.phi_tilde((x, BOT))
                align_x += weight * w * float(np.linalg.norm(diff)) ** 2
        for y, w in mu_y.items():
            if fam.gamma[(BOT, y)] > _GAMMA_TOL:
                diff = ref @ units_b[y].T - fam.phi_tilde((BOT, y))
                align_y += weight * w * float(np.linalg.norm(diff)) ** 2
        for (x, y), w in mu:
            ka, kb = (MIX, x), y
            gam_from = fam.gamma[(ka, kb)]
            gam_to = fam.gamma[(ka, BOT)]
            if gam_from > _GAMMA_TOL and gam_to > _GAMMA_TOL:
                v_xy = uhlmann_unitary(
                    fam.phi[(ka, kb)] / gam_from,
                    fam.phi[(ka, BOT)] / gam_to,
                    "right",
                ).unitary
                diff = (fam.phi[(ka, kb)] / gam_from) @ v_xy.T - fam.phi[
                    (ka, BOT)
                ] / gam_to
                align_xy += weight * w * float(np.linalg.norm(diff)) ** 2

    pr_wi = _pr_round_win_given_w(table, s, i)
    delta = table.delta()
    alpha = float(table.alpha)

    rows = []
    rhs = value + alignment + skew
    rows.append(
        CheckRow(
            name=f"quantum-rounding-gap[i={i}]",
            lhs=pr_wi,
            rhs=rhs + 1e-9,
            status="ok" if pr_wi <= rhs + 1e-9 else "violated",
            exact=False,
        )
    )
    rows.append(
        CheckRow(
            name=f"quantum-extracted-value[i={i}]",
            lhs=value,
            rhs=pr_wi,
            status="report",
            exact=False,
        )
    )
    ref_rate = delta**0.25 / alpha**2
    rows.append(
        CheckRow(
            name="uhlmann-alignment-x",
            lhs=align_x,
            rhs=ref_rate,
            status="report",
            exact=False,
        )
    )
    rows.append(
        CheckRow(
            name="uhlmann-alignment-y",
            lhs=align_y,
            rhs=ref_rate,
            status="report",
            exact=False,
        )
    )
    rows.append(
        CheckRow(
            name="uhlmann-alignment-xy",
            lhs=align_xy,
            rhs=ref_rate,
            status="report",
            exact=False,
        )
    )
    rows.append(
        CheckRow(
            name="state-alignment-combined",
            lhs=align_combined,
            rhs=delta**0.25 / alpha**4,
            status="report",
            exact=False,
        )
    )
    rows.append(
        CheckRow(
            name="gamma-concentration",
            lhs=gamma_conc,
            rhs=ref_rate * max(gamma_mean, EIG_FLOOR),
            status="report",
            exact=False,
        )
    )
    return QuantumRoundingReport(
        value=value,
        pr_wi_given_w=pr_wi,
        alignment=alignment,
        skew=skew,
        i=i,
        delta=delta,
        alpha=alpha,
        rows=rows,
    )


def _conditional_stability_row(table: DepBreakTable, i: int) -> CheckRow:
    """Averaged distance between pair-conditioned and anchor-conditioned laws.

    Restricted to winning (auxiliary value, z) pairs, compares
    ``P(omega_-i, z | x, y)`` with ``P(omega_-i, z | both anchored)``,
    averaged over the question pair; reported against the reference rate
    ``sqrt(delta)/alpha^2 * Pr(W)``.
    """
    g = table.game
    anchors_a, anchors_b = g.anchors.sets[0], g.anchors.sets[1]
    win_pairs = {
        (table.omega_minus(at, i), at.z) for at in table.atoms if at.win
    }
    anchor_law = table.pmf(
        key=lambda at: (table.omega_minus(at, i), at.z),
        given=lambda at: at.x[i][0] in anchors_a and at.x[i][1] in anchors_b,
    )
    total = 0.0
    for pair, w in table.game.mu.support_items():
        law = table.pmf(
            key=lambda at: (table.omega_minus(at, i), at.z),
            given=lambda at: at.x[i] == pair,
        )
        dist = 0.0
        for key in win_pairs:
            dist += abs(float(law.get(key, 0.0)) - float(anchor_law.get(key, 0.0)))
        total += float(w) * dist
    delta = table.delta()
    alpha = float(table.alpha)
    ref = math.sqrt(delta) / alpha**2 * float(table.pr_win())
    return CheckRow(
        name="conditional-stability",
        lhs=total,
        rhs=ref,
        status="report",
        exact=False,
    )


# ---------------------------------------------------------------------------
# suite aggregators (consumed by the CLI)


def phi_suite_rows(
    g: Game,
    n: int,
    C,
    s: EntangledStrategy,
    *,
    table: DepBreakTable | None = None,
    seed: int = 0,
) -> list:
    """State-family and block-state checks on every winning sample."""
    if table is None:
        table = build_table_twoplayer(g, n, C, s)
    free = [j for j in range(n) if j not in table.C]
    i = free[0]
    shared = table.pmf(
        key=lambda at: (table.omega_minus(at, i), at.z),
        given=lambda at: at.win,
    )
    rows: list = []
    worst_gamma = worst_mix = worst_meas = 0.0
    for omega, z in sorted(shared, key=repr):
        fam = build_phi_family(g, n, C, s, i, omega, z, table=table)
        worst_gamma = max(worst_gamma, check_gamma_identity(fam)[0].lhs)
        worst_mix = max(worst_mix, check_mixing_identity(fam).lhs)
        worst_meas = max(worst_meas, check_measurement_consistency(fam).lhs)
    for name, worst, atol in (
        ("phi-gamma-identity", worst_gamma, 1e-10),
        ("phi-mixing-identity", worst_mix, 1e-10),
        ("phi-measurement-consistency", worst_meas, 1e-10),
    ):
        rows.append(
            CheckRow(
                name=name,
                lhs=worst,
                rhs=atol,
                status="ok" if worst <= atol else "violated",
                exact=False,
            )
        )
    omega0 = sorted(shared, key=repr)[0][0]
    rows.append(check_gamma_sum(g, n, C, s, i, omega0, table=table))
    bundle = build_cq_states(g, n, C, s, table=table)
    rows.append(check_cq_marginal(bundle))
    rows.append(check_cq_domination(bundle))
    rows.append(check_cq_conditioning_entropy(bundle))
    rows.append(check_sinf_bound(bundle))
    rng = np.random.default_rng(seed)
    worst_ando = 0.0
    for _ in range(20):
        lam = rng.dirichlet(np.ones(s.d))
        x = rng.normal(size=(s.d, s.d)) + 1j * rng.normal(size=(s.d, s.d))
        y = rng.normal(size=(s.d, s.d)) + 1j * rng.normal(size=(s.d, s.d))
        row = check_ando(np.sqrt(lam), _hermitize(x), _hermitize(y))
        worst_ando = max(worst_ando, row.lhs)
    rows.append(
        CheckRow(
            name="ando-identity",
            lhs=worst_ando,
            rhs=1e-10,
            status="ok" if worst_ando <= 1e-10 else "violated",
            exact=False,
        )
    )
    rows.append(_conditional_stability_row(table, i))
    return rows


def rounding_suite_rows(
    g: Game,
    n: int,
    C,
    s: EntangledStrategy,
    i: int | None = None,
    *,
    table: DepBreakTable | None = None,
) -> list:
    if table is None:
        table = build_table_twoplayer(g, n, C, s)
    free = [j for j in range(n) if j not in table.C]
    rounds = free if i is None else [i]
    rows: list = []
    for j in rounds:
        rows.extend(quantum_rounding_value(g, n, C, s, j, table=table).rows)
    return rows
