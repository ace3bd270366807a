"""File formats: game JSON, strategy JSON, and CSV report emission.

Games are JSON documents with fields ``k``, ``questions``, ``answers``,
``mu``, ``predicate`` and optionally ``anchors`` / ``default_v``.  Every
rational is a ``"num/den"`` string — floats are rejected wherever exactness
matters.  Labels are strings; a tuple label (as produced by game repetition)
is serialized as an ordered array of its parts, never as a concatenated
string.

The predicate is a table of ``{x, a, v}`` entries.  A document may omit
entries only when it carries ``default_v``; without it, an incomplete table
is rejected as partial rather than silently padded with zeros.

Strategies are JSON documents with ``d``, ``schmidt_weights`` (the reduced
state's eigenvalues, floats summing to 1) and per-player ``povms``.  POVM
collections are objects keyed by the question label when every label is a
string; tuple-labelled strategies use an equivalent explicit list form.
Matrices are row-major nested arrays of ``[re, im]`` pairs.

CSV output is byte-stable: fixed header, comma separation, ``\\n`` line
terminator, UTF-8, fractions as ``"num/den"``, floats via ``repr``.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import re
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .games import AnchorSets, Distribution, Game, GameValidationError, validate_game
from .qinfo import QuantumValidationError
from .quantum import EntangledStrategy

__all__ = [
    "FileFormatError",
    "parse_fraction",
    "format_fraction",
    "label_from_json",
    "label_to_json",
    "game_to_dict",
    "game_from_dict",
    "load_game",
    "save_game",
    "strategy_to_dict",
    "strategy_from_dict",
    "load_strategy",
    "save_strategy",
    "format_cell",
    "csv_text",
    "write_csv",
]


class FileFormatError(ValueError):
    """A document failed to parse; the message carries the field path."""


def _fail(where: str, message: str) -> "FileFormatError":
    return FileFormatError(f"{where}: {message}")


_RATIONAL = re.compile(r"^[+-]?\d+(?:/[1-9]\d*)?$")


def parse_fraction(node, where: str) -> Fraction:
    """Parse a ``"num/den"`` (or integer) string into an exact Fraction.

    Decimal notation is rejected on purpose: ``"0.1"`` does not denote the
    rational the author probably intended, so exact inputs must be written
    as integer ratios.
    """
    if isinstance(node, bool) or not isinstance(node, (str, int)):
        raise _fail(where, f"expected a \"num/den\" string, got {node!r}")
    if isinstance(node, str) and not _RATIONAL.match(node):
        raise _fail(where, f"bad rational {node!r} (expected \"num/den\")")
    return Fraction(node)


def format_fraction(value: Fraction) -> str:
    return str(Fraction(value))


def label_from_json(node, where: str):
    if isinstance(node, str):
        return node
    if isinstance(node, list):
        return tuple(
            label_from_json(part, f"{where}[{idx}]") for idx, part in enumerate(node)
        )
    raise _fail(where, f"labels are strings or arrays of labels, got {node!r}")


def label_to_json(label):
    if isinstance(label, str):
        return label
    if isinstance(label, tuple):
        return [label_to_json(part) for part in label]
    raise FileFormatError(f"cannot serialize label {label!r}")


def _label_sort_key(label):
    return json.dumps(label_to_json(label), ensure_ascii=False)


def _alphabets_from_json(node, k: int, where: str) -> tuple:
    if not isinstance(node, list) or len(node) != k:
        raise _fail(where, f"expected an array of {k} alphabets")
    out = []
    for t, alphabet in enumerate(node):
        if not isinstance(alphabet, list) or not alphabet:
            raise _fail(f"{where}[{t}]", "expected a nonempty array of labels")
        out.append(
            tuple(
                label_from_json(lab, f"{where}[{t}][{j}]")
                for j, lab in enumerate(alphabet)
            )
        )
    return tuple(out)


def _tuple_from_json(node, k: int, where: str) -> tuple:
    if not isinstance(node, list) or len(node) != k:
        raise _fail(where, f"expected an array of {k} labels")
    return tuple(label_from_json(lab, f"{where}[{t}]") for t, lab in enumerate(node))


def game_from_dict(doc, *, where: str = "game") -> Game:
    """Build and validate a Game from a parsed JSON document."""
    if not isinstance(doc, Mapping):
        raise _fail(where, "expected a JSON object")
    known = {"k", "questions", "answers", "mu", "predicate", "anchors", "default_v"}
    for key in doc:
        if key not in known:
            raise _fail(f"{where}.{key}", "unknown field")
    for key in ("k", "questions", "answers", "mu", "predicate"):
        if key not in doc:
            raise _fail(f"{where}.{key}", "missing required field")
    k = doc["k"]
    if isinstance(k, bool) or not isinstance(k, int) or k < 2:
        raise _fail(f"{where}.k", f"expected an integer >= 2, got {k!r}")
    questions = _alphabets_from_json(doc["questions"], k, f"{where}.questions")
    answers = _alphabets_from_json(doc["answers"], k, f"{where}.answers")

    if not isinstance(doc["mu"], list) or not doc["mu"]:
        raise _fail(f"{where}.mu", "expected a nonempty array of {x, p} entries")
    pmf = {}
    for idx, entry in enumerate(doc["mu"]):
        here = f"{where}.mu[{idx}]"
        if not isinstance(entry, Mapping) or set(entry) != {"x", "p"}:
            raise _fail(here, "expected an object with exactly the fields x and p")
        x = _tuple_from_json(entry["x"], k, f"{here}.x")
        if x in pmf:
            raise _fail(f"{here}.x", f"duplicate question tuple {x!r}")
        pmf[x] = parse_fraction(entry["p"], f"{here}.p")

    default_v = None
    if "default_v" in doc:
        if doc["default_v"] not in (0, 1):
            raise _fail(f"{where}.default_v", f"expected 0 or 1, got {doc['default_v']!r}")
        default_v = bool(doc["default_v"])

    if not isinstance(doc["predicate"], list):
        raise _fail(f"{where}.predicate", "expected an array of {x, a, v} entries")
    table: dict = {}
    for idx, entry in enumerate(doc["predicate"]):
        here = f"{where}.predicate[{idx}]"
        if not isinstance(entry, Mapping) or set(entry) != {"x", "a", "v"}:
            raise _fail(here, "expected an object with exactly the fields x, a, v")
        x = _tuple_from_json(entry["x"], k, f"{here}.x")
        a = _tuple_from_json(entry["a"], k, f"{here}.a")
        if entry["v"] not in (0, 1):
            raise _fail(f"{here}.v", f"expected 0 or 1, got {entry['v']!r}")
        if (x, a) in table and table[(x, a)] != bool(entry["v"]):
            raise _fail(here, f"conflicting verdicts for {(x, a)!r}")
        table[(x, a)] = bool(entry["v"])

    n_questions = 1
    n_answers = 1
    for t in range(k):
        n_questions *= len(questions[t])
        n_answers *= len(answers[t])
    if default_v is None and len(table) < n_questions * n_answers:
        raise _fail(
            f"{where}.predicate",
            f"partial table ({len(table)} of {n_questions * n_answers} entries) "
            "and no default_v",
        )

    anchors = None
    if "anchors" in doc:
        node = doc["anchors"]
        if not isinstance(node, list) or len(node) != k:
            raise _fail(f"{where}.anchors", f"expected an array of {k} label arrays")
        sets = []
        for t, labs in enumerate(node):
            if not isinstance(labs, list):
                raise _fail(f"{where}.anchors[{t}]", "expected an array of labels")
            sets.append(
                frozenset(
                    label_from_json(lab, f"{where}.anchors[{t}][{j}]")
                    for j, lab in enumerate(labs)
                )
            )
        anchors = AnchorSets(tuple(sets))

    fallback = bool(default_v) if default_v is not None else False

    def predicate(x, a, _table=table, _fallback=fallback):
        return _table.get((x, a), _fallback)

    # Shape problems above are file-format errors; from here on a failure
    # means the document described a mathematically invalid game, which
    # surfaces as GameValidationError so callers can tell the two apart.
    game = Game(
        k=k,
        questions=questions,
        answers=answers,
        mu=Distribution(pmf),
        predicate=predicate,
        anchors=anchors,
    )
    validate_game(game)
    return game


def game_to_dict(g: Game, *, predicate_limit: int = 10**6) -> dict:
    """Serialize a game, materializing its predicate as a table of wins.

    Only winning entries are stored, with ``default_v: 0`` covering the rest;
    the full question x answer product is swept, so ``predicate_limit``
    bounds the work.
    """
    n_cells = 1
    for t in range(g.k):
        n_cells *= len(g.questions[t]) * len(g.answers[t])
    if n_cells > predicate_limit:
        raise GameValidationError(
            f"predicate table holds {n_cells} cells, over the limit {predicate_limit}"
        )
    doc: dict = {
        "k": g.k,
        "questions": [[label_to_json(x) for x in alpha] for alpha in g.questions],
        "answers": [[label_to_json(a) for a in alpha] for alpha in g.answers],
    }
    mu_entries = sorted(
        g.mu.items(), key=lambda kv: _label_sort_key(kv[0])
    )
    doc["mu"] = [
        {"x": [label_to_json(lab) for lab in x], "p": format_fraction(w)}
        for x, w in mu_entries
    ]
    wins = []
    for x in itertools.product(*g.questions):
        for a in itertools.product(*g.answers):
            if g.predicate(x, a):
                wins.append(
                    {
                        "x": [label_to_json(lab) for lab in x],
                        "a": [label_to_json(lab) for lab in a],
                        "v": 1,
                    }
                )
    doc["predicate"] = wins
    doc["default_v"] = 0
    if g.anchors is not None and any(g.anchors.sets):
        doc["anchors"] = [
            sorted((label_to_json(lab) for lab in s), key=json.dumps)
            for s in g.anchors.sets
        ]
    return doc


def load_game(path) -> Game:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"{p}: cannot read ({exc})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(
            f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return game_from_dict(doc, where=str(p))


def save_game(g: Game, path, *, predicate_limit: int = 10**6) -> None:
    doc = game_to_dict(g, predicate_limit=predicate_limit)
    Path(path).write_text(
        json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# strategies


def _matrix_to_json(m: np.ndarray) -> list:
    return [
        [[float(entry.real), float(entry.imag)] for entry in row] for row in np.asarray(m)
    ]


def _matrix_from_json(node, d: int, where: str) -> np.ndarray:
    if not isinstance(node, list) or len(node) != d:
        raise _fail(where, f"expected {d} rows")
    out = np.zeros((d, d), dtype=complex)
    for i, row in enumerate(node):
        if not isinstance(row, list) or len(row) != d:
            raise _fail(f"{where}[{i}]", f"expected {d} entries")
        for j, cell in enumerate(row):
            if (
                not isinstance(cell, list)
                or len(cell) != 2
                or not all(isinstance(v, (int, float)) for v in cell)
            ):
                raise _fail(f"{where}[{i}][{j}]", "expected an [re, im] pair")
            out[i, j] = complex(cell[0], cell[1])
    return out


def _povms_to_json(per_player: Mapping) -> object:
    plain = all(isinstance(q, str) for q in per_player) and all(
        isinstance(a, str) for eff in per_player.values() for a in eff
    )
    if plain:
        return {
            q: {a: _matrix_to_json(m) for a, m in sorted(eff.items())}
            for q, eff in sorted(per_player.items())
        }
    return [
        {
            "x": label_to_json(q),
            "effects": [
                {"a": label_to_json(a), "matrix": _matrix_to_json(m)}
                for a, m in sorted(eff.items(), key=lambda kv: _label_sort_key(kv[0]))
            ],
        }
        for q, eff in sorted(per_player.items(), key=lambda kv: _label_sort_key(kv[0]))
    ]


def _povms_from_json(node, d: int, where: str) -> dict:
    out: dict = {}
    if isinstance(node, Mapping):
        for q, eff in node.items():
            if not isinstance(eff, Mapping) or not eff:
                raise _fail(f"{where}.{q}", "expected an object of answer: matrix")
            out[q] = {
                a: _matrix_from_json(m, d, f"{where}.{q}.{a}") for a, m in eff.items()
            }
        return out
    if isinstance(node, list):
        for idx, entry in enumerate(node):
            here = f"{where}[{idx}]"
            if not isinstance(entry, Mapping) or set(entry) != {"x", "effects"}:
                raise _fail(here, "expected an object with fields x and effects")
            q = label_from_json(entry["x"], f"{here}.x")
            if q in out:
                raise _fail(f"{here}.x", f"duplicate question {q!r}")
            effects = {}
            if not isinstance(entry["effects"], list) or not entry["effects"]:
                raise _fail(f"{here}.effects", "expected a nonempty array")
            for j, eff in enumerate(entry["effects"]):
                spot = f"{here}.effects[{j}]"
                if not isinstance(eff, Mapping) or set(eff) != {"a", "matrix"}:
                    raise _fail(spot, "expected an object with fields a and matrix")
                a = label_from_json(eff["a"], f"{spot}.a")
                if a in effects:
                    raise _fail(f"{spot}.a", f"duplicate answer {a!r}")
                effects[a] = _matrix_from_json(eff["matrix"], d, f"{spot}.matrix")
            out[q] = effects
        return out
    raise _fail(where, "expected an object or an array of {x, effects} entries")


def strategy_to_dict(s: EntangledStrategy) -> dict:
    return {
        "d": s.d,
        "schmidt_weights": [float(v * v) for v in s.schmidt],
        "povms": [_povms_to_json(s.povms[0]), _povms_to_json(s.povms[1])],
    }


def strategy_from_dict(doc, *, where: str = "strategy") -> EntangledStrategy:
    if not isinstance(doc, Mapping):
        raise _fail(where, "expected a JSON object")
    for key in ("d", "schmidt_weights", "povms"):
        if key not in doc:
            raise _fail(f"{where}.{key}", "missing required field")
    d = doc["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise _fail(f"{where}.d", f"expected a positive integer, got {d!r}")
    weights = doc["schmidt_weights"]
    if (
        not isinstance(weights, list)
        or len(weights) != d
        or not all(isinstance(w, (int, float)) for w in weights)
    ):
        raise _fail(f"{where}.schmidt_weights", f"expected {d} numbers")
    if any(w < -1e-12 for w in weights):
        raise _fail(f"{where}.schmidt_weights", "weights must be nonnegative")
    povms = doc["povms"]
    if not isinstance(povms, list) or len(povms) != 2:
        raise _fail(f"{where}.povms", "expected an array of 2 per-player tables")
    schmidt = np.sqrt(np.clip(np.asarray(weights, dtype=float), 0.0, None))
    try:
        return EntangledStrategy(
            d,
            schmidt,
            (
                _povms_from_json(povms[0], d, f"{where}.povms[0]"),
                _povms_from_json(povms[1], d, f"{where}.povms[1]"),
            ),
        )
    except QuantumValidationError as exc:
        raise _fail(where, str(exc)) from None


def load_strategy(path) -> EntangledStrategy:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileFormatError(f"{p}: cannot read ({exc})") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FileFormatError(
            f"{p}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return strategy_from_dict(doc, where=str(p))


def save_strategy(s: EntangledStrategy, path) -> None:
    Path(path).write_text(
        json.dumps(strategy_to_dict(s), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


# ---------------------------------------------------------------------------
# CSV reports


def format_cell(value) -> str:
    """Deterministic text for one CSV cell.

    Fractions keep their exact ``num/den`` form; floats use ``repr`` (the
    shortest round-tripping decimal); everything else goes through ``str``.
    """
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(float(value))  # float() strips numpy scalar wrappers
    if value is None:
        return ""
    return str(value)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([format_cell(cell) for cell in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).write_text(csv_text(header, rows), encoding="utf-8")
