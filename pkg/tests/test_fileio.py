"""Round-trip and rejection tests for the JSON/CSV file formats.

Serialization is checked against independent reconstructions: games are
round-tripped and compared cell-by-cell over the full question x answer
product, strategies are compared by the exact value they earn, and the CSV
writer is compared against hand-written expected bytes.
"""

import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from anchorrep.fileio import (
    FileFormatError,
    csv_text,
    format_cell,
    game_from_dict,
    game_to_dict,
    label_from_json,
    label_to_json,
    load_game,
    load_strategy,
    parse_fraction,
    save_game,
    save_strategy,
    strategy_from_dict,
    strategy_to_dict,
    write_csv,
)
from anchorrep.fixtures import anchored_chsh, chsh, free_game, ghz_parity
from anchorrep.games import GameValidationError, classical_value
from anchorrep.quantum import (
    chsh_qubit_strategy,
    entangled_value_eval,
    repeated_strategy,
)
from anchorrep.repetition import repeat_game


def games_equal(g1, g2):
    assert g1.k == g2.k
    assert g1.questions == g2.questions
    assert g1.answers == g2.answers
    assert dict(g1.mu.items()) == dict(g2.mu.items())
    for x in itertools.product(*g1.questions):
        for a in itertools.product(*g1.answers):
            assert g1.predicate(x, a) == g2.predicate(x, a), (x, a)
    s1 = g1.anchors.sets if g1.anchors is not None else None
    s2 = g2.anchors.sets if g2.anchors is not None else None
    assert s1 == s2


class TestFractions:
    def test_parse_fraction_forms(self):
        assert parse_fraction("3/4", "t") == Fraction(3, 4)
        assert parse_fraction("2", "t") == Fraction(2)
        assert parse_fraction(5, "t") == Fraction(5)
        assert parse_fraction("-1/3", "t") == Fraction(-1, 3)

    @pytest.mark.parametrize("bad", [0.5, "0.5", "a/b", "1/0", None, True, [1, 2]])
    def test_parse_fraction_rejects(self, bad):
        with pytest.raises(FileFormatError, match="t:"):
            parse_fraction(bad, "t")


class TestLabels:
    def test_string_and_tuple_round_trip(self):
        for lab in ["x", ("0", "1"), (("a", "b"), "c")]:
            assert label_from_json(label_to_json(lab), "t") == lab

    def test_rejects_non_label(self):
        with pytest.raises(FileFormatError, match=r"t\[1\]"):
            label_from_json(["ok", 3], "t")


class TestGameRoundTrip:
    @pytest.mark.parametrize("build", [chsh, anchored_chsh, ghz_parity, free_game])
    def test_round_trip_preserves_game(self, build, tmp_path):
        g = build()
        path = tmp_path / "g.json"
        save_game(g, path)
        games_equal(g, load_game(path))

    def test_round_trip_preserves_value(self, tmp_path):
        g = anchored_chsh()
        path = tmp_path / "g.json"
        save_game(g, path)
        assert classical_value(load_game(path))[0] == Fraction(55, 64)

    def test_tuple_labels_round_trip(self, tmp_path):
        g = repeat_game(chsh(), 2)
        path = tmp_path / "g.json"
        save_game(g, path)
        g2 = load_game(path)
        games_equal(g, g2)
        # tuple labels must come back as tuples of base labels, not strings
        assert all(isinstance(x, tuple) and len(x) == 2 for x in g2.questions[0])

    def test_serialization_is_byte_stable(self, tmp_path):
        g = anchored_chsh()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_game(g, p1)
        save_game(load_game(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()
        save_game(g, p2)
        assert p1.read_bytes() == p2.read_bytes()


def chsh_doc():
    """An independently hand-written document for the CHSH game."""
    mu = [
        {"x": [x0, x1], "p": "1/4"}
        for x0 in ("0", "1")
        for x1 in ("0", "1")
    ]
    predicate = []
    for x0, x1 in itertools.product("01", repeat=2):
        for a0, a1 in itertools.product("01", repeat=2):
            win = (int(a0) ^ int(a1)) == (int(x0) & int(x1))
            if win:
                predicate.append({"x": [x0, x1], "a": [a0, a1], "v": 1})
    return {
        "k": 2,
        "questions": [["0", "1"], ["0", "1"]],
        "answers": [["0", "1"], ["0", "1"]],
        "mu": mu,
        "predicate": predicate,
        "default_v": 0,
    }


class TestGameParsing:
    def test_hand_written_chsh(self):
        g = game_from_dict(chsh_doc())
        games_equal(g, chsh())

    def test_partial_predicate_without_default_rejected(self):
        doc = chsh_doc()
        del doc["default_v"]
        with pytest.raises(FileFormatError, match="partial"):
            game_from_dict(doc)

    def test_full_predicate_without_default_accepted(self):
        doc = chsh_doc()
        del doc["default_v"]
        full = []
        for x0, x1 in itertools.product("01", repeat=2):
            for a0, a1 in itertools.product("01", repeat=2):
                v = int((int(a0) ^ int(a1)) == (int(x0) & int(x1)))
                full.append({"x": [x0, x1], "a": [a0, a1], "v": v})
        doc["predicate"] = full
        games_equal(game_from_dict(doc), chsh())

    def test_default_v_one(self):
        doc = chsh_doc()
        doc["predicate"] = []
        doc["default_v"] = 1
        g = game_from_dict(doc)
        assert classical_value(g)[0] == 1

    def test_corrupted_mu_is_validation_not_format_error(self):
        doc = chsh_doc()
        doc["mu"][0]["p"] = "1/3"  # total now 13/12
        with pytest.raises(GameValidationError):
            game_from_dict(doc)

    def test_mu_outcome_outside_alphabet_is_validation_error(self):
        doc = chsh_doc()
        doc["mu"][0]["x"] = ["0", "2"]
        with pytest.raises(GameValidationError):
            game_from_dict(doc)

    @pytest.mark.parametrize(
        "mutate, fragment",
        [
            (lambda d: d.pop("mu"), "mu"),
            (lambda d: d.update(extra=1), "extra"),
            (lambda d: d.update(k="2"), "k"),
            (lambda d: d["mu"].append(dict(d["mu"][0])), "duplicate"),
            (lambda d: d["mu"][0].update(p="0.25"), r"mu\[0\].p"),
            (lambda d: d["predicate"][0].update(v=2), r"predicate\[0\].v"),
            (lambda d: d["questions"].append(["0"]), "questions"),
        ],
    )
    def test_shape_errors_carry_context(self, mutate, fragment):
        doc = chsh_doc()
        mutate(doc)
        with pytest.raises(FileFormatError, match=fragment):
            game_from_dict(doc)

    def test_conflicting_predicate_entries_rejected(self):
        doc = chsh_doc()
        doc["predicate"].append(dict(doc["predicate"][0], v=0))
        with pytest.raises(FileFormatError, match="conflict"):
            game_from_dict(doc)

    def test_malformed_json_reports_line(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"k": 2,,}', encoding="utf-8")
        with pytest.raises(FileFormatError, match="line 1"):
            load_game(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileFormatError, match="cannot read"):
            load_game(tmp_path / "nope.json")


class TestStrategyRoundTrip:
    def test_qubit_strategy_value_preserved(self, tmp_path):
        g = chsh()
        s = chsh_qubit_strategy()
        path = tmp_path / "s.json"
        save_strategy(s, path)
        s2 = load_strategy(path)
        assert s2.d == 2
        assert abs(entangled_value_eval(g, s2) - entangled_value_eval(g, s)) < 1e-12

    def test_object_form_for_string_labels(self):
        doc = strategy_to_dict(chsh_qubit_strategy())
        assert isinstance(doc["povms"][0], dict)
        assert set(doc["povms"][0]) == {"0", "1"}
        # matrices are row-major nested [re, im] pairs
        cell = doc["povms"][0]["0"]["0"][0][0]
        assert isinstance(cell, list) and len(cell) == 2

    def test_tuple_labels_use_list_form(self, tmp_path):
        base = chsh_qubit_strategy()
        s = repeated_strategy(base, 2)
        doc = strategy_to_dict(s)
        assert isinstance(doc["povms"][0], list)
        path = tmp_path / "s.json"
        save_strategy(s, path)
        s2 = load_strategy(path)
        g2 = repeat_game(chsh(), 2)
        assert abs(entangled_value_eval(g2, s2) - entangled_value_eval(g2, s)) < 1e-12

    def test_schmidt_weights_are_probabilities(self):
        doc = strategy_to_dict(chsh_qubit_strategy())
        assert abs(sum(doc["schmidt_weights"]) - 1.0) < 1e-10

    def test_json_is_byte_stable(self, tmp_path):
        s = chsh_qubit_strategy()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_strategy(s, p1)
        save_strategy(load_strategy(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    @pytest.mark.parametrize(
        "mutate, fragment",
        [
            (lambda d: d.pop("d"), r"\.d"),
            (lambda d: d.update(d=3), "schmidt_weights"),
            (lambda d: d.update(schmidt_weights=[2.0, -1.0]), "nonnegative"),
            (lambda d: d["povms"].pop(), "2 per-player"),
            (
                lambda d: d["povms"][0]["0"]["0"][0].pop(),
                r"povms\[0\]\.0\.0\[0\]",
            ),
        ],
    )
    def test_bad_documents_rejected(self, mutate, fragment):
        doc = strategy_to_dict(chsh_qubit_strategy())
        mutate(doc)
        with pytest.raises(FileFormatError, match=fragment):
            strategy_from_dict(doc)

    def test_non_povm_effects_rejected(self):
        doc = strategy_to_dict(chsh_qubit_strategy())
        doc["povms"][0]["0"]["0"] = doc["povms"][0]["0"]["1"]
        with pytest.raises(FileFormatError, match="identity|sum"):
            strategy_from_dict(doc)


class TestCsv:
    def test_cell_formats(self):
        assert format_cell(Fraction(3, 4)) == "3/4"
        assert format_cell(Fraction(2)) == "2"
        assert format_cell(0.1 + 0.2) == "0.30000000000000004"
        assert format_cell(1.0) == "1.0"
        assert format_cell(7) == "7"
        assert format_cell(True) == "1"
        assert format_cell(None) == ""
        assert format_cell("ok") == "ok"

    def test_exact_bytes(self):
        text = csv_text(
            ["check", "lhs", "rhs", "slack"],
            [["anchor", Fraction(55, 64), 0.5, Fraction(3, 64)]],
        )
        assert text == "check,lhs,rhs,slack\nanchor,55/64,0.5,3/64\n"

    def test_quoting(self):
        text = csv_text(["a"], [["x,y"], ['say "hi"']])
        assert text == 'a\n"x,y"\n"say ""hi"""\n'

    def test_write_csv_byte_stable(self, tmp_path):
        rows = [["r", 1.5, Fraction(1, 3)], ["s", 2.0, Fraction(1)]]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(p1, ["name", "f", "q"], rows)
        write_csv(p2, ["name", "f", "q"], rows)
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_text(encoding="utf-8").endswith("\n")


class TestGameDocShape:
    def test_doc_is_json_serializable_and_sorted(self):
        doc = game_to_dict(anchored_chsh())
        text = json.dumps(doc, ensure_ascii=False)
        assert json.loads(text) == doc
        xs = [tuple(e["x"]) for e in doc["mu"]]
        assert xs == sorted(xs)

    def test_only_winning_entries_stored(self):
        doc = game_to_dict(chsh())
        assert doc["default_v"] == 0
        assert all(e["v"] == 1 for e in doc["predicate"])
        assert len(doc["predicate"]) == 8

    def test_anchors_survive(self):
        doc = game_to_dict(anchored_chsh())
        assert doc["anchors"] == [["⊥"], ["⊥"]]


def test_numpy_scalars_format_like_python():
    assert format_cell(float(np.float64(0.25))) == "0.25"
