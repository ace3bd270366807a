"""Command line entry point.

Six modes:

* ``solve``            exact classical value of a game (CSV)
* ``anchor``           apply the anchoring transform (game JSON out)
* ``repeat``           materialize the n-fold repetition (game JSON out)
* ``decay``            exact repeated values across an n-range (CSV)
* ``depbreak-verify``  dependency-breaking inequality battery (CSV)
* ``quantum-check``    toolbox / phi / rounding suites (CSV)

``--game`` takes a JSON path or a builtin fixture name.  CSV goes to
``--out`` (stdout otherwise); the report modes also render a PNG figure next
to ``--out`` unless ``--no-plot``.  Exit codes: 0 success, 1 failed check,
2 usage or parse error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import harness
from .fileio import (
    FileFormatError,
    csv_text,
    game_to_dict,
    parse_fraction,
    save_game,
)
from .fixtures import BUILTIN_GAMES
from .games import GameValidationError
from .harness import (
    CHECK_HEADER,
    DECAY_HEADER,
    SOLVE_HEADER,
    ExperimentConfig,
    GameLoadError,
    UsageError,
)
from .repetition import BudgetExceededError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3


def _parse_n(text: str) -> tuple[int, int]:
    try:
        if ".." in text:
            lo_text, hi_text = text.split("..", 1)
            lo, hi = int(lo_text), int(hi_text)
        else:
            lo = hi = int(text)
    except ValueError:
        raise UsageError(f"--n takes N or A..B, got {text!r}") from None
    return lo, hi


def _parse_c(text: str) -> tuple[int, ...]:
    if not text.strip():
        return ()
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"--C takes comma-separated round indices, got {text!r}") from None


def _parse_alpha(text: str) -> Fraction:
    try:
        return parse_fraction(text, "--alpha")
    except FileFormatError as exc:
        raise UsageError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anchorrep",
        description="anchored games, parallel repetition, and their verifiers",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    builtin = ", ".join(sorted(BUILTIN_GAMES))

    def add(mode, *, game=False, n=False, alpha=False, c=False,
            strategy=False, suite=False, materialize=False, help=""):
        p = sub.add_parser(mode, help=help)
        if game:
            p.add_argument(
                "--game",
                required=(game == "required"),
                help=f"game JSON path or a builtin name ({builtin})",
            )
        if n:
            p.add_argument(
                "--n",
                required=(n == "required"),
                help="repetition count N, or inclusive range A..B (decay only)",
            )
        if alpha:
            p.add_argument(
                "--alpha",
                required=(alpha == "required"),
                help="anchor probability as NUM/DEN",
            )
        if c:
            p.add_argument(
                "--C",
                default="",
                help="comma-separated 0-based round indices to condition on",
            )
        if strategy:
            p.add_argument(
                "--strategy",
                help="strategy JSON path (default: optimal classical play)",
            )
        if suite:
            p.add_argument(
                "--suite",
                required=True,
                choices=list(harness.SUITES),
                help="which verification suite to run",
            )
        if materialize:
            p.add_argument(
                "--materialize",
                action="store_true",
                help=f"allow predicate tables past {harness.REPEAT_SOFT_LIMIT} cells",
            )
        p.add_argument("--seed", type=int, default=0, help="RNG seed for seeded checks")
        p.add_argument(
            "--budget",
            type=int,
            default=None,
            help=f"work cap (default: ${harness.BUDGET_ENV} or {harness.DEFAULT_BUDGET})",
        )
        p.add_argument("--out", help="output file (stdout when omitted)")
        p.add_argument(
            "--no-plot",
            action="store_true",
            help="skip the PNG figure next to --out",
        )
        return p

    add("solve", game="required", help="exact classical value")
    add("anchor", game="required", alpha="required", help="anchoring transform")
    add("repeat", game="required", n="required", materialize=True,
        help="materialize the n-fold repetition")
    add("decay", game="required", n="required", alpha=True,
        help="value decay across an n-range")
    add("depbreak-verify", game="required", n="required", c=True, strategy=True,
        help="dependency-breaking verification battery")
    add("quantum-check", game=True, n=True, c=True, strategy=True, suite=True,
        help="entangled-strategy verification suites")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    budget = args.budget if args.budget is not None else harness.default_budget()
    return ExperimentConfig(
        mode=args.mode,
        game=getattr(args, "game", None),
        n=_parse_n(args.n) if getattr(args, "n", None) else None,
        alpha=_parse_alpha(args.alpha) if getattr(args, "alpha", None) else None,
        C=_parse_c(getattr(args, "C", "")),
        seed=args.seed,
        budget=budget,
        out=args.out,
        strategy=getattr(args, "strategy", None),
        suite=getattr(args, "suite", None),
        materialize=getattr(args, "materialize", False),
        plot=not args.no_plot,
    )


def _emit_text(cfg: ExperimentConfig, text: str, render=None) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
        return
    out = Path(cfg.out)
    out.write_text(text, encoding="utf-8")
    if render is not None and cfg.plot:
        render(out.with_suffix(".png"))


def _emit_game(cfg: ExperimentConfig, game) -> None:
    if cfg.out is None:
        doc = game_to_dict(game, predicate_limit=cfg.budget)
        sys.stdout.write(json.dumps(doc, ensure_ascii=False, indent=2) + "\n")
    else:
        save_game(game, cfg.out, predicate_limit=cfg.budget)


def _run(cfg: ExperimentConfig) -> int:
    if cfg.mode == "solve":
        _emit_text(cfg, csv_text(SOLVE_HEADER, harness.run_solve(cfg)))
        return EXIT_OK

    if cfg.mode == "anchor":
        _emit_game(cfg, harness.run_anchor(cfg))
        return EXIT_OK

    if cfg.mode == "repeat":
        _emit_game(cfg, harness.run_repeat(cfg))
        return EXIT_OK

    if cfg.mode == "decay":
        result = harness.run_decay(cfg)
        render = None
        if result.records:
            from .plots import decay_figure

            render = lambda png: decay_figure(result.records, png)
        _emit_text(cfg, csv_text(DECAY_HEADER, harness.decay_rows(result)), render)
        if result.truncated_at is not None:
            print(
                f"budget exceeded at n={result.truncated_at}; emitted "
                f"{len(result.records)} rows",
                file=sys.stderr,
            )
            return EXIT_BUDGET
        return EXIT_OK

    # the two check-suite modes share their emission shape
    rows = harness.run_verification_suite(cfg)
    render = None
    if rows:
        from .plots import checks_figure

        render = lambda png: checks_figure(rows, png, title=f"{cfg.mode} slack")
    _emit_text(cfg, csv_text(CHECK_HEADER, harness.check_cells(rows)), render)
    if harness.any_violated(rows):
        bad = [r.name for r in rows if r.status == "violated"]
        print(f"failed checks: {', '.join(bad)}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return _run(cfg)
    except (UsageError, FileFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GameLoadError as exc:
        # the file parsed but the game it describes is invalid: report it as
        # a failed validation check, not a usage error
        cfg_out = getattr(args, "out", None)
        text = csv_text(CHECK_HEADER, [("game.validate", 1, 0, -1)])
        if cfg_out:
            Path(cfg_out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        print(f"game validation failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except GameValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
