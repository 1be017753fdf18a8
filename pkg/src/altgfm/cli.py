"""Command-line interface.

Exit status: 0 on success, 1 when a semantic check fails, 2 on bad input.
Inputs are gfm-format files, HOA files (detected by their ``HOA:`` header),
or built-in fixtures written ``@name`` (see ``altgfm fixtures``).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import fixtures
from .automata import AutomatonError, DeterministicOmegaAutomaton, NondetBuchiAutomaton, dualize
from .check import InstanceParams, battery, lang_equiv, run_instance, summary_table
from .construct import dra_to_gfm_nba, dsa_to_alt_gfm
from .hoa import HOAError, emit_hoa, parse_hoa
from .models import MDP, Game, ModelError, as_fraction, augment, product_det, product_game, product_nba
from .rl import LearnerConfig, q_learn, zeta_sweep
from .solve import SolverError, buchi_game_value, reach_value, streett_value
from .strategy import LAR_MODES, MealyStrategy, StrategyError, evaluate_strategy, extract_control_strategy
from .structured import StructuredError, emit_structured, parse_structured

OK, CHECK_FAILED, BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


FIXTURES = {
    "gb-chain": fixtures.gb_chain,
    "guessing-nba": fixtures.guessing_nba,
    "all-words-dba": fixtures.all_words_dba,
    "inf-ab-dsa": fixtures.inf_ab_dsa,
    "coin-loop-game": fixtures.coin_loop_game,
    "universal-dsa": fixtures.universal_dsa,
    "finitely-many-a-dsa": fixtures.finitely_many_a_dsa,
    "not-gfg-arena": fixtures.not_gfg_arena,
    "letter-choice-mdp": fixtures.letter_choice_mdp,
    "hub-mdp": fixtures.hub_mdp,
    "last-letter-dsa": fixtures.last_letter_dsa,
}


# ---------------------------------------------------------------- input / output

def load(path: str):
    if path.startswith("@"):
        try:
            return FIXTURES[path[1:]]()
        except KeyError:
            raise InputError(f"unknown fixture {path!r}; try 'altgfm fixtures'") from None
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise InputError(f"{path}: {e.strerror}") from None
    try:
        if text.lstrip().startswith("HOA:"):
            return parse_hoa(text)
        return parse_structured(text)
    except (StructuredError, HOAError) as e:
        raise InputError(f"{path}: {e}") from None


def load_as(path: str, types, what: str):
    obj = load(path)
    if not isinstance(obj, types):
        raise InputError(f"{path}: expected {what}, found {type(obj).__name__}")
    return obj


def write(args, obj, fmt: str = "gfm"):
    text = emit_hoa(obj) if fmt == "hoa" else emit_structured(obj)
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)


def _zeta(tok: str) -> Fraction:
    try:
        z = as_fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {tok!r}") from None
    if not 0 < z < 1:
        raise argparse.ArgumentTypeError(f"zeta must lie in (0,1), got {tok}")
    return z


def _zetas(tok: str) -> list[Fraction]:
    return [_zeta(t) for t in tok.split(",") if t]


# ---------------------------------------------------------------- subcommands

def cmd_fixtures(args):
    for name in sorted(FIXTURES):
        print(f"@{name}")
    return OK


def cmd_convert(args):
    if args.op == "dualize":
        aut = load_as(args.input, DeterministicOmegaAutomaton, "a deterministic automaton")
        write(args, dualize(aut), args.format)
        return OK
    aut = load_as(args.input, DeterministicOmegaAutomaton, "a deterministic automaton")
    if args.op == "dra2nba":
        if aut.kind != "rabin":
            raise InputError("dra2nba needs a Rabin automaton")
        write(args, dra_to_gfm_nba(aut, prune=args.prune), args.format)
        return OK
    if aut.kind != "streett":
        raise InputError("dsa2alt needs a Streett automaton")
    if args.format == "hoa":
        raise InputError("alternating automata are written in gfm-format only")
    write(args, dsa_to_alt_gfm(aut, prune_withdrawals=not args.keep_withdrawals,
                               prune_unreachable=not args.keep_unreachable, literal=args.literal))
    return OK


def cmd_product(args):
    mdp = load_as(args.mdp, MDP, "an MDP")
    if args.op == "det":
        aut = load_as(args.automaton, DeterministicOmegaAutomaton, "a deterministic automaton")
        write(args, product_det(mdp, aut))
    elif args.op == "nba":
        aut = load_as(args.automaton, NondetBuchiAutomaton, "a Büchi automaton")
        if aut.universal:
            raise InputError("use 'product game' for alternating automata")
        write(args, product_nba(mdp, aut))
    else:
        aut = load_as(args.automaton, NondetBuchiAutomaton, "a Büchi automaton")
        write(args, product_game(mdp, aut))
    return OK


def cmd_augment(args):
    game = load_as(args.game, Game, "a game")
    write(args, augment(game, args.zeta).game)
    return OK


def _value_report(game, vec, kind):
    vals = list(vec.values)
    rep = {"objective": kind, "initial": game.initial, "value": vals[game.initial],
           "values": vals, "method": vec.method, "exact": vec.exact}
    if not vec.exact:
        rep["tol"] = float(vec.tol)
        rep["iterations"] = vec.iterations
    return rep


def cmd_solve(args):
    game = load_as(args.game, Game, "a game")
    exact = args.tol is None
    tol = args.tol if args.tol is not None else 1e-9
    if args.op == "streett":
        if game.pair_kind != "streett":
            raise InputError("this game carries no Streett condition; build it with 'product det'")
        vec, _ = streett_value(game, tol=tol, exact=exact)
    elif args.op == "buchi-game":
        vec, _ = buchi_game_value(game, tol=tol, exact=exact)
    else:
        if not game.target:
            raise InputError("this game has no reachability target; build it with 'augment'")
        vec = reach_value(game, tol=tol, exact=exact)
    write(args, _value_report(game, vec, args.op))
    return OK


def _battery_report(rows) -> dict:
    bad = [r.seed for r in rows if not (r.passed and r.unpruned_equal and r.oracle_agrees
                                         and r.strategy_optimal)]
    return {
        "instances": len(rows),
        "passed": sum(r.passed for r in rows),
        "unpruned_equal": sum(r.unpruned_equal for r in rows),
        "oracle_checked": sum(r.oracle is not None for r in rows),
        "oracle_agree": sum(r.oracle is not None and r.oracle_agrees for r in rows),
        "strategies_optimal": sum(r.strategy_optimal for r in rows),
        "max_vi_error": max((r.vi_error for r in rows), default=0.0),
        "failing_seeds": ",".join(map(str, bad)),
        "psat": [r.psat for r in rows],
    }


def cmd_check_gfm(args):
    params = InstanceParams()
    if args.instance is not None:
        r = run_instance(args.instance, params, oracle=not args.no_oracle)
        rep = {"seed": r.seed, "psat": r.psat, "psemsat": r.psemsat, "passed": r.passed,
               "unpruned_equal": r.unpruned_equal, "vi_error": r.vi_error,
               "oracle": "n/a" if r.oracle is None else str(r.oracle),
               "strategy_value": "n/a" if r.strategy_value is None else str(r.strategy_value),
               "game_positions": r.game_positions}
        ok = r.passed and r.unpruned_equal and r.oracle_agrees and r.strategy_optimal
        if args.table:
            print(summary_table([r]), file=sys.stderr)
    else:
        rows = battery(args.seeds, args.first_seed, params, oracle=not args.no_oracle,
                       workers=args.workers)
        rep = _battery_report(rows)
        ok = not rep["failing_seeds"]
        if args.table:
            print(summary_table(rows), file=sys.stderr)
    write(args, rep)
    return OK if ok else CHECK_FAILED


def cmd_lang_check(args):
    types = (DeterministicOmegaAutomaton, NondetBuchiAutomaton)
    a = load_as(args.left, types, "an automaton")
    b = load_as(args.right, types, "an automaton")
    if a.alphabet != b.alphabet:
        raise InputError("the two automata use different alphabets")
    rep = lang_equiv(a, b, args.bound)
    out = {"bound": args.bound, "checked": rep.checked, "equivalent": rep.passed}
    if rep.counterexample is not None:
        al = a.alphabet
        w = rep.counterexample
        out["prefix"] = " ".join(al.format_letter(x) for x in w.prefix)
        out["period"] = " ".join(al.format_letter(x) for x in w.period)
        out["left_accepts"], out["right_accepts"] = rep.left, rep.right
    write(args, out)
    return OK if rep.passed else CHECK_FAILED


def cmd_extract(args):
    mdp = load_as(args.mdp, MDP, "an MDP")
    dsa = load_as(args.dsa, DeterministicOmegaAutomaton, "a deterministic Streett automaton")
    write(args, extract_control_strategy(mdp, dsa, mode=args.mode, verify=not args.no_verify))
    return OK


def cmd_eval(args):
    mdp = load_as(args.mdp, MDP, "an MDP")
    dsa = load_as(args.dsa, DeterministicOmegaAutomaton, "a deterministic Streett automaton")
    st = load_as(args.strategy, MealyStrategy, "a strategy")
    v = evaluate_strategy(mdp, dsa, st)
    opt = streett_value(product_det(mdp, dsa), exact=True)[0][0]
    write(args, {"value": v, "optimum": opt, "optimal": v == opt,
                 "memory_states": len(st.memory_states)})
    return OK


def cmd_learn(args):
    game = load_as(args.game, Game, "a game")
    cfg = LearnerConfig(zeta=args.zeta, episodes=args.episodes, seed=args.seed)
    res = q_learn(augment(game, args.zeta), cfg)
    write(args, {"zeta": args.zeta, "episodes": res.episodes,
                 "seed": args.seed, "estimate": float(res.estimate), "rewarded": res.rewarded,
                 "reach_value": res.reach_value, "buchi_value": res.buchi_value,
                 "optimum": res.optimum, "optimal": res.optimal,
                 "sigma": {str(p): m for p, m in sorted(res.sigma.items())},
                 "diagnostics": "; ".join(res.diagnostics)})
    return OK


def cmd_sweep(args):
    game = load_as(args.game, Game, "a game")
    res = zeta_sweep(game, args.zetas, exact=args.tol is None)
    th = res.threshold
    write(args, {"zetas": [r.zeta for r in res.rows],
                 "reach_values": [as_fraction(r.reach_value) for r in res.rows],
                 "induced_values": [as_fraction(r.induced_value) for r in res.rows],
                 "optimum": as_fraction(res.rows[0].optimum) if res.rows else Fraction(0),
                 "threshold": "none" if th is None else str(th),
                 "almost_sure_consistent": res.almost_sure_consistent})
    if args.table:
        print(res.table(), file=sys.stderr)
    return OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="altgfm", description="Alternating good-for-MDP automata toolkit.")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("-o", "--output", help="output file (default: stdout)")
        sp.set_defaults(fn=fn)
        return sp

    add("fixtures", cmd_fixtures, "list the built-in fixtures usable as @name")

    sp = add("convert", cmd_convert, "automaton translations")
    sp.add_argument("op", choices=("dra2nba", "dsa2alt", "dualize"))
    sp.add_argument("input")
    sp.add_argument("--format", choices=("gfm", "hoa"), default="gfm")
    sp.add_argument("--prune", action="store_true", help="dra2nba: drop unreachable states")
    sp.add_argument("--keep-withdrawals", action="store_true", help="dsa2alt: keep withdrawal moves")
    sp.add_argument("--keep-unreachable", action="store_true", help="dsa2alt: keep unreachable states")
    sp.add_argument("--literal", action="store_true", help="dsa2alt: use the uncorrected transition rule")

    sp = add("product", cmd_product, "build a product of an MDP and an automaton")
    sp.add_argument("op", choices=("nba", "det", "game"))
    sp.add_argument("mdp")
    sp.add_argument("automaton")

    sp = add("augment", cmd_augment, "divert accepting moves to a reward sink")
    sp.add_argument("game")
    sp.add_argument("--zeta", type=_zeta, required=True)

    sp = add("solve", cmd_solve, "compute values")
    sp.add_argument("op", choices=("streett", "buchi-game", "reach"))
    sp.add_argument("game")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="rational arithmetic (default)")
    mode.add_argument("--tol", type=float, help="floating-point value iteration with this tolerance")

    sp = add("check-gfm", cmd_check_gfm, "certify PSat = PSemSat on seeded random instances")
    which = sp.add_mutually_exclusive_group(required=True)
    which.add_argument("--battery", action="store_true")
    which.add_argument("--instance", type=int, metavar="SEED")
    sp.add_argument("--seeds", type=int, default=200)
    sp.add_argument("--first-seed", type=int, default=0)
    sp.add_argument("--exact", action="store_true", help="rational certification (always on)")
    sp.add_argument("--no-oracle", action="store_true")
    sp.add_argument("--workers", type=int, help="pool size (default: $GFM_WORKERS or 1)")
    sp.add_argument("--table", action="store_true", help="print a per-instance table on stderr")

    sp = add("lang-check", cmd_lang_check, "compare two automata on all short lassos")
    sp.add_argument("left")
    sp.add_argument("right")
    sp.add_argument("--bound", type=int, default=4)

    sp = add("extract-strategy", cmd_extract, "finite-memory control strategy for M×S")
    sp.add_argument("mdp")
    sp.add_argument("dsa")
    sp.add_argument("--mode", choices=LAR_MODES, default=LAR_MODES[0])
    sp.add_argument("--no-verify", action="store_true")

    sp = add("eval-strategy", cmd_eval, "exact value of a control strategy")
    sp.add_argument("mdp")
    sp.add_argument("dsa")
    sp.add_argument("strategy")

    sp = add("learn", cmd_learn, "tabular learning on the augmented product")
    sp.add_argument("game")
    sp.add_argument("--episodes", type=int, default=LearnerConfig.episodes)
    sp.add_argument("--zeta", type=_zeta, default=LearnerConfig.zeta)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("sweep", cmd_sweep, "optimal reach strategies across several zeta")
    sp.add_argument("game")
    sp.add_argument("--zetas", type=_zetas, default=[Fraction(9, 10), Fraction(99, 100), Fraction(999, 1000)])
    sp.add_argument("--tol", type=float, help="use value iteration instead of exact arithmetic")
    sp.add_argument("--table", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InputError, StructuredError, HOAError, ModelError, AutomatonError) as e:
        print(f"altgfm: error: {e}", file=sys.stderr)
        return BAD_INPUT
    except (StrategyError, SolverError) as e:
        print(f"altgfm: check failed: {e}", file=sys.stderr)
        return CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
