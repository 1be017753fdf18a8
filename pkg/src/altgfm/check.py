"""Certification harness: syntactic vs. semantic probabilities, lasso-based
language equivalence, the not-good-for-games example and seeded batteries."""

from __future__ import annotations

import itertools
import os
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .automata import (RABIN, STREETT, AlternatingBuchiAutomaton, Alphabet,
                       DeterministicOmegaAutomaton, LassoWord, NondetBuchiAutomaton, Pair,
                       accepts_lasso_alternating, accepts_lasso_det)
from .construct import dsa_to_alt_gfm
from .fixtures import AB, finitely_many_a_dsa, not_gfg_arena
from .models import MDP, ModelError, auto_position, product_det, product_game, product_nba
from .solve import OracleTooLarge, brute_force_value, buchi_game_value, streett_value

DEFAULT_BATTERY = 200
WORKERS_ENV = "GFM_WORKERS"


@dataclass
class CheckReport:
    instance: str
    psat: object
    psemsat: object
    delta: float
    passed: bool
    exact: bool
    sizes: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)


def _product(mdp: MDP, aut):
    if isinstance(aut, AlternatingBuchiAutomaton):
        return product_game(mdp, aut)
    return product_nba(mdp, aut)


def psat(mdp: MDP, aut, exact: bool = True, tol: float = 1e-9):
    game = _product(mdp, aut)
    vec, _ = buchi_game_value(game, tol=tol, exact=exact)
    return vec[game.initial], game


def psemsat(mdp: MDP, ref: DeterministicOmegaAutomaton, exact: bool = True, tol: float = 1e-9):
    prod = product_det(mdp, ref)
    vec, _ = streett_value(prod, tol=tol, exact=exact)
    return vec[prod.initial], prod


def check_gfm(aut, ref: DeterministicOmegaAutomaton, mdp: MDP, exact: bool = True,
              tol: float = 1e-9, instance: str = "") -> CheckReport:
    """Compare the product-game value of ``aut`` with the optimal satisfaction
    probability computed through the deterministic reference ``ref``."""
    if aut.alphabet != mdp.alphabet or ref.alphabet != mdp.alphabet:
        raise ModelError("alphabet mismatch between automaton, reference and MDP")
    t0 = time.perf_counter()
    ps, game = psat(mdp, aut, exact, tol)
    t1 = time.perf_counter()
    pss, prod = psemsat(mdp, ref, exact, tol)
    t2 = time.perf_counter()
    delta = abs(float(ps) - float(pss))
    passed = ps == pss if exact else delta <= tol
    sizes = {"automaton": aut.n_states, "game": game.n, "reference_product": prod.n}
    return CheckReport(instance, ps, pss, delta, passed, exact, sizes,
                       {"psat": t1 - t0, "psemsat": t2 - t1})


# ---------------------------------------------------------------- lassos

def _accepts(aut, w: LassoWord) -> bool:
    if isinstance(aut, DeterministicOmegaAutomaton):
        return accepts_lasso_det(aut, w)
    return accepts_lasso_alternating(aut, w)


def lassos(alphabet: Alphabet, bound: int):
    """All ``u·v^ω`` with ``|u| ≤ bound`` and ``1 ≤ |v| ≤ bound``."""
    letters = list(alphabet.letters)
    for lu in range(bound + 1):
        for u in itertools.product(letters, repeat=lu):
            for lv in range(1, bound + 1):
                for v in itertools.product(letters, repeat=lv):
                    yield LassoWord(u, v)


@dataclass
class LangReport:
    passed: bool
    checked: int
    counterexample: LassoWord | None = None
    left: bool | None = None
    right: bool | None = None


def lang_equiv(a, b, bound: int) -> LangReport:
    if bound < 1:
        raise ValueError("bound must be at least 1")
    if a.alphabet != b.alphabet:
        raise ModelError("alphabet mismatch")
    n = 0
    for w in lassos(a.alphabet, bound):
        n += 1
        x, y = _accepts(a, w), _accepts(b, w)
        if x != y:
            return LangReport(False, n, w, x, y)
    return LangReport(True, n)


def arena_lassos(mdp: MDP, bound: int):
    """Label words of ultimately periodic plays of ``mdp`` up to ``bound`` steps."""
    succ = [sorted({s for _, d in row for s, _ in d}) for row in mdp.actions]
    seen = set()
    stack = [(mdp.initial,)]
    while stack:
        path = stack.pop()
        last = path[-1]
        for t in succ[last]:
            for j, x in enumerate(path):
                if x == t:
                    w = LassoWord(tuple(mdp.labels[y] for y in path[:j]),
                                  tuple(mdp.labels[y] for y in path[j:]))
                    if w not in seen:
                        seen.add(w)
                        yield w
            if len(path) < bound:
                stack.append(path + (t,))


@dataclass
class GFGReport:
    value: Fraction
    plays_checked: int
    all_plays_in_language: bool
    sample_accepted: bool

    @property
    def passed(self):
        return self.value == 0 and self.all_plays_in_language and self.sample_accepted


def gfg_counterexample(bound: int = 6) -> GFGReport:
    """The construction is good for MDPs but not for games: a one-player
    arena of the rejection player all of whose plays are in the language,
    where she still wins the acceptance game."""
    dsa = finitely_many_a_dsa()
    arena = not_gfg_arena()
    game = product_game(arena, dsa_to_alt_gfm(dsa))
    vec, _ = buchi_game_value(game, exact=True)
    words = list(arena_lassos(arena, bound))
    ok = all(accepts_lasso_det(dsa, w) for w in words)
    sample = accepts_lasso_det(dsa, LassoWord((0,), (1,)))
    return GFGReport(vec[game.initial], len(words), ok, sample)


# ---------------------------------------------------------------- random instances

@dataclass(frozen=True)
class InstanceParams:
    n_mdp: int = 6
    n_dsa: int = 4
    k: int = 2
    branching: int = 3
    max_actions: int = 2
    absorbing: float = 0.4
    aps: tuple = ("b",)
    exact_sizes: bool = False


def _rand_dist(rng: random.Random, n: int, branching: int):
    m = rng.randint(min(2, n, branching), min(branching, n))
    supp = rng.sample(range(n), m)
    den = rng.randint(m, 8)
    cuts = sorted(rng.sample(range(1, den), m - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return tuple(sorted((s, Fraction(p, den)) for s, p in zip(supp, parts)))


def _nontrivial(dsa: DeterministicOmegaAutomaton) -> bool:
    seen = {accepts_lasso_det(dsa, w) for w in lassos(dsa.alphabet, 2)}
    return len(seen) == 2


def _draw(rng: random.Random, params: InstanceParams):
    alphabet = Alphabet(tuple(params.aps))
    if params.exact_sizes:
        n_mdp, n_dsa, k = params.n_mdp, params.n_dsa, params.k
    else:
        n_mdp = rng.randint(1, params.n_mdp)
        n_dsa = rng.randint(1, params.n_dsa)
        k = rng.randint(0, params.k)
    delta = tuple(tuple(rng.randrange(n_dsa) for _ in alphabet.letters) for _ in range(n_dsa))
    pairs = []
    for _ in range(k):
        # a pair with an empty red set is vacuous
        r = {q for q in range(n_dsa) if rng.random() < 0.5} or {rng.randrange(n_dsa)}
        g = frozenset(q for q in range(n_dsa) if q not in r and rng.random() < 0.4)
        pairs.append(Pair(g, frozenset(r)))
    dsa = DeterministicOmegaAutomaton(alphabet, delta, STREETT, tuple(pairs))
    labels = tuple(rng.randrange(alphabet.size) for _ in range(n_mdp))
    actions = []
    for s in range(n_mdp):
        if n_mdp > 1 and rng.random() < params.absorbing:
            actions.append((("stay", ((s, Fraction(1)),)),))
            continue
        na = rng.randint(1, params.max_actions)
        actions.append(tuple((f"a{j}", _rand_dist(rng, n_mdp, params.branching)) for j in range(na)))
    return dsa, MDP(alphabet, labels, tuple(actions))


def random_instance(seed: int, params: InstanceParams = InstanceParams(), tries: int = 50):
    """Deterministic ``(DSA, MDP)`` pair; sizes are drawn up to the bounds in
    ``params`` unless ``exact_sizes`` is set.

    Draws are repeated (from the same generator) until the DSA has both an
    accepting and a rejecting lasso of length at most 2, so that few
    instances are decided by the automaton alone.  Pairs with ``k = 0`` are
    exempt since their language is universal.
    """
    rng = random.Random(seed)
    for _ in range(tries):
        dsa, mdp = _draw(rng, params)
        if dsa.k == 0 or _nontrivial(dsa):
            break
    return dsa, mdp


# ---------------------------------------------------------------- battery

@dataclass
class BatteryRow:
    seed: int
    n_mdp: int
    n_dsa: int
    k: int
    game_positions: int
    psat: Fraction
    psemsat: Fraction
    passed: bool
    unpruned_equal: bool
    vi_psat: float
    vi_error: float
    oracle: Fraction | None
    oracle_error: float | None
    strategy_value: Fraction | None
    memory: object
    seconds: float

    @property
    def strategy_optimal(self):
        return self.strategy_value is not None and self.strategy_value == self.psemsat

    @property
    def oracle_agrees(self):
        return self.oracle is None or (self.oracle == self.psat and self.oracle_error <= 1e-8)


def run_instance(seed: int, params: InstanceParams = InstanceParams(), oracle: bool = True) -> BatteryRow:
    """Certify one seeded instance: exact PSat = PSemSat from every MDP state,
    pruned/unpruned agreement, value iteration and brute-force agreement,
    and optimality of the extracted control strategy."""
    from .strategy import StrategyError, evaluate_strategy, extract_control_strategy

    t0 = time.perf_counter()
    dsa, mdp = random_instance(seed, params)
    aut = dsa_to_alt_gfm(dsa)
    game = product_game(mdp, aut)
    vals, strat = buchi_game_value(game, exact=True)
    ps = vals[game.initial]
    pss, _ = psemsat(mdp, dsa)
    every = all(vals[auto_position(game, s, aut.initial)] == psemsat(replace(mdp, initial=s), dsa)[0]
                for s in range(mdp.n_states))
    raw = dsa_to_alt_gfm(dsa, prune_withdrawals=False, prune_unreachable=False)
    unpruned, _ = psat(mdp, raw, exact=True)
    vi, _ = buchi_game_value(game, exact=False)
    vi0 = vi[game.initial]
    ov = oerr = None
    if oracle:
        try:
            ov = brute_force_value(game)
            oerr = abs(vi0 - float(ov))
        except OracleTooLarge:
            pass
    try:
        ctrl = extract_control_strategy(mdp, dsa, game, aut, strat.sigma, vals, verify=False)
        sv, mem = evaluate_strategy(mdp, dsa, ctrl), len(ctrl.memory_states)
    except StrategyError as e:
        sv, mem = None, str(e)
    return BatteryRow(seed, mdp.n_states, dsa.n_states, dsa.k, game.n, ps, pss,
                      ps == pss and every, unpruned == ps, vi0, abs(vi0 - float(ps)), ov, oerr,
                      sv, mem, time.perf_counter() - t0)


def _worker_count(workers):
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, workers)


def battery(n: int = DEFAULT_BATTERY, first_seed: int = 0, params: InstanceParams = InstanceParams(),
            oracle: bool = True, workers: int | None = None) -> list[BatteryRow]:
    seeds = list(range(first_seed, first_seed + n))
    workers = _worker_count(workers)
    if workers == 1:
        return [run_instance(s, params, oracle) for s in seeds]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(run_instance, seeds, [params] * n, [oracle] * n))


def summary_table(rows: list[BatteryRow]) -> str:
    head = "seed  n_mdp n_dsa k  pos  psat      psemsat   pass  unpruned  vi_err    oracle    strategy"
    lines = [head]
    for r in rows:
        orc = "n/a" if r.oracle is None else ("ok" if r.oracle_agrees else "MISMATCH")
        lines.append(f"{r.seed:<5} {r.n_mdp:<5} {r.n_dsa:<5} {r.k:<2} {r.game_positions:<4} "
                     f"{str(r.psat):<9} {str(r.psemsat):<9} {'yes' if r.passed else 'NO':<5} "
                     f"{'same' if r.unpruned_equal else 'DIFF':<9} {r.vi_error:<9.2e} {orc:<9} "
                     f"{'optimal' if r.strategy_optimal else 'FAIL'}")
    n_ok = sum(r.passed for r in rows)
    n_or = sum(r.oracle is not None for r in rows)
    lines.append(f"{n_ok}/{len(rows)} instances pass; {n_or} compared with the brute-force oracle")
    return "\n".join(lines)
