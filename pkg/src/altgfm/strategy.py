"""Finite-memory control strategies for M×S from positional strategies on M×A.

``A`` is the alternating automaton built from the Streett automaton ``S``.
The memory is a latest appearance record (LAR) over the Streett pairs; at
each step the control strategy copies the choice of the acceptance strategy
at the oldest reachable good copy of the current state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .automata import AutomatonError, DeterministicOmegaAutomaton, STREETT
from .construct import COPY, ORIG, dsa_to_alt_gfm
from .models import MAX, MDP, Game, Move, action_position, product_det, product_game
from .solve import OracleTooLarge, buchi_game_value, evaluate_markov_chain, streett_value

DESCENDING = "descending"
ASCENDING = "ascending"
LAR_MODES = (DESCENDING, ASCENDING)

# copy key of the original (nondeterministic) copy
ORIGINAL = None


class StrategyError(RuntimeError):
    pass


@dataclass(frozen=True)
class LAR:
    """Permutation of pair indices ``1..k``; most recently visited green set first."""

    perm: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "perm", tuple(self.perm))
        if sorted(self.perm) != list(range(1, len(self.perm) + 1)):
            raise ValueError(f"{self.perm} is not a permutation of 1..{len(self.perm)}")

    @classmethod
    def initial(cls, k: int, mode: str = DESCENDING) -> "LAR":
        ids = range(1, k + 1)
        return cls(tuple(reversed(ids)) if mode == DESCENDING else tuple(ids))

    @property
    def k(self):
        return len(self.perm)

    def __str__(self):
        return "(" + ",".join(map(str, self.perm)) + ")"


def lar_update(l: LAR, q: int, pairs, mode: str = DESCENDING) -> LAR:
    """Move the indices of all green sets containing ``q`` to the front.

    Simultaneous hits are ordered by descending index (``mode="descending"``)
    or ascending index; the remaining indices keep their order.
    """
    if mode not in LAR_MODES:
        raise ValueError(f"unknown LAR mode {mode!r}")
    hit = [i + 1 for i, p in enumerate(pairs) if q in p.green]
    if not hit:
        return l
    front = sorted(hit, reverse=(mode == DESCENDING))
    return LAR(tuple(front) + tuple(i for i in l.perm if i not in hit))


# ---------------------------------------------------------------- good copies

@dataclass
class CopyEntry:
    orig_value: object
    values: dict
    good: frozenset
    reachable: frozenset


@dataclass
class GoodCopyTable:
    """Per ``(mdp state, dsa state)``: action-phase values of all copies."""

    entries: dict[tuple[int, int], CopyEntry]
    reachable_positions: frozenset[int]
    copy_index: dict

    def __getitem__(self, key):
        return self.entries[key]


def _copy_index(aut) -> dict:
    if aut.labels is None:
        raise StrategyError("automaton carries no provenance labels")
    out = {}
    for idx, lab in enumerate(aut.labels):
        if lab[0] == ORIG:
            out[(lab[1], ORIGINAL)] = idx
        elif lab[0] == COPY:
            out[(lab[1], lab[2])] = idx
    return out


def sigma_reachable(game: Game, sigma) -> set[int]:
    """Positions reachable when MAX follows ``sigma`` and every other branch is explored."""
    seen = {game.initial}
    todo = [game.initial]
    while todo:
        p = todo.pop()
        ms = game.moves[p]
        chosen = [ms[sigma.get(p, 0)]] if game.owners[p] == MAX else ms
        for m in chosen:
            for s, _ in m.dist:
                if s not in seen:
                    seen.add(s)
                    todo.append(s)
    return seen


def good_copy_table(game: Game, aut, values, sigma) -> GoodCopyTable:
    if game.provenance is None or "mdp_names" not in game.meta:
        raise StrategyError("game was not built by product_game from the Streett construction")
    cidx = _copy_index(aut)
    vals = values.values if hasattr(values, "values") else values
    reach = sigma_reachable(game, sigma)
    n_env = len(game.meta["mdp_names"])
    qs = sorted({q for q, _ in cidx})
    entries = {}
    for s in range(n_env):
        for q in qs:
            orig = cidx.get((q, ORIGINAL))
            if orig is None:
                continue
            ov = vals[action_position(game, s, orig)]
            cv, good, rch = {}, set(), set()
            for (q2, c), a_idx in cidx.items():
                if q2 != q:
                    continue
                pos = action_position(game, s, a_idx)
                cv[c] = vals[pos]
                if cv[c] == ov:
                    good.add(c)
                if pos in reach:
                    rch.add(c)
            zero = cv.get(0)
            if zero is not None and zero > ov:
                raise StrategyError(f"copy 0 of ({s},{q}) beats the original copy")
            for c, v in cv.items():
                if c not in (ORIGINAL, 0) and zero is not None and v > zero:
                    raise StrategyError(f"copy {c} of ({s},{q}) beats copy 0")
                if c is not ORIGINAL and v > ov:
                    raise StrategyError(f"copy {c} of ({s},{q}) beats the original copy")
            entries[(s, q)] = CopyEntry(ov, cv, frozenset(good), frozenset(rch))
    return GoodCopyTable(entries, frozenset(reach), cidx)


def oldest_reachable_good_copy(mdp_state: int, dsa_state: int, l: LAR, table: GoodCopyTable):
    """Copy whose green set was visited longest ago among the reachable good
    copies; copy 0 if it is the only one; otherwise the original copy."""
    e = table[(mdp_state, dsa_state)]
    cands = e.good & e.reachable
    challenged = [c for c in cands if c is not ORIGINAL and c >= 1]
    if challenged:
        rank = {i: r for r, i in enumerate(l.perm)}
        return max(challenged, key=lambda c: (rank[c], c))
    if 0 in cands:
        return 0
    return ORIGINAL


def check_sigma_closure(game: Game, aut, table: GoodCopyTable, sigma) -> None:
    """Every sigma-successor of a reachable good copy is a reachable good copy."""
    cidx = table.copy_index
    rev = {v: k for k, v in cidx.items()}
    m = len(game.meta["aut_names"])
    for (s, q), e in table.entries.items():
        for c in e.good & e.reachable:
            pos = action_position(game, s, cidx[(q, c)])
            mv = game.moves[pos][sigma.get(pos, 0)]
            for apos, _ in mv.dist:
                s2 = apos // 2 // m
                am = game.moves[apos]
                picks = [am[sigma.get(apos, 0)]] if game.owners[apos] == MAX else am
                for pk in picks:
                    (nxt, _), = pk.dist
                    q2, c2 = rev[nxt // 2 % m] if nxt // 2 % m in rev else (None, None)
                    e2 = table.entries.get((s2, q2))
                    if e2 is None or c2 not in e2.good or c2 not in e2.reachable:
                        raise StrategyError(f"sigma leaves the good copies at ({s},{q},{c})")


# ---------------------------------------------------------------- Mealy strategies

@dataclass
class MealyStrategy:
    """Control strategy on M×S with LAR memory.

    ``output[(s, q, perm)]`` is the action name played in product state
    ``(s, q)`` with memory ``perm``; the memory is then updated with the DSA
    state ``δ(q, L(s))``.
    """

    pairs: tuple
    mode: str
    initial_memory: LAR
    output: dict[tuple[int, int, tuple[int, ...]], str]
    memory_states: frozenset = field(default_factory=frozenset)
    copies: dict = field(default_factory=dict)

    def update(self, memory: LAR, next_dsa_state: int) -> LAR:
        return lar_update(memory, next_dsa_state, self.pairs, self.mode)

    def action(self, s: int, q: int, memory: LAR) -> str:
        try:
            return self.output[(s, q, memory.perm)]
        except KeyError:
            raise StrategyError(f"strategy undefined at state {s}, dsa state {q}, memory {memory}") from None


def _check_inputs(mdp: MDP, dsa: DeterministicOmegaAutomaton):
    if dsa.kind != STREETT:
        raise AutomatonError("control strategies are extracted for Streett automata")
    if mdp.is_game:
        raise StrategyError("strategy extraction expects an MDP, not a game arena")


def extract_control_strategy(mdp: MDP, dsa: DeterministicOmegaAutomaton, game: Game | None = None,
                             aut=None, sigma=None, values=None, mode: str = DESCENDING,
                             verify: bool = True) -> MealyStrategy:
    """Build the LAR strategy of M×S copying ``sigma`` at oldest reachable good copies.

    Without ``game``/``sigma`` the construction, product and exact solve are
    run here.  With ``verify`` the result is evaluated and compared with the
    optimal Streett value; a mismatch raises :class:`StrategyError`.
    """
    _check_inputs(mdp, dsa)
    if game is None:
        aut = dsa_to_alt_gfm(dsa)
        game = product_game(mdp, aut)
    if aut is None:
        raise StrategyError("the alternating automaton of the game is required")
    if sigma is None or values is None:
        values, strat = buchi_game_value(game, exact=True)
        sigma = strat.sigma
    table = good_copy_table(game, aut, values, sigma)
    check_sigma_closure(game, aut, table, sigma)
    m0 = lar_update(LAR.initial(dsa.k, mode), dsa.initial, dsa.pairs, mode)
    output, copies = {}, {}
    seen = {(mdp.initial, dsa.initial, m0.perm)}
    todo = [(mdp.initial, dsa.initial, m0)]
    while todo:
        s, q, l = todo.pop()
        q2 = dsa.step(q, mdp.labels[s])
        l2 = lar_update(l, q2, dsa.pairs, mode)
        c = oldest_reachable_good_copy(s, q2, l2, table)
        pos = action_position(game, s, table.copy_index[(q2, c)])
        mi = sigma.get(pos, 0)
        name, dist = mdp.actions[s][mi]
        output[(s, q, l.perm)] = name
        copies[(s, q, l.perm)] = c
        for s2, _ in dist:
            key = (s2, q2, l2.perm)
            if key not in seen:
                seen.add(key)
                todo.append((s2, q2, l2))
    mem = frozenset(p for _, _, p in seen)
    if len(mem) > math.factorial(dsa.k):
        raise StrategyError(f"{len(mem)} memory states exceed k! = {math.factorial(dsa.k)}")
    strat = MealyStrategy(dsa.pairs, mode, m0, output, mem, copies)
    if verify:
        got = evaluate_strategy(mdp, dsa, strat)
        want = streett_value(product_det(mdp, dsa), exact=True)[0][0]
        if got != want:
            raise StrategyError(f"extracted strategy achieves {got}, optimum is {want}")
    return strat


def _strategy_chain(mdp: MDP, dsa: DeterministicOmegaAutomaton, strat: MealyStrategy) -> Game:
    names = [{n: i for i, (n, _) in enumerate(row)} for row in mdp.actions]
    index = {}
    keys = []

    def key_of(s, q, l):
        k = (s, q, l.perm)
        if k not in index:
            index[k] = len(keys)
            keys.append((s, q, l))
        return index[k]

    key_of(mdp.initial, dsa.initial, strat.initial_memory)
    moves = []
    i = 0
    while i < len(keys):
        s, q, l = keys[i]
        a = strat.action(s, q, l)
        if a not in names[s]:
            raise StrategyError(f"action {a!r} is not enabled in state {s}")
        q2 = dsa.step(q, mdp.labels[s])
        l2 = strat.update(l, q2)
        dist = mdp.actions[s][names[s][a]][1]
        moves.append((Move(tuple((key_of(s2, q2, l2), p) for s2, p in dist)),))
        i += 1
    pairs = tuple((frozenset(j for j, (_, q, _) in enumerate(keys) if q in pr.green),
                   frozenset(j for j, (_, q, _) in enumerate(keys) if q in pr.red))
                  for pr in dsa.pairs)
    return Game((MAX,) * len(keys), tuple(moves), 0, pair_kind=STREETT, pairs=pairs)


def evaluate_strategy(mdp: MDP, dsa: DeterministicOmegaAutomaton, strat: MealyStrategy,
                      exact: bool = True):
    """Acceptance probability of ``strat`` from the initial state of M×S."""
    _check_inputs(mdp, dsa)
    return evaluate_markov_chain(_strategy_chain(mdp, dsa, strat), exact=exact)[0]


# ---------------------------------------------------------------- positional baselines

POSITIONAL_LIMIT = 1 << 16


def best_positional_value(mdp: MDP, dsa: DeterministicOmegaAutomaton, on_product: bool = True,
                          limit: int = POSITIONAL_LIMIT) -> Fraction:
    """Best value over positional strategies of M×S (``on_product``) or of M.

    Exhaustive over the part of M×S reachable from the initial state.
    """
    _check_inputs(mdp, dsa)
    prod = product_det(mdp, dsa)
    reach = sorted(prod.reachable())
    if on_product:
        keys = {p: p for p in reach}
    else:
        keys = {p: prod.provenance[p][1] for p in reach}
    groups = sorted({keys[p] for p in reach if len(prod.moves[p]) > 1})
    sizes = {}
    for p in reach:
        if keys[p] in groups:
            sizes[keys[p]] = len(prod.moves[p])
    total = 1
    for g in groups:
        total *= sizes[g]
    if total > limit:
        raise OracleTooLarge(f"{total} positional strategies")
    best = Fraction(0)
    for pick in itertools.product(*(range(sizes[g]) for g in groups)):
        choice = dict(zip(groups, pick))
        fixed = {p: choice.get(keys[p], 0) for p in range(prod.n)}
        v = evaluate_markov_chain(prod.restrict(fixed), exact=True)[0]
        best = max(best, v)
    return best


def reachable_memory(strat: MealyStrategy) -> int:
    return len(strat.memory_states)


__all__ = ["LAR", "lar_update", "GoodCopyTable", "good_copy_table", "oldest_reachable_good_copy",
           "MealyStrategy", "extract_control_strategy", "evaluate_strategy",
           "best_positional_value", "sigma_reachable", "check_sigma_closure", "StrategyError",
           "DESCENDING", "ASCENDING", "ORIGINAL"]
