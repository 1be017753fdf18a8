"""MDPs, stochastic games and their products with automata.

Probabilities are :class:`fractions.Fraction` throughout; floating point
only appears inside the value-iteration solvers.

A :class:`Game` is the common currency of the solvers.  Every position is
owned by MAX (acceptance player), MIN (rejection player) or CHANCE; a move is
a distribution over positions plus an "accepting" flag.  An MDP product is a
game without MIN positions, a Markov chain a game with one move per position.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from . import _graph
from .automata import (Alphabet, DeterministicOmegaAutomaton, NondetBuchiAutomaton, Pair)

MAX, MIN, CHANCE = _graph.MAX, _graph.MIN, _graph.CHANCE
OWNER_NAMES = {MAX: "max", MIN: "min", CHANCE: "chance"}

AUTO, ACTION, STATE, SINK = "auto", "action", "state", "sink"

ROW_TOLERANCE = Fraction(1, 10**12)


class ModelError(ValueError):
    pass


def as_fraction(p) -> Fraction:
    if isinstance(p, Fraction):
        return p
    if isinstance(p, float):
        return Fraction(repr(p))
    return Fraction(p)


def _check_dist(dist, n, where):
    dist = tuple((int(s), as_fraction(p)) for s, p in dist)
    if not dist:
        raise ModelError(f"{where}: empty distribution")
    merged: dict[int, Fraction] = {}
    for s, p in dist:
        if not 0 <= s < n:
            raise ModelError(f"{where}: dangling successor {s}")
        if p < 0:
            raise ModelError(f"{where}: negative probability")
        if p:
            merged[s] = merged.get(s, Fraction(0)) + p
    total = sum(merged.values(), Fraction(0))
    if abs(total - 1) > ROW_TOLERANCE:
        raise ModelError(f"{where}: row sum {float(total):.6g}")
    if total != 1:
        merged = {s: p / total for s, p in merged.items()}
    return tuple(sorted(merged.items()))


@dataclass(frozen=True)
class MDP:
    """Labelled MDP; with ``owners`` containing MIN it is a stochastic game arena.

    ``actions[s]`` is a tuple of ``(name, distribution)`` pairs and a
    distribution is a tuple of ``(successor, probability)``.
    """

    alphabet: Alphabet
    labels: tuple[int, ...]
    actions: tuple[tuple[tuple[str, tuple[tuple[int, Fraction], ...]], ...], ...]
    initial: int = 0
    names: tuple[str, ...] | None = None
    owners: tuple[int, ...] | None = None

    def __post_init__(self):
        n = len(self.labels)
        if n == 0 or len(self.actions) != n:
            raise ModelError("labels and actions must cover the same nonempty state set")
        if not 0 <= self.initial < n:
            raise ModelError("initial state out of range")
        for s, a in enumerate(self.labels):
            if not 0 <= a < self.alphabet.size:
                raise ModelError(f"state {s}: label outside alphabet")
        acts = []
        for s, row in enumerate(self.actions):
            if not row:
                raise ModelError(f"state {s} has no enabled action")
            names = [name for name, _ in row]
            if len(set(names)) != len(names):
                raise ModelError(f"state {s}: duplicate action names")
            acts.append(tuple((str(name), _check_dist(d, n, f"state {s} action {name}"))
                              for name, d in row))
        object.__setattr__(self, "actions", tuple(acts))
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"s{i}" for i in range(n)))
        elif len(self.names) != n:
            raise ModelError("state name count does not match state count")
        else:
            object.__setattr__(self, "names", tuple(map(str, self.names)))
        owners = tuple(self.owners) if self.owners is not None else (MAX,) * n
        if len(owners) != n or any(o not in (MAX, MIN) for o in owners):
            raise ModelError("owner partition must assign max/min to every state")
        object.__setattr__(self, "owners", owners)

    @property
    def n_states(self) -> int:
        return len(self.labels)

    @property
    def is_game(self) -> bool:
        return MIN in self.owners


class Move(NamedTuple):
    dist: tuple[tuple[int, Fraction], ...]
    accepting: bool = False
    label: object = None

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.dist)


@dataclass(frozen=True)
class Game:
    """Turn-based stochastic game with move-based Büchi marks.

    ``pairs``/``pair_kind`` optionally carry a Streett or Rabin condition over
    positions, ``target`` a reachability target.  ``provenance[p]`` is a tuple
    ``(phase, mdp_state, automaton_state)``.
    """

    owners: tuple[int, ...]
    moves: tuple[tuple[Move, ...], ...]
    initial: int = 0
    provenance: tuple | None = None
    pair_kind: str | None = None
    pairs: tuple[Pair, ...] = ()
    target: frozenset[int] = frozenset()
    meta: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        n = len(self.owners)
        if n == 0 or len(self.moves) != n:
            raise ModelError("owners and moves must cover the same nonempty position set")
        if not 0 <= self.initial < n:
            raise ModelError("initial position out of range")
        rows = []
        for p, ms in enumerate(self.moves):
            if not ms:
                raise ModelError(f"position {p} has no move")
            if self.owners[p] == CHANCE and len(ms) != 1:
                raise ModelError(f"chance position {p} must have exactly one move")
            rows.append(tuple(Move(_check_dist(m.dist, n, f"position {p}"), bool(m.accepting), m.label)
                              for m in ms))
        object.__setattr__(self, "moves", tuple(rows))
        object.__setattr__(self, "owners", tuple(self.owners))
        object.__setattr__(self, "target", frozenset(self.target))
        if any(not 0 <= t < n for t in self.target):
            raise ModelError("target position out of range")
        if self.provenance is not None:
            if len(self.provenance) != n:
                raise ModelError("provenance must cover every position")
            object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "pairs", tuple(Pair(frozenset(g), frozenset(r))
                                                for g, r in self.pairs))

    @property
    def n(self) -> int:
        return len(self.owners)

    @property
    def is_mdp(self) -> bool:
        return MIN not in self.owners

    @property
    def is_chain(self) -> bool:
        return all(len(ms) == 1 for ms in self.moves)

    def flat(self):
        """``(owners, moves)`` in the support-only form used by ``_graph``.

        Positions with a single move are reported as CHANCE.
        """
        owners = [CHANCE if len(ms) == 1 else o for o, ms in zip(self.owners, self.moves)]
        moves = [[(m.support, m.accepting) for m in ms] for ms in self.moves]
        return owners, moves

    def successors(self, p: int):
        return {s for m in self.moves[p] for s, _ in m.dist}

    def accepting_moves(self) -> frozenset[tuple[int, int]]:
        return frozenset((p, i) for p, ms in enumerate(self.moves)
                         for i, m in enumerate(ms) if m.accepting)

    def restrict(self, choice: Mapping[int, int]) -> "Game":
        """Fix the move at the positions in ``choice``."""
        moves = tuple((ms[choice[p]],) if p in choice else ms for p, ms in enumerate(self.moves))
        owners = tuple(CHANCE if p in choice else o for p, o in enumerate(self.owners))
        return Game(owners, moves, self.initial, self.provenance, self.pair_kind, self.pairs,
                    self.target, self.meta)

    def reachable(self) -> set[int]:
        return _graph.reachable([self.initial], self.successors)

    def structurally_equal(self, other) -> bool:
        return (isinstance(other, Game) and self.owners == other.owners
                and self.moves == other.moves and self.initial == other.initial
                and self.pair_kind == other.pair_kind and self.pairs == other.pairs
                and self.target == other.target and self.provenance == other.provenance)


def _check_alphabet(mdp: MDP, aut):
    if mdp.alphabet != aut.alphabet:
        raise ModelError(f"alphabet mismatch: {mdp.alphabet.aps} vs {aut.alphabet.aps}")


def _explore(initial, expand):
    """BFS product construction; ``expand(key)`` yields ``(owner, [(dist_keys, acc, label)])``."""
    index = {initial: 0}
    keys = [initial]
    owners, moves = [], []
    i = 0
    while i < len(keys):
        owner, ms = expand(keys[i])
        row = []
        for dist, acc, label in ms:
            d = []
            for key, p in dist:
                if key not in index:
                    index[key] = len(keys)
                    keys.append(key)
                d.append((index[key], p))
            row.append(Move(tuple(d), acc, label))
        owners.append(owner)
        moves.append(tuple(row))
        i += 1
    return keys, owners, moves


def product_nba(mdp: MDP, aut: NondetBuchiAutomaton) -> Game:
    """Synchronous product; the automaton reads ``L(s)`` before the MDP moves.

    Product actions are ``(action, q')`` with ``q' ∈ δ(q, L(s))``; a move is
    accepting iff the automaton transition is.  Only the part reachable from
    ``(s0, q0)`` is built.
    """
    _check_alphabet(mdp, aut)

    def expand(key):
        s, q = key
        a = mdp.labels[s]
        ms = []
        for name, dist in mdp.actions[s]:
            for t in aut.successors(q, a):
                ms.append((tuple(((s2, t), p) for s2, p in dist), aut.is_accepting(q, a, t),
                           (name, t)))
        return mdp.owners[s], ms

    keys, owners, moves = _explore((mdp.initial, aut.initial), expand)
    return Game(tuple(owners), tuple(moves), 0, tuple((STATE, s, q) for s, q in keys),
                meta={"mdp_names": mdp.names, "aut_names": aut.names})


def product_det(mdp: MDP, aut: DeterministicOmegaAutomaton) -> Game:
    """Product with a deterministic automaton; pairs lifted through the
    automaton component."""
    _check_alphabet(mdp, aut)

    def expand(key):
        s, q = key
        t = aut.step(q, mdp.labels[s])
        return mdp.owners[s], [(tuple(((s2, t), p) for s2, p in dist), False, name)
                               for name, dist in mdp.actions[s]]

    keys, owners, moves = _explore((mdp.initial, aut.initial), expand)
    pairs = tuple(Pair(frozenset(i for i, (_, q) in enumerate(keys) if q in pr.green),
                       frozenset(i for i, (_, q) in enumerate(keys) if q in pr.red))
                  for pr in aut.pairs)
    return Game(tuple(owners), tuple(moves), 0, tuple((STATE, s, q) for s, q in keys),
                pair_kind=aut.kind, pairs=pairs,
                meta={"mdp_names": mdp.names, "aut_names": aut.names})


def product_game(env: MDP, aut: NondetBuchiAutomaton) -> Game:
    """Büchi game of an MDP (or game arena) and an alternating automaton.

    Two choice phases per step: at ``(s, q, auto)`` the owner of ``q``
    (MAX for nondeterministic, MIN for universal states) picks
    ``q' ∈ δ(q, L(s))``, the accepting mark sitting on this move; at
    ``(s, q', action)`` the owner of ``s`` picks an action whose distribution
    leads to ``(s', q', auto)``.  All ``S × Q`` combinations are built, so
    every automaton copy of every state has a position.
    """
    _check_alphabet(env, aut)
    n, m = env.n_states, aut.n_states

    def auto(s, q):
        return 2 * (s * m + q)

    def action(s, q):
        return 2 * (s * m + q) + 1

    owners, moves, prov = [], [], []
    for s in range(n):
        a = env.labels[s]
        for q in range(m):
            owners.append(MIN if q in aut.universal else MAX)
            moves.append(tuple(Move(((action(s, t), Fraction(1)),), aut.is_accepting(q, a, t), t)
                               for t in aut.successors(q, a)))
            prov.append((AUTO, s, q))
            owners.append(env.owners[s])
            moves.append(tuple(Move(tuple((auto(s2, q), p) for s2, p in dist), False, name)
                               for name, dist in env.actions[s]))
            prov.append((ACTION, s, q))
    return Game(tuple(owners), tuple(moves), auto(env.initial, aut.initial), tuple(prov),
                meta={"mdp_names": env.names, "aut_names": aut.names})


def auto_position(game: Game, s: int, q: int) -> int:
    m = len(game.meta["aut_names"])
    return 2 * (s * m + q)


def action_position(game: Game, s: int, q: int) -> int:
    m = len(game.meta["aut_names"])
    return 2 * (s * m + q) + 1


@dataclass(frozen=True)
class AugmentedModel:
    """Limit-reachability model: accepting moves lead to ``sink`` w.p. ``1 - zeta``."""

    game: Game
    base: Game
    zeta: Fraction
    sink: int


def augment(game: Game, zeta) -> AugmentedModel:
    zeta = as_fraction(zeta)
    if not 0 < zeta < 1:
        raise ModelError(f"zeta must lie in (0,1), got {zeta}")
    t = game.n
    moves = []
    for ms in game.moves:
        row = []
        for mv in ms:
            if mv.accepting:
                dist = ((t, 1 - zeta),) + tuple((s, zeta * p) for s, p in mv.dist)
                row.append(Move(dist, False, mv.label))
            else:
                row.append(mv)
        moves.append(tuple(row))
    moves.append((Move(((t, Fraction(1)),), False, "loop"),))
    prov = None if game.provenance is None else game.provenance + ((SINK, None, None),)
    aug = Game(game.owners + (CHANCE,), tuple(moves), game.initial, prov,
               target=frozenset({t}), meta=game.meta)
    return AugmentedModel(aug, game, zeta, t)
