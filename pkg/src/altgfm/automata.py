"""Omega-automata over alphabets of the form 2^AP.

Letters are integers: bit ``j`` of a letter is set iff the ``j``-th atomic
proposition holds.  States are integers ``0..n-1``; human-readable names are
carried separately and do not take part in the semantics.

Acceptance conditions of deterministic automata are state based.  A pair is
stored as ``Pair(green, red)`` under both interpretations:

* Streett: every pair has ``inf ∩ red = ∅`` or ``inf ∩ green ≠ ∅``;
* Rabin: some pair has ``inf ∩ red = ∅`` and ``inf ∩ green ≠ ∅``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

from . import _graph

STREETT = "streett"
RABIN = "rabin"


class AutomatonError(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    aps: tuple[str, ...]

    def __post_init__(self):
        if len(self.aps) < 1:
            raise AutomatonError("alphabet needs at least one atomic proposition")
        if len(set(self.aps)) != len(self.aps):
            raise AutomatonError(f"duplicate atomic propositions in {self.aps}")

    @property
    def size(self) -> int:
        return 1 << len(self.aps)

    @property
    def letters(self) -> range:
        return range(self.size)

    def holds(self, letter: int) -> frozenset[str]:
        return frozenset(ap for j, ap in enumerate(self.aps) if letter >> j & 1)

    def letter(self, props) -> int:
        """Letter for a collection of proposition names."""
        idx = {ap: j for j, ap in enumerate(self.aps)}
        out = 0
        for p in props:
            if p not in idx:
                raise AutomatonError(f"unknown atomic proposition {p!r}")
            out |= 1 << idx[p]
        return out

    def format_letter(self, letter: int) -> str:
        return "{" + ",".join(sorted(self.holds(letter), key=self.aps.index)) + "}"

    def parse_letter(self, token: str) -> int:
        token = token.strip()
        if not (token.startswith("{") and token.endswith("}")):
            raise AutomatonError(f"letter must be written as {{p,q}}: {token!r}")
        body = token[1:-1].strip()
        return self.letter([p.strip() for p in body.split(",")] if body else [])


class Pair(NamedTuple):
    green: frozenset[int]
    red: frozenset[int]


def _names(n, names, prefix="q"):
    if names is None:
        return tuple(f"{prefix}{i}" for i in range(n))
    names = tuple(str(x) for x in names)
    if len(names) != n:
        raise AutomatonError("state name count does not match state count")
    return names


@dataclass(frozen=True)
class DeterministicOmegaAutomaton:
    """Total deterministic automaton with a Streett or Rabin condition."""

    alphabet: Alphabet
    delta: tuple[tuple[int, ...], ...]
    kind: str
    pairs: tuple[Pair, ...] = ()
    initial: int = 0
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        n = len(self.delta)
        if n == 0:
            raise AutomatonError("automaton has no states")
        if self.kind not in (STREETT, RABIN):
            raise AutomatonError(f"unknown acceptance kind {self.kind!r}")
        if not 0 <= self.initial < n:
            raise AutomatonError("initial state out of range")
        for q, row in enumerate(self.delta):
            if len(row) != self.alphabet.size:
                raise AutomatonError(f"state {q} is not total")
            if any(not 0 <= t < n for t in row):
                raise AutomatonError(f"state {q} has a dangling transition")
        pairs = []
        for g, r in self.pairs:
            g, r = frozenset(g), frozenset(r)
            if any(not 0 <= q < n for q in g | r):
                raise AutomatonError("acceptance pair references unknown state")
            if self.kind == STREETT:
                # a red state that is also green can never violate its pair
                r = r - g
            pairs.append(Pair(g, r))
        object.__setattr__(self, "pairs", tuple(pairs))
        object.__setattr__(self, "delta", tuple(tuple(row) for row in self.delta))
        object.__setattr__(self, "names", _names(n, self.names))

    @property
    def n_states(self) -> int:
        return len(self.delta)

    @property
    def k(self) -> int:
        return len(self.pairs)

    def step(self, q: int, letter: int) -> int:
        return self.delta[q][letter]

    def accepts_inf(self, inf: set[int] | frozenset[int]) -> bool:
        """Evaluate the acceptance condition on a set of recurring states."""
        if self.kind == STREETT:
            return all(not (inf & p.red) or bool(inf & p.green) for p in self.pairs)
        return any(not (inf & p.red) and bool(inf & p.green) for p in self.pairs)

    def structurally_equal(self, other) -> bool:
        return (isinstance(other, DeterministicOmegaAutomaton)
                and self.alphabet == other.alphabet and self.delta == other.delta
                and self.kind == other.kind and self.pairs == other.pairs
                and self.initial == other.initial)


@dataclass(frozen=True)
class NondetBuchiAutomaton:
    """Nondeterministic Büchi automaton, state- or transition-based.

    ``accepting_states`` marks every outgoing transition of those states;
    ``accepting_transitions`` holds explicit ``(q, letter, q')`` triples.
    """

    alphabet: Alphabet
    delta: tuple[tuple[frozenset[int], ...], ...]
    initial: int = 0
    accepting_states: frozenset[int] = frozenset()
    accepting_transitions: frozenset[tuple[int, int, int]] = frozenset()
    names: tuple[str, ...] | None = None
    labels: tuple | None = None
    universal: frozenset[int] = field(default=frozenset(), init=False)

    def __post_init__(self):
        n = len(self.delta)
        if n == 0:
            raise AutomatonError("automaton has no states")
        if not 0 <= self.initial < n:
            raise AutomatonError("initial state out of range")
        rows = []
        for q, row in enumerate(self.delta):
            if len(row) != self.alphabet.size:
                raise AutomatonError(f"state {q}: transition row has wrong length")
            row = tuple(frozenset(ts) for ts in row)
            for ts in row:
                if not ts:
                    raise AutomatonError(f"state {q} is not complete")
                if any(not 0 <= t < n for t in ts):
                    raise AutomatonError(f"state {q} has a dangling transition")
            rows.append(row)
        for q, a, t in self.accepting_transitions:
            if not (0 <= q < n and 0 <= a < self.alphabet.size and t in rows[q][a]):
                raise AutomatonError(f"accepting transition {(q, a, t)} does not exist")
        object.__setattr__(self, "delta", tuple(rows))
        object.__setattr__(self, "accepting_states", frozenset(self.accepting_states))
        object.__setattr__(self, "accepting_transitions", frozenset(self.accepting_transitions))
        object.__setattr__(self, "names", _names(n, self.names))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def n_states(self) -> int:
        return len(self.delta)

    @property
    def state_based(self) -> bool:
        return not self.accepting_transitions

    def successors(self, q: int, letter: int) -> list[int]:
        return sorted(self.delta[q][letter])

    def is_accepting(self, q: int, letter: int, t: int) -> bool:
        return q in self.accepting_states or (q, letter, t) in self.accepting_transitions

    def structurally_equal(self, other) -> bool:
        return (type(self) is type(other) and self.alphabet == other.alphabet
                and self.delta == other.delta and self.initial == other.initial
                and self.accepting_states == other.accepting_states
                and self.accepting_transitions == other.accepting_transitions
                and self.universal == other.universal)


class AlternatingBuchiAutomaton(NondetBuchiAutomaton):
    """Büchi automaton whose states are split into nondeterministic and
    universal ones; acceptance is transition based.

    ``labels`` records provenance of each state, e.g. ``("orig", q)`` or
    ``("copy", q, i)`` for automata built by the Streett translation.
    """

    def __init__(self, alphabet, delta, universal, initial=0, accepting_transitions=frozenset(),
                 names=None, labels=None):
        super().__init__(alphabet, delta, initial, frozenset(), accepting_transitions, names, labels)
        universal = frozenset(universal)
        if any(not 0 <= q < self.n_states for q in universal):
            raise AutomatonError("universal state out of range")
        object.__setattr__(self, "universal", universal)

    @property
    def nondet(self) -> frozenset[int]:
        return frozenset(range(self.n_states)) - self.universal


@dataclass(frozen=True)
class LassoWord:
    """The ultimately periodic word ``prefix · period^ω``."""

    prefix: tuple[int, ...]
    period: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "period", tuple(self.period))
        if not self.period:
            raise AutomatonError("lasso period must be nonempty")

    def __len__(self):
        return len(self.prefix) + len(self.period)

    def letter_at(self, pos: int) -> int:
        """Letter at unrolled position ``pos`` in ``0..len-1``."""
        return (self.prefix + self.period)[pos]

    def next_pos(self, pos: int) -> int:
        return pos + 1 if pos + 1 < len(self) else len(self.prefix)


def accepts_lasso_det(aut: DeterministicOmegaAutomaton, word: LassoWord) -> bool:
    q = aut.initial
    for a in word.prefix:
        q = aut.step(q, a)
    # configurations (state at the start of the period); the first repeat closes the cycle
    seen: dict[int, int] = {}
    starts: list[int] = []
    while q not in seen:
        seen[q] = len(starts)
        starts.append(q)
        for a in word.period:
            q = aut.step(q, a)
    inf: set[int] = set()
    for q0 in starts[seen[q]:]:
        x = q0
        for a in word.period:
            inf.add(x)
            x = aut.step(x, a)
    return aut.accepts_inf(inf)


def dualize(aut: DeterministicOmegaAutomaton) -> DeterministicOmegaAutomaton:
    """Same transition structure, complementary language."""
    kind = RABIN if aut.kind == STREETT else STREETT
    pairs = tuple(Pair(p.red, p.green) for p in aut.pairs)
    return DeterministicOmegaAutomaton(aut.alphabet, aut.delta, kind, pairs, aut.initial, aut.names)


def accepts_lasso_alternating(aut: NondetBuchiAutomaton, word: LassoWord) -> bool:
    """Acceptance via the finite acceptance game on (lasso position, state)."""
    n = aut.n_states
    length = len(word)
    owners = []
    moves = []
    for pos in range(length):
        a = word.letter_at(pos)
        nxt = word.next_pos(pos)
        for q in range(n):
            owners.append(_graph.MIN if q in aut.universal else _graph.MAX)
            moves.append([((nxt * n + t,), aut.is_accepting(q, a, t)) for t in aut.successors(q, a)])
    win, _ = _graph.almost_sure_buchi(owners, moves)
    return aut.initial in win


def complete_det(alphabet: Alphabet, partial: dict[tuple[int, int], int], n: int, kind: str,
                 pairs, initial: int = 0, names=None) -> DeterministicOmegaAutomaton:
    """Build a total deterministic automaton, adding a rejecting sink if needed.

    For Streett acceptance the sink gets a fresh pair ``⟨∅, {sink}⟩``; for
    Rabin acceptance it is simply in no green set.
    """
    pairs = [Pair(frozenset(g), frozenset(r)) for g, r in pairs]
    missing = [(q, a) for q in range(n) for a in alphabet.letters if (q, a) not in partial]
    m = n + 1 if missing else n
    sink = n
    delta = [[partial.get((q, a), sink) for a in alphabet.letters] for q in range(n)]
    if missing:
        delta.append([sink] * alphabet.size)
        if kind == STREETT:
            pairs.append(Pair(frozenset(), frozenset({sink})))
        if names is not None:
            names = list(names) + ["sink"]
    return DeterministicOmegaAutomaton(alphabet, tuple(map(tuple, delta)), kind, tuple(pairs),
                                       initial, names if names is None or len(names) == m else None)


def complete_nba(alphabet: Alphabet, partial: dict[tuple[int, int], set[int]], n: int,
                 initial: int = 0, accepting_states=(), accepting_transitions=(),
                 names=None) -> NondetBuchiAutomaton:
    """Build an NBA, sending missing letters to a fresh rejecting sink."""
    missing = [(q, a) for q in range(n) for a in alphabet.letters if not partial.get((q, a))]
    sink = n
    delta = [[frozenset(partial.get((q, a)) or {sink}) for a in alphabet.letters]
             for q in range(n)]
    if missing:
        delta.append([frozenset({sink})] * alphabet.size)
        if names is not None:
            names = list(names) + ["sink"]
    return NondetBuchiAutomaton(alphabet, tuple(map(tuple, delta)), initial,
                                frozenset(accepting_states), frozenset(accepting_transitions), names)
