"""Translations of deterministic Rabin/Streett automata into good-for-MDP
Büchi automata, and size accounting.

State provenance is recorded in ``labels``:

* ``("orig", q)``   -- original copy of DSA state ``q`` (nondeterministic);
* ``("copy", q, i)`` -- copy ``i`` of ``q``; ``i = 0`` means "no open challenge";
* ``("sink",)``      -- rejecting sink of the Rabin translation.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _graph
from .automata import (RABIN, STREETT, AlternatingBuchiAutomaton, AutomatonError,
                       DeterministicOmegaAutomaton, NondetBuchiAutomaton)

ORIG = "orig"
COPY = "copy"
SINK = "sink"


def _label_name(label, base_names):
    if label[0] == ORIG:
        return base_names[label[1]]
    if label[0] == COPY:
        return f"({base_names[label[1]]},{label[2]})"
    return "bot"


def _restrict(delta, initial, keep_order):
    """Reindex the states reachable from ``initial`` (in ``keep_order`` order)."""
    reach = _graph.reachable([initial], lambda x: (t for ts in delta[x] for t in ts))
    kept = [x for x in keep_order if x in reach]
    index = {x: i for i, x in enumerate(kept)}
    return kept, index


def dra_to_gfm_nba(aut: DeterministicOmegaAutomaton, prune: bool = False) -> NondetBuchiAutomaton:
    """Rabin automaton to GFM NBA with copies ``Q × {0..k} ∪ {⊥}``.

    From copy 0 the automaton may jump to any copy; copy ``i ≥ 1`` survives
    while the current state avoids ``R_i`` and accepts on ``G_i``.
    """
    if aut.kind != RABIN:
        raise AutomatonError("dra_to_gfm_nba expects a Rabin automaton")
    n, k = aut.n_states, aut.k
    sigma = aut.alphabet.letters

    def idx(q, i):
        return q * (k + 1) + i

    bot = n * (k + 1)
    delta = [[None] * aut.alphabet.size for _ in range(bot + 1)]
    labels = [None] * (bot + 1)
    accepting = set()
    for q in range(n):
        for i in range(k + 1):
            labels[idx(q, i)] = (COPY, q, i)
            if i >= 1 and q in aut.pairs[i - 1].green:
                accepting.add(idx(q, i))
            for a in sigma:
                t = aut.step(q, a)
                if i == 0:
                    delta[idx(q, i)][a] = frozenset(idx(t, j) for j in range(k + 1))
                elif q not in aut.pairs[i - 1].red:
                    delta[idx(q, i)][a] = frozenset({idx(t, i)})
                else:
                    delta[idx(q, i)][a] = frozenset({bot})
    labels[bot] = (SINK,)
    delta[bot] = [frozenset({bot})] * aut.alphabet.size
    initial = idx(aut.initial, 0)
    order = list(range(bot + 1))
    if prune:
        order, index = _restrict(delta, initial, order)
    else:
        index = {x: x for x in order}
    new_delta = tuple(tuple(frozenset(index[t] for t in ts) for ts in delta[x]) for x in order)
    return NondetBuchiAutomaton(
        aut.alphabet, new_delta, index[initial],
        accepting_states=frozenset(index[x] for x in accepting if x in index),
        names=tuple(_label_name(labels[x], aut.names) for x in order),
        labels=tuple(labels[x] for x in order))


def challenge_indices(aut: DeterministicOmegaAutomaton, q: int) -> frozenset[int]:
    """``{0} ∪ {i | q ∈ R_i}`` with 1-based pair indices."""
    return frozenset({0} | {i + 1 for i, p in enumerate(aut.pairs) if q in p.red})


def dsa_to_alt_gfm(aut: DeterministicOmegaAutomaton, prune_withdrawals: bool = True,
                   prune_unreachable: bool = True, literal: bool = False) -> AlternatingBuchiAutomaton:
    """Streett automaton to alternating GFM Büchi automaton.

    Original copies are nondeterministic: on each letter the acceptance
    player may stay or declare (move to copy 0).  Copies ``(q, i)`` are
    universal: the rejection player raises challenges ``j`` at ``R_j`` states.
    An open challenge ``i ≥ 1`` is kept until a ``G_i`` state is seen.
    Transitions between distinct copies, and 0-to-0 transitions, accept.

    ``literal=True`` uses the successor set ``{q'} × I_{q'}`` for copies whose
    challenge is not met, which drops open challenges at states outside
    ``R_i`` (see tests for why this breaks language equivalence).
    ``prune_withdrawals`` removes voluntary moves back to copy 0 while a
    challenge could still be kept open.
    """
    if aut.kind != STREETT:
        raise AutomatonError("dsa_to_alt_gfm expects a Streett automaton")
    n, k = aut.n_states, aut.k
    sigma = aut.alphabet.letters
    chal = [challenge_indices(aut, q) for q in range(n)]

    def cidx(q, i):
        return n + q * (k + 1) + i

    total = n + n * (k + 1)
    delta = [[None] * aut.alphabet.size for _ in range(total)]
    labels = [None] * total
    acc = set()
    for q in range(n):
        labels[q] = (ORIG, q)
        for a in sigma:
            t = aut.step(q, a)
            delta[q][a] = frozenset({t, cidx(t, 0)})
    for q in range(n):
        for i in range(k + 1):
            src = cidx(q, i)
            labels[src] = (COPY, q, i)
            for a in sigma:
                t = aut.step(q, a)
                met = i >= 1 and t in aut.pairs[i - 1].green
                if met:
                    targets = set(chal[t] - {i})
                elif literal or i == 0:
                    targets = set(chal[t])
                else:
                    targets = set(chal[t] | {i})
                if prune_withdrawals and i >= 1 and not met and i in targets:
                    targets.discard(0)
                delta[src][a] = frozenset(cidx(t, j) for j in targets)
                for j in targets:
                    if i != j or i == 0:
                        acc.add((src, a, cidx(t, j)))
    order = list(range(total))
    if prune_unreachable:
        order, index = _restrict(delta, aut.initial, order)
    else:
        index = {x: x for x in order}
    new_delta = tuple(tuple(frozenset(index[t] for t in ts) for ts in delta[x]) for x in order)
    return AlternatingBuchiAutomaton(
        aut.alphabet, new_delta,
        universal=frozenset(index[x] for x in order if labels[x][0] == COPY),
        initial=index[aut.initial],
        accepting_transitions=frozenset((index[s], a, index[t]) for s, a, t in acc
                                        if s in index),
        names=tuple(_label_name(labels[x], aut.names) for x in order),
        labels=tuple(labels[x] for x in order))


@dataclass(frozen=True)
class SizeReport:
    states: int
    nondet_states: int
    universal_states: int
    transitions: int
    accepting_items: int

    def as_dict(self):
        return dict(states=self.states, nondet_states=self.nondet_states,
                    universal_states=self.universal_states, transitions=self.transitions,
                    accepting_items=self.accepting_items)


def size_report(aut, source: DeterministicOmegaAutomaton | None = None) -> SizeReport:
    """Exact counts.  With ``source`` given for an alternating automaton the
    ``n(k+2)`` bound is asserted."""
    if isinstance(aut, DeterministicOmegaAutomaton):
        return SizeReport(aut.n_states, aut.n_states, 0, aut.n_states * aut.alphabet.size,
                          sum(len(p.green) + len(p.red) for p in aut.pairs))
    trans = sum(len(ts) for row in aut.delta for ts in row)
    if aut.state_based:
        items = len(aut.accepting_states)
    else:
        items = len(aut.accepting_transitions)
    rep = SizeReport(aut.n_states, aut.n_states - len(aut.universal), len(aut.universal),
                     trans, items)
    if source is not None and isinstance(aut, AlternatingBuchiAutomaton):
        bound = source.n_states * (source.k + 2)
        if rep.states > bound:
            raise AssertionError(f"{rep.states} states exceed n(k+2) = {bound}")
    return rep
