"""Graph algorithms shared by the automata and solver modules.

Games are given in a flat form: ``owners[p]`` is one of MAX, MIN, CHANCE and
``moves[p]`` is a list of ``(support, accepting)`` pairs, where ``support`` is
the tuple of successor positions that a move reaches with positive
probability.  CHANCE positions have exactly one move.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence

MAX, MIN, CHANCE = 0, 1, 2

FlatMoves = Sequence[Sequence[tuple[Sequence[int], bool]]]


def tarjan_scc(nodes: Iterable[int], succ: Callable[[int], Iterable[int]]) -> list[list[int]]:
    """Strongly connected components, iterative Tarjan.

    ``succ`` may yield nodes outside ``nodes``; they are ignored.
    """
    nodes = list(nodes)
    member = set(nodes)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter([y for y in succ(root) if y in member]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([y for y in succ(w) if y in member])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(sorted(comp))
    return sccs


def reachable(start: Iterable[int], succ: Callable[[int], Iterable[int]]) -> set[int]:
    seen = set(start)
    todo = list(seen)
    while todo:
        x = todo.pop()
        for y in succ(x):
            if y not in seen:
                seen.add(y)
                todo.append(y)
    return seen


def positive_attractor(owners: Sequence[int], moves: FlatMoves, region: set[int],
                       target: set[int] | None = None) -> tuple[set[int], dict[int, int]]:
    """Positions of ``region`` from which MAX reaches, with positive probability,
    an accepting move (or a ``target`` position) without leaving ``region``.

    Returns the attractor and, for MAX positions in it, a witness move index
    (lowest index among the moves available when the position joined).
    MIN and CHANCE positions are assumed to have all moves inside ``region``.
    """
    target = target or set()
    attr: set[int] = set(p for p in target if p in region)
    witness: dict[int, int] = {}
    pending = [p for p in region if p not in attr]
    changed = True
    while changed:
        changed = False
        rest = []
        for p in pending:
            ms = moves[p]
            if owners[p] == MAX:
                hit = None
                for i, (supp, acc) in enumerate(ms):
                    if not all(y in region for y in supp):
                        continue
                    if acc or any(y in attr for y in supp):
                        hit = i
                        break
                if hit is not None:
                    witness[p] = hit
                    attr.add(p)
                    changed = True
                    continue
            else:
                if ms and all(acc or any(y in attr for y in supp) for supp, acc in ms):
                    attr.add(p)
                    changed = True
                    continue
            rest.append(p)
        pending = rest
    return attr, witness


def opponent_attractor(owners: Sequence[int], moves: FlatMoves, region: set[int],
                       bad: set[int]) -> set[int]:
    """Positions of ``region`` from which MIN (with chance on her side) hits
    ``bad`` or leaves ``region`` with positive probability."""
    attr = set(p for p in bad if p in region)
    pending = [p for p in region if p not in attr]

    def hits(supp):
        return any(y in attr or y not in region for y in supp)

    changed = True
    while changed:
        changed = False
        rest = []
        for p in pending:
            ms = moves[p]
            if owners[p] == MAX:
                ok = all(hits(supp) for supp, _ in ms)
            else:
                ok = any(hits(supp) for supp, _ in ms)
            if ok:
                attr.add(p)
                changed = True
            else:
                rest.append(p)
        pending = rest
    return attr


def almost_sure_buchi(owners: Sequence[int], moves: FlatMoves,
                      region: set[int] | None = None) -> tuple[set[int], dict[int, int]]:
    """Almost-sure winning region of MAX for "accepting moves infinitely often".

    Nested fixpoint: repeatedly remove the MIN-attractor of the positions that
    cannot positively reach an accepting move.  Returns the winning region and
    a MAX strategy on it (attractor witnesses of the final iteration).
    """
    x = set(range(len(owners))) if region is None else set(region)
    while True:
        pos, witness = positive_attractor(owners, moves, x)
        lost = x - pos
        if not lost:
            return x, witness
        x -= opponent_attractor(owners, moves, x, lost)
