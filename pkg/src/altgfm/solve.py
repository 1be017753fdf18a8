"""Solvers for product MDPs and stochastic Büchi games.

Two numeric modes share one interface:

* ``exact=False``: value iteration from below in floating point (numpy),
  stopped when successive sweeps differ by at most ``tol``;
* ``exact=True``: rational values.  Value iteration only proposes
  strategies; those are evaluated by exact linear solves and repaired by
  strict-improvement switches until no player can improve, which certifies
  the values.

Quantitative Büchi values are max-min reachability values to the almost-sure
winning region.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import _graph
from .automata import RABIN, STREETT
from .models import CHANCE, MAX, MIN, Game, ModelError

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
ITERATION_CAP = 10**6
GUIDE_TOL = 1e-13


class SolverError(RuntimeError):
    pass


class OracleTooLarge(SolverError):
    pass


@dataclass
class ValueVector:
    values: list
    method: str
    exact: bool
    tol: float | None = None
    iterations: int = 0
    diagnostics: list[str] = field(default_factory=list)

    def __getitem__(self, p):
        return self.values[p]

    def __len__(self):
        return len(self.values)


@dataclass
class PositionalStrategyPair:
    sigma: dict[int, int]
    pi: dict[int, int]


class MEC(NamedTuple):
    states: frozenset[int]
    moves: dict[int, frozenset[int]]


# ---------------------------------------------------------------- exact chains

def _solve_linear(coeffs: dict[int, dict[int, Fraction]], rhs: dict[int, Fraction]) -> dict[int, Fraction]:
    """Gauss-Jordan on ``x_p - Σ c_pq x_q = rhs_p`` with diagonal pivots.

    ``coeffs[p]`` holds the full row including the diagonal.  The systems
    solved here are nonsingular M-matrices, so diagonal pivots never vanish.
    """
    rows = {p: dict(r) for p, r in coeffs.items()}
    b = dict(rhs)
    col: dict[int, set[int]] = {}
    for p, r in rows.items():
        for q in r:
            col.setdefault(q, set()).add(p)
    for x in list(rows):
        rx = rows[x]
        piv = rx[x]
        if piv == 0:
            raise SolverError("singular system in exact solve")
        if piv != 1:
            for q in rx:
                rx[q] /= piv
            b[x] /= piv
        for r_id in list(col.get(x, ())):
            if r_id == x:
                continue
            r = rows[r_id]
            f = r.pop(x)
            col[x].discard(r_id)
            if not f:
                continue
            for q, c in rx.items():
                if q == x:
                    continue
                nv = r.get(q, 0) - f * c
                if nv:
                    if q not in r:
                        col.setdefault(q, set()).add(r_id)
                    r[q] = nv
                elif q in r:
                    del r[q]
                    col[q].discard(r_id)
            b[r_id] -= f * b[x]
    return b


def chain_reach_exact(dists: list, target: set[int]) -> list[Fraction]:
    """Reachability probabilities in a chain given by one distribution per position."""
    n = len(dists)
    pred: list[list[int]] = [[] for _ in range(n)]
    for p, d in enumerate(dists):
        for s, _ in d:
            pred[s].append(p)
    can = _graph.reachable(target, lambda x: pred[x])
    vals = [Fraction(0)] * n
    for t in target:
        vals[t] = Fraction(1)
    unknown = [p for p in sorted(can) if p not in target]
    if unknown:
        coeffs, rhs = {}, {}
        for p in unknown:
            row = {p: Fraction(1)}
            acc = Fraction(0)
            for s, pr in dists[p]:
                if s in target:
                    acc += pr
                elif s in can:
                    row[s] = row.get(s, 0) - pr
            coeffs[p], rhs[p] = row, acc
        sol = _solve_linear(coeffs, rhs)
        for p in unknown:
            vals[p] = sol[p]
    return vals


def chain_reach_float(dists: list, target: set[int]) -> np.ndarray:
    n = len(dists)
    pred: list[list[int]] = [[] for _ in range(n)]
    for p, d in enumerate(dists):
        for s, _ in d:
            pred[s].append(p)
    can = _graph.reachable(target, lambda x: pred[x])
    vals = np.zeros(n)
    for t in target:
        vals[t] = 1.0
    unknown = [p for p in sorted(can) if p not in target]
    if unknown:
        pos = {p: i for i, p in enumerate(unknown)}
        rows, cols, data = [], [], []
        b = np.zeros(len(unknown))
        for p in unknown:
            i = pos[p]
            rows.append(i)
            cols.append(i)
            data.append(1.0)
            for s, pr in dists[p]:
                if s in target:
                    b[i] += float(pr)
                elif s in pos:
                    rows.append(i)
                    cols.append(pos[s])
                    data.append(-float(pr))
        a = sp.csr_matrix((data, (rows, cols)), shape=(len(unknown),) * 2)
        x = spla.spsolve(a.tocsc(), b) if len(unknown) > 1 else b / a.toarray()[0]
        vals[unknown] = np.atleast_1d(x)
    return vals


def _bsccs(game: Game, region: Iterable[int] | None = None) -> list[list[int]]:
    nodes = range(game.n) if region is None else region
    comps = _graph.tarjan_scc(nodes, game.successors)
    out = []
    for comp in comps:
        cs = set(comp)
        if all(s in cs for p in comp for s in game.successors(p)):
            out.append(comp)
    return out


def _component_accepting(game: Game, states: set[int], moves: Mapping[int, Iterable[int]]) -> bool:
    if game.pair_kind == STREETT:
        return all(not (states & p.red) or bool(states & p.green) for p in game.pairs)
    if game.pair_kind == RABIN:
        return any(not (states & p.red) and bool(states & p.green) for p in game.pairs)
    return any(game.moves[p][i].accepting for p in states for i in moves[p])


def evaluate_markov_chain(game: Game, exact: bool = True) -> ValueVector:
    """Probability of acceptance in a chain (one move per position).

    A bottom SCC accepts under the game's Streett/Rabin pairs if present,
    otherwise iff it contains an accepting move.
    """
    if not game.is_chain:
        raise ModelError("evaluate_markov_chain needs exactly one move per position")
    good: set[int] = set()
    for comp in _bsccs(game):
        cs = set(comp)
        if _component_accepting(game, cs, {p: (0,) for p in cs}):
            good |= cs
    dists = [ms[0].dist for ms in game.moves]
    if exact:
        return ValueVector(chain_reach_exact(dists, good), "bscc", True)
    return ValueVector(list(chain_reach_float(dists, good)), "bscc", False)


# ---------------------------------------------------------------- end components

def mec_decomposition(game: Game, states: Iterable[int] | None = None,
                      allowed: Mapping[int, Iterable[int]] | None = None) -> list[MEC]:
    """Maximal end components of an MDP (no MIN choices), optionally inside a
    sub-MDP given by ``states`` and ``allowed`` move indices."""
    if not game.is_mdp and allowed is None:
        raise ModelError("mec_decomposition expects an MDP")
    cur = set(range(game.n)) if states is None else set(states)
    act = {p: set(range(len(game.moves[p]))) if allowed is None else set(allowed.get(p, ()))
           for p in cur}
    while True:
        changed = False
        for p in list(cur):
            keep = {i for i in act[p] if all(s in cur for s, _ in game.moves[p][i].dist)}
            if keep != act[p]:
                act[p] = keep
                changed = True
            if not keep:
                cur.discard(p)
                del act[p]
                changed = True
        comps = _graph.tarjan_scc(sorted(cur), lambda p: (s for i in act[p]
                                                          for s, _ in game.moves[p][i].dist))
        comp_of = {p: ci for ci, comp in enumerate(comps) for p in comp}
        for p in list(cur):
            keep = {i for i in act[p]
                    if all(comp_of.get(s) == comp_of[p] for s, _ in game.moves[p][i].dist)}
            if keep != act[p]:
                act[p] = keep
                changed = True
        if not changed:
            return [MEC(frozenset(c), {p: frozenset(act[p]) for p in c}) for c in comps]


def accepting_ec_union(game: Game) -> set[int]:
    """States lying in accepting end components under the game's pairs."""
    if game.pair_kind == STREETT:
        out: set[int] = set()
        todo = [(set(range(game.n)), None)]
        while todo:
            states, allowed = todo.pop()
            for mec in mec_decomposition(game, states, allowed):
                st = set(mec.states)
                bad = [p for p in game.pairs if st & p.red and not st & p.green]
                if not bad:
                    out |= st
                    continue
                removed = set().union(*(st & p.red for p in bad))
                rest = st - removed
                if rest:
                    todo.append((rest, mec.moves))
        return out
    if game.pair_kind == RABIN:
        out = set()
        for pr in game.pairs:
            for mec in mec_decomposition(game, set(range(game.n)) - pr.red):
                if mec.states & pr.green:
                    out |= mec.states
        return out
    out = set()
    for mec in mec_decomposition(game):
        if _component_accepting(game, set(mec.states), mec.moves):
            out |= mec.states
    return out


# ---------------------------------------------------------------- value iteration

class _Compiled:
    """Moves of a game as a sparse matrix for vectorised sweeps."""

    def __init__(self, game: Game):
        starts, rows, cols, data = [], [], [], []
        k = 0
        for ms in game.moves:
            starts.append(k)
            for m in ms:
                for s, p in m.dist:
                    rows.append(k)
                    cols.append(s)
                    data.append(float(p))
                k += 1
        self.n_moves = k
        self.starts = np.array(starts)
        self.matrix = sp.csr_matrix((data, (rows, cols)), shape=(k, game.n))
        owners = np.array(game.owners)
        self.is_min = owners == MIN

    def sweep(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        mv = self.matrix @ v
        hi = np.maximum.reduceat(mv, self.starts)
        lo = np.minimum.reduceat(mv, self.starts)
        return np.where(self.is_min, lo, hi), mv


def _value_iteration(game: Game, target: set[int], tol: float, cap: int = ITERATION_CAP,
                     zero: set[int] | None = None):
    comp = _Compiled(game)
    v = np.zeros(game.n)
    tmask = np.zeros(game.n, dtype=bool)
    tmask[list(target)] = True
    v[tmask] = 1.0
    zmask = np.zeros(game.n, dtype=bool)
    if zero:
        zmask[list(zero)] = True
    diags = []
    it = 0
    while True:
        it += 1
        nv, _ = comp.sweep(v)
        nv[tmask] = 1.0
        nv[zmask] = 0.0
        delta = float(np.max(np.abs(nv - v))) if game.n else 0.0
        v = nv
        if delta <= tol:
            break
        if it >= cap:
            msg = f"value iteration hit the cap of {cap} sweeps (last change {delta:.3g})"
            log.warning(msg)
            diags.append(msg)
            break
    return v, comp, it, diags


def _move_values(game: Game, p: int, v) -> list:
    return [sum(pr * v[s] for s, pr in m.dist) for m in game.moves[p]]


def _zero_set(game: Game, target: set[int]) -> set[int]:
    owners, moves = game.flat()
    moves = [[(supp, False) for supp, _ in ms] for ms in moves]
    attr, _ = _graph.positive_attractor(owners, moves, set(range(game.n)), set(target))
    return set(range(game.n)) - attr


def _extract(game: Game, target: set[int], v, eps) -> tuple[dict[int, int], dict[int, int]]:
    """Greedy strategies; MAX breaks near-ties towards moves that make
    progress to the target (attractor layering), lowest index otherwise."""
    mvals = [_move_values(game, p, v) for p in range(game.n)]
    sigma: dict[int, int] = {}
    pi: dict[int, int] = {}
    for p in range(game.n):
        if game.owners[p] == MIN:
            lo = min(mvals[p])
            pi[p] = next(i for i, x in enumerate(mvals[p]) if x <= lo + eps)
    layered = set(target)
    pending = [p for p in range(game.n) if p not in layered and v[p] > eps]
    changed = True
    while changed:
        changed = False
        rest = []
        for p in pending:
            ms = game.moves[p]
            if game.owners[p] == MAX:
                opt = [i for i, x in enumerate(mvals[p]) if x >= v[p] - eps]
                hit = next((i for i in opt if any(s in layered for s, _ in ms[i].dist)), None)
                if hit is not None:
                    sigma[p] = hit
                    layered.add(p)
                    changed = True
                    continue
            else:
                lo = min(mvals[p])
                opt = [i for i, x in enumerate(mvals[p]) if x <= lo + eps]
                if all(any(s in layered for s, _ in ms[i].dist) for i in opt):
                    layered.add(p)
                    changed = True
                    continue
            rest.append(p)
        pending = rest
    for p in range(game.n):
        if game.owners[p] == MAX and p not in sigma:
            hi = max(mvals[p])
            sigma[p] = next(i for i, x in enumerate(mvals[p]) if x >= hi - eps)
    return sigma, pi


# ---------------------------------------------------------------- exact reachability games

def _min_response(game: Game, target: set[int], sigma: Mapping[int, int],
                  pi: Mapping[int, int]) -> tuple[list[Fraction], dict[int, int]]:
    """Exact MIN best response (minimal reach probability) against fixed ``sigma``."""
    n = game.n

    def chosen(p, pi_):
        if game.owners[p] == MAX:
            return game.moves[p][sigma[p]]
        if game.owners[p] == MIN:
            return game.moves[p][pi_[p]]
        return game.moves[p][0]

    # positions from which MIN can avoid the target surely
    safe = set(range(n)) - set(target)
    changed = True
    while changed:
        changed = False
        for p in list(safe):
            if game.owners[p] == MIN:
                ok = any(all(s in safe for s in m.support) for m in game.moves[p])
            else:
                ok = all(s in safe for s in chosen(p, pi).support)
            if not ok:
                safe.discard(p)
                changed = True
    pi = dict(pi)
    for p in safe:
        if game.owners[p] == MIN:
            pi[p] = next(i for i, m in enumerate(game.moves[p])
                         if all(s in safe for s in m.support))
    for _ in range(10 * n + 10):
        dists = [chosen(p, pi).dist for p in range(n)]
        v = chain_reach_exact(dists, target)
        switched = False
        for p in range(n):
            if game.owners[p] != MIN or p in safe or p in target:
                continue
            vals = _move_values(game, p, v)
            lo = min(vals)
            if lo < v[p]:
                pi[p] = vals.index(lo)
                switched = True
        if not switched:
            return v, pi
    raise SolverError("exact MIN response did not stabilise")


def _reach_exact(game: Game, target: set[int], sigma: dict[int, int], pi: dict[int, int]):
    zero = _zero_set(game, target)
    rounds = 0
    while True:
        rounds += 1
        v, pi = _min_response(game, target, sigma, pi)
        switched = False
        for p in range(game.n):
            if game.owners[p] != MAX or p in target or p in zero:
                continue
            vals = _move_values(game, p, v)
            hi = max(vals)
            if hi > v[p]:
                sigma[p] = vals.index(hi)
                switched = True
        if not switched:
            return v, sigma, pi, rounds
        if rounds > 10 * game.n + 10:
            raise SolverError("exact strategy repair did not stabilise")


def _reach(game: Game, target: set[int], tol: float, exact: bool):
    target = set(target)
    n = game.n
    if not target:
        zero = [Fraction(0) if exact else 0.0] * n
        sigma = {p: 0 for p in range(n) if game.owners[p] == MAX}
        pi = {p: 0 for p in range(n) if game.owners[p] == MIN}
        return ValueVector(zero, "reach", exact, tol), PositionalStrategyPair(sigma, pi)
    zero_set = _zero_set(game, target)
    vtol = GUIDE_TOL if exact else tol
    v, _, it, diags = _value_iteration(game, target, vtol, zero=zero_set)
    v = [float(x) for x in v]
    sigma, pi = _extract(game, target, v, max(10 * vtol, 1e-11))
    if not exact:
        return (ValueVector([float(x) for x in v], "value-iteration", False, tol, it, diags),
                PositionalStrategyPair(sigma, pi))
    ev, sigma, pi, rounds = _reach_exact(game, target, sigma, pi)
    vec = ValueVector(ev, "exact", True, None, it, diags)
    if rounds > 1:
        vec.diagnostics.append(f"exact repair used {rounds - 1} improvement round(s)")
    return vec, PositionalStrategyPair(sigma, pi)


def reach_value(game: Game, target: Iterable[int] | None = None, tol: float = DEFAULT_TOL,
                exact: bool = False, with_strategies: bool = False):
    """Max-min probability of reaching ``target`` (default: ``game.target``)."""
    target = set(game.target if target is None else target)
    vec, strat = _reach(game, target, tol, exact)
    return (vec, strat) if with_strategies else vec


# ---------------------------------------------------------------- Büchi games

def buchi_game_almost_sure(game: Game) -> set[int]:
    owners, moves = game.flat()
    win, _ = _graph.almost_sure_buchi(owners, moves)
    return win


def buchi_game_value(game: Game, tol: float = DEFAULT_TOL, exact: bool = False):
    """Values and positional strategies for "accepting moves infinitely often"."""
    owners, moves = game.flat()
    win, witness = _graph.almost_sure_buchi(owners, moves)
    vec, strat = _reach(game, win, tol, exact)
    for p in win:
        if game.owners[p] == MAX:
            strat.sigma[p] = witness.get(p, 0)
        elif game.owners[p] == MIN:
            strat.pi[p] = 0
    vec.method = "buchi/" + vec.method
    return vec, strat


def strategy_value(game: Game, sigma: Mapping[int, int], exact: bool = True) -> ValueVector:
    """Büchi value guaranteed by a fixed positional MAX strategy."""
    fixed = {p: sigma[p] for p in range(game.n) if game.owners[p] == MAX}
    vec, _ = buchi_game_value(game.restrict(fixed), exact=exact)
    return vec


def reach_strategy_value(game: Game, sigma: Mapping[int, int], target=None,
                         exact: bool = True) -> ValueVector:
    fixed = {p: sigma[p] for p in range(game.n) if game.owners[p] == MAX}
    return reach_value(game.restrict(fixed), target, exact=exact)


# ---------------------------------------------------------------- Streett/Rabin MDPs

def streett_value(game: Game, tol: float = DEFAULT_TOL, exact: bool = True):
    """Maximal probability of the game's Streett (or Rabin) condition in an MDP.

    Returns the value vector and the union of accepting end components.
    """
    if game.pair_kind not in (STREETT, RABIN):
        raise ModelError("streett_value needs a product carrying Streett or Rabin pairs")
    if not game.is_mdp:
        raise ModelError("streett_value expects an MDP product")
    union = accepting_ec_union(game)
    vec = reach_value(game, union, tol=tol, exact=exact)
    vec.method = f"{game.pair_kind}/" + vec.method
    return vec, union


# ---------------------------------------------------------------- brute force oracle

MAX_PAIRS = 1 << 14


def _chain_value_at(game: Game, chosen: Mapping[int, int], start: int) -> Fraction:
    """Exact acceptance probability from ``start`` when every position plays ``chosen``."""
    def succ(p):
        return (s for s, _ in game.moves[p][chosen.get(p, 0)].dist)

    reach = sorted(_graph.reachable([start], succ))
    local = {p: i for i, p in enumerate(reach)}
    good: set[int] = set()
    for comp in _graph.tarjan_scc(reach, succ):
        cs = set(comp)
        if all(s in cs for p in comp for s in succ(p)):
            if _component_accepting(game, cs, {p: (chosen.get(p, 0),) for p in cs}):
                good |= {local[p] for p in cs}
    if not good:
        return Fraction(0)
    dists = [tuple((local[s], pr) for s, pr in game.moves[p][chosen.get(p, 0)].dist)
             for p in reach]
    return chain_reach_exact(dists, good)[0]


def _lazy_assignments(game: Game, who: str, fixed: Mapping[int, int], limit: int) -> list[dict[int, int]]:
    """Positional choices for ``who`` over the choice positions that are actually
    reachable under them, with ``fixed`` positions pinned and every other
    position explored on all its moves.  Choices at unreachable positions do
    not influence the initial value, so this loses nothing."""
    out: list[dict[int, int]] = []

    def pending(assign):
        seen = {game.initial}
        todo = [game.initial]
        open_ = []
        while todo:
            p = todo.pop()
            ms = game.moves[p]
            if p in fixed:
                ch = (ms[fixed[p]],)
            elif p in assign:
                ch = (ms[assign[p]],)
            elif len(ms) > 1 and game.owners[p] == who:
                open_.append(p)
                continue
            else:
                ch = ms
            for m in ch:
                for s, _ in m.dist:
                    if s not in seen:
                        seen.add(s)
                        todo.append(s)
        return open_

    def rec(assign):
        open_ = pending(assign)
        if not open_:
            out.append(dict(assign))
            if len(out) > limit:
                raise OracleTooLarge(f"more than {limit} reachable {who} strategies")
            return
        p = min(open_)
        for i in range(len(game.moves[p])):
            assign[p] = i
            rec(assign)
            del assign[p]

    rec({})
    return out


def brute_force_value(game: Game, max_pairs: int = MAX_PAIRS) -> Fraction:
    """Exact value at the initial position by enumerating positional strategy
    pairs, restricted to choices at positions reachable under them.

    Independent of the fixpoint and value-iteration code: each pair induces
    a Markov chain that is evaluated through its bottom SCCs.  Raises
    ``OracleTooLarge`` once more than ``max_pairs`` pairs would be needed.
    """
    sigmas = _lazy_assignments(game, MAX, {}, max_pairs)
    spent = 0
    best = None
    for sigma in sigmas:
        worst = None
        for pi in _lazy_assignments(game, MIN, sigma, max_pairs - spent):
            spent += 1
            if spent > max_pairs:
                raise OracleTooLarge(f"more than {max_pairs} strategy pairs")
            v = _chain_value_at(game, {**sigma, **pi}, game.initial)
            if worst is None or v < worst:
                worst = v
            if best is not None and worst <= best:
                break
        if best is None or worst > best:
            best = worst
    return best
