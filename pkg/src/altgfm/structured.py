"""Line-oriented text format ("gfm-format 1") for every object the tools exchange.

A document starts with ``gfm-format 1`` and ``kind <kind>``; each further line
is a keyword followed by whitespace-separated tokens (shell quoting rules).
Probabilities are exact fractions such as ``1/2``; decimals are accepted on
input.  ``#`` starts a comment.  See ``docs/format.md``.
"""

from __future__ import annotations

import dataclasses
import json
import shlex
from fractions import Fraction

from .automata import (AlternatingBuchiAutomaton, Alphabet, AutomatonError,
                       DeterministicOmegaAutomaton, NondetBuchiAutomaton, Pair)
from .models import CHANCE, MAX, MIN, MDP, ROW_TOLERANCE, Game, ModelError, Move
from .strategy import LAR, LAR_MODES, MealyStrategy, lar_update

VERSION = 1
HEADER = f"gfm-format {VERSION}"
KINDS = ("automaton", "mdp", "game", "strategy", "report")

_OWNER = {MAX: "max", MIN: "min", CHANCE: "chance"}
_OWNER_OF = {v: k for k, v in _OWNER.items()}


class StructuredError(ValueError):
    def __init__(self, msg, line=None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


# ---------------------------------------------------------------- tokens

def _q(s) -> str:
    return shlex.quote(str(s))


def _js(x) -> str:
    return shlex.quote(json.dumps(x, separators=(",", ":"), ensure_ascii=False))


def _tuplify(x):
    if isinstance(x, list):
        return tuple(_tuplify(v) for v in x)
    return x


def _ids(xs) -> str:
    return ",".join(str(x) for x in sorted(xs))


def _parse_ids(tok: str, line) -> frozenset[int]:
    if tok == "":
        return frozenset()
    try:
        return frozenset(int(x) for x in tok.split(","))
    except ValueError:
        raise StructuredError(f"bad index list {tok!r}", line) from None


def _perm(tok: str, line) -> tuple[int, ...]:
    if tok in ("", "()"):
        return ()
    try:
        return tuple(int(x) for x in tok.strip("()").split(","))
    except ValueError:
        raise StructuredError(f"bad permutation {tok!r}", line) from None


def _prob(tok: str, line) -> Fraction:
    try:
        p = Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise StructuredError(f"bad probability {tok!r}", line) from None
    if p < 0:
        raise StructuredError(f"negative probability {tok}", line)
    return p


def _dist_tokens(dist) -> str:
    return " ".join(f"{s}:{p}" for s, p in dist)


def _parse_dist(toks, n, line):
    dist = []
    for t in toks:
        s, sep, p = t.partition(":")
        if not sep:
            raise StructuredError(f"expected successor:probability, found {t!r}", line)
        try:
            si = int(s)
        except ValueError:
            raise StructuredError(f"bad successor {s!r}", line) from None
        if n is not None and not 0 <= si < n:
            raise StructuredError(f"dangling successor {si}", line)
        dist.append((si, _prob(p, line)))
    if not dist:
        raise StructuredError("empty distribution", line)
    total = sum((p for _, p in dist), Fraction(0))
    if abs(total - 1) > ROW_TOLERANCE:
        raise StructuredError(f"row sum {float(total):.6g}", line)
    return tuple(dist)


def _pair_line(p: Pair) -> str:
    return f"pair green={_ids(p.green)} red={_ids(p.red)}"


# ---------------------------------------------------------------- emitters

def _emit_alphabet(al: Alphabet) -> str:
    return "ap " + " ".join(_q(a) for a in al.aps)


def _emit_automaton(aut) -> list[str]:
    al = aut.alphabet
    out = ["kind automaton"]
    if isinstance(aut, DeterministicOmegaAutomaton):
        out += ["type deterministic", f"acceptance {aut.kind}"]
    elif isinstance(aut, AlternatingBuchiAutomaton):
        out += ["type alternating", "acceptance buchi"]
    else:
        out += ["type nondeterministic", "acceptance buchi"]
    out += [_emit_alphabet(al), f"states {aut.n_states}", f"initial {aut.initial}"]
    labels = getattr(aut, "labels", None)
    for q in range(aut.n_states):
        line = f"state {q} {_q(aut.names[q])}"
        if labels is not None:
            line += " " + _js(labels[q])
        out.append(line)
    if isinstance(aut, DeterministicOmegaAutomaton):
        for q in range(aut.n_states):
            for a in al.letters:
                out.append(f"trans {q} {al.format_letter(a)} {aut.step(q, a)}")
        out += [_pair_line(p) for p in aut.pairs]
        return out
    if isinstance(aut, AlternatingBuchiAutomaton):
        out.append("universal " + _ids(aut.universal))
    for q in sorted(aut.accepting_states):
        out.append(f"accepting-state {q}")
    for q in range(aut.n_states):
        for a in al.letters:
            for t in aut.successors(q, a):
                acc = " acc" if (q, a, t) in aut.accepting_transitions else ""
                out.append(f"trans {q} {al.format_letter(a)} {t}{acc}")
    return out


def _emit_mdp(m: MDP) -> list[str]:
    al = m.alphabet
    out = ["kind mdp", _emit_alphabet(al), f"states {m.n_states}", f"initial {m.initial}"]
    for s in range(m.n_states):
        out.append(f"state {s} {_q(m.names[s])} {_OWNER[m.owners[s]]} {al.format_letter(m.labels[s])}")
    for s in range(m.n_states):
        for name, dist in m.actions[s]:
            out.append(f"action {s} {_q(name)} {_dist_tokens(dist)}")
    return out


def _emit_game(g: Game) -> list[str]:
    out = ["kind game", f"positions {g.n}", f"initial {g.initial}"]
    for p in range(g.n):
        line = f"position {p} {_OWNER[g.owners[p]]}"
        if g.provenance is not None:
            line += " " + _js(g.provenance[p])
        out.append(line)
    for p in range(g.n):
        for m in g.moves[p]:
            out.append(f"move {p} {'acc' if m.accepting else '-'} {_js(m.label)} {_dist_tokens(m.dist)}")
    if g.pair_kind is not None:
        out.append(f"acceptance {g.pair_kind}")
        out += [_pair_line(p) for p in g.pairs]
    if g.target:
        out.append(f"target {_ids(g.target)}")
    for key in sorted(g.meta):
        try:
            out.append(f"meta {_q(key)} {_js(g.meta[key])}")
        except TypeError:
            # only JSON-representable metadata travels
            continue
    return out


def _emit_strategy(st: MealyStrategy) -> list[str]:
    out = ["kind strategy", f"mode {st.mode}", f"pairs {len(st.pairs)}"]
    out += [_pair_line(p) for p in st.pairs]
    out.append(f"initial-memory {_perm_tok(st.initial_memory.perm)}")
    mem = sorted(st.memory_states or {k[2] for k in st.output})
    qs = sorted({k[1] for k in st.output})
    for perm in mem:
        for q in qs:
            nxt = lar_update(LAR(perm), q, st.pairs, st.mode)
            out.append(f"update {_perm_tok(perm)} {q} {_perm_tok(nxt.perm)}")
    for key in sorted(st.output):
        s, q, perm = key
        line = f"out {s} {q} {_perm_tok(perm)} {_q(st.output[key])}"
        if key in st.copies:
            c = st.copies[key]
            line += " orig" if c is None else f" copy={c}"
        out.append(line)
    return out


def _perm_tok(perm) -> str:
    return "(" + ",".join(map(str, perm)) + ")"


def _report_value(v) -> str:
    if isinstance(v, bool):
        return f"b {'true' if v else 'false'}"
    if isinstance(v, int):
        return f"i {v}"
    if isinstance(v, Fraction):
        return f"q {v}"
    if isinstance(v, float):
        return f"f {v!r}"
    if isinstance(v, str):
        return f"s {_q(v)}"
    if isinstance(v, (list, tuple)) and v and all(isinstance(x, Fraction) for x in v):
        return "Q " + " ".join(map(str, v))
    if isinstance(v, (list, tuple)) and v and all(isinstance(x, float) for x in v):
        return "F " + " ".join(map(repr, v))
    return "j " + _js(_jsonable(v))


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, set, frozenset)):
        items = sorted(v) if isinstance(v, (set, frozenset)) else v
        return [_jsonable(x) for x in items]
    return v


def _emit_report(rep) -> list[str]:
    if dataclasses.is_dataclass(rep):
        # timing fields are dropped so that reports are byte stable
        rep = {f.name: getattr(rep, f.name) for f in dataclasses.fields(rep) if f.name != "timings"}
    out = ["kind report"]
    for key in sorted(rep):
        out.append(f"field {_q(key)} {_report_value(rep[key])}")
    return out


def emit_structured(obj) -> str:
    """Serialise an automaton, MDP, game, control strategy or report (dict or dataclass)."""
    if isinstance(obj, (DeterministicOmegaAutomaton, NondetBuchiAutomaton)):
        body = _emit_automaton(obj)
    elif isinstance(obj, MDP):
        body = _emit_mdp(obj)
    elif isinstance(obj, Game):
        body = _emit_game(obj)
    elif isinstance(obj, MealyStrategy):
        body = _emit_strategy(obj)
    elif isinstance(obj, dict) or dataclasses.is_dataclass(obj):
        body = _emit_report(obj)
    else:
        raise StructuredError(f"cannot serialise {type(obj).__name__}")
    return "\n".join([HEADER] + body + ["end"]) + "\n"


# ---------------------------------------------------------------- parser

def _lines(text: str):
    out = []
    for no, raw in enumerate(text.splitlines(), 1):
        try:
            toks = shlex.split(raw, comments=True)
        except ValueError as e:
            raise StructuredError(str(e), no) from None
        if toks:
            out.append((no, toks))
    return out


def _need(toks, n, no):
    if len(toks) < n:
        raise StructuredError(f"'{toks[0]}' needs {n - 1} argument(s)", no)


def _int(tok, no, what="index") -> int:
    try:
        return int(tok)
    except ValueError:
        raise StructuredError(f"bad {what} {tok!r}", no) from None


def _json(tok, no):
    try:
        return _tuplify(json.loads(tok))
    except json.JSONDecodeError as e:
        raise StructuredError(f"bad JSON value {tok!r}: {e.msg}", no) from None


def _pair(toks, no) -> Pair:
    _need(toks, 3, no)
    fields = {}
    for t in toks[1:]:
        key, sep, val = t.partition("=")
        if not sep or key not in ("green", "red"):
            raise StructuredError(f"expected green=... red=..., found {t!r}", no)
        fields[key] = _parse_ids(val, no)
    if set(fields) != {"green", "red"}:
        raise StructuredError("pair needs both green= and red=", no)
    return Pair(fields["green"], fields["red"])


class _Body:
    """Keyword lines of one document, with helpers for single-valued keys."""

    def __init__(self, lines):
        self.lines = lines
        self.first = lines[0][0] if lines else None

    def all(self, key):
        return [(no, toks) for no, toks in self.lines if toks[0] == key]

    def one(self, key, default=None, required=True):
        found = self.all(key)
        if len(found) > 1:
            raise StructuredError(f"duplicate '{key}' line", found[1][0])
        if not found:
            if required and default is None:
                raise StructuredError(f"missing '{key}' line", self.first)
            return None, default
        no, toks = found[0]
        _need(toks, 2, no)
        return no, toks[1:]

    def check_keys(self, allowed):
        for no, toks in self.lines:
            if toks[0] not in allowed:
                raise StructuredError(f"unknown keyword {toks[0]!r}", no)


def _in_range(i, n, no, what):
    if not 0 <= i < n:
        raise StructuredError(f"dangling {what} {i}", no)
    return i


def _parse_alphabet(b: _Body) -> Alphabet:
    no, aps = b.one("ap")
    try:
        return Alphabet(tuple(aps))
    except AutomatonError as e:
        raise StructuredError(str(e), no) from None


def _letter(al: Alphabet, tok, no) -> int:
    try:
        return al.parse_letter(tok)
    except AutomatonError as e:
        raise StructuredError(str(e), no) from None


def _states(b: _Body, key="states"):
    no, v = b.one(key)
    n = _int(v[0], no, "count")
    if n <= 0:
        raise StructuredError(f"'{key}' must be positive", no)
    ino, iv = b.one("initial")
    return n, _in_range(_int(iv[0], ino), n, ino, "initial state")


def _parse_automaton(b: _Body):
    b.check_keys({"type", "acceptance", "ap", "states", "initial", "state", "trans", "pair",
                  "universal", "accepting-state"})
    tno, (typ, *_) = b.one("type")
    if typ not in ("deterministic", "nondeterministic", "alternating"):
        raise StructuredError(f"unknown automaton type {typ!r}", tno)
    ano, (acc, *_) = b.one("acceptance")
    al = _parse_alphabet(b)
    n, init = _states(b)
    names = [f"q{q}" for q in range(n)]
    labels = [None] * n
    has_labels = False
    for no, toks in b.all("state"):
        _need(toks, 3, no)
        q = _in_range(_int(toks[1], no), n, no, "state")
        names[q] = toks[2]
        if len(toks) > 3:
            labels[q] = _json(toks[3], no)
            has_labels = True
    succ: dict[tuple[int, int], set[int]] = {}
    acc_t = set()
    for no, toks in b.all("trans"):
        _need(toks, 4, no)
        q = _in_range(_int(toks[1], no), n, no, "state")
        a = _letter(al, toks[2], no)
        t = _in_range(_int(toks[3], no), n, no, "successor")
        succ.setdefault((q, a), set()).add(t)
        if len(toks) > 4:
            if toks[4] != "acc":
                raise StructuredError(f"unexpected {toks[4]!r} after transition", no)
            acc_t.add((q, a, t))
    missing = [(q, a) for q in range(n) for a in al.letters if (q, a) not in succ]
    if missing:
        q, a = missing[0]
        raise StructuredError(f"state {q} has no transition on {al.format_letter(a)}", b.first)
    pairs = []
    for no, toks in b.all("pair"):
        p = _pair(toks, no)
        for i in p.green | p.red:
            _in_range(i, n, no, "state")
        pairs.append(p)
    try:
        if typ == "deterministic":
            if acc not in ("streett", "rabin"):
                raise StructuredError(f"deterministic automata use streett or rabin, not {acc!r}", ano)
            for (q, a), ts in succ.items():
                if len(ts) > 1:
                    raise StructuredError(f"state {q} is nondeterministic on {al.format_letter(a)}",
                                          b.first)
            if acc_t:
                raise StructuredError("deterministic automata carry pairs, not accepting transitions",
                                      b.first)
            delta = tuple(tuple(next(iter(succ[(q, a)])) for a in al.letters) for q in range(n))
            return DeterministicOmegaAutomaton(al, delta, acc, tuple(pairs), init, tuple(names))
        if acc != "buchi":
            raise StructuredError(f"{typ} automata use buchi acceptance, not {acc!r}", ano)
        if pairs:
            raise StructuredError("pairs are only allowed for deterministic automata", b.all("pair")[0][0])
        delta = tuple(tuple(frozenset(succ[(q, a)]) for a in al.letters) for q in range(n))
        acc_states = set()
        for no, toks in b.all("accepting-state"):
            _need(toks, 2, no)
            acc_states.add(_in_range(_int(toks[1], no), n, no, "state"))
        lab = tuple(labels) if has_labels else None
        if typ == "alternating":
            if acc_states:
                raise StructuredError("alternating automata use accepting transitions",
                                      b.all("accepting-state")[0][0])
            uno, uv = b.one("universal", default=[""])
            return AlternatingBuchiAutomaton(al, delta, _parse_ids(uv[0], uno), init,
                                             frozenset(acc_t), tuple(names), lab)
        if b.all("universal"):
            raise StructuredError("'universal' needs type alternating", b.all("universal")[0][0])
        return NondetBuchiAutomaton(al, delta, init, frozenset(acc_states), frozenset(acc_t),
                                    tuple(names), lab)
    except AutomatonError as e:
        raise StructuredError(str(e), b.first) from None


def _parse_mdp(b: _Body) -> MDP:
    b.check_keys({"ap", "states", "initial", "state", "action"})
    al = _parse_alphabet(b)
    n, init = _states(b)
    names, owners, labels = [None] * n, [None] * n, [None] * n
    for no, toks in b.all("state"):
        _need(toks, 5, no)
        s = _in_range(_int(toks[1], no), n, no, "state")
        if names[s] is not None:
            raise StructuredError(f"state {s} declared twice", no)
        if toks[3] not in ("max", "min"):
            raise StructuredError(f"owner must be max or min, found {toks[3]!r}", no)
        names[s], owners[s], labels[s] = toks[2], _OWNER_OF[toks[3]], _letter(al, toks[4], no)
    for s in range(n):
        if names[s] is None:
            raise StructuredError(f"state {s} is not declared", b.first)
    acts = [[] for _ in range(n)]
    for no, toks in b.all("action"):
        _need(toks, 4, no)
        s = _in_range(_int(toks[1], no), n, no, "state")
        acts[s].append((toks[2], _parse_dist(toks[3:], n, no)))
    try:
        return MDP(al, tuple(labels), tuple(tuple(a) for a in acts), init, tuple(names), tuple(owners))
    except ModelError as e:
        raise StructuredError(str(e), b.first) from None


def _parse_game(b: _Body) -> Game:
    b.check_keys({"positions", "initial", "position", "move", "acceptance", "pair", "target", "meta"})
    n, init = _states(b, "positions")
    owners, prov = [None] * n, [None] * n
    for no, toks in b.all("position"):
        _need(toks, 3, no)
        p = _in_range(_int(toks[1], no), n, no, "position")
        if toks[2] not in _OWNER_OF:
            raise StructuredError(f"owner must be max, min or chance, found {toks[2]!r}", no)
        owners[p] = _OWNER_OF[toks[2]]
        if len(toks) > 3:
            prov[p] = _json(toks[3], no)
    for p in range(n):
        if owners[p] is None:
            raise StructuredError(f"position {p} is not declared", b.first)
    has_prov = any(x is not None for x in prov)
    moves = [[] for _ in range(n)]
    for no, toks in b.all("move"):
        _need(toks, 5, no)
        p = _in_range(_int(toks[1], no), n, no, "position")
        if toks[2] not in ("acc", "-"):
            raise StructuredError(f"expected 'acc' or '-', found {toks[2]!r}", no)
        moves[p].append(Move(_parse_dist(toks[4:], n, no), toks[2] == "acc", _json(toks[3], no)))
    kno, kind = b.one("acceptance", required=False)
    kind = kind[0] if kind else None
    if kind not in (None, "streett", "rabin"):
        raise StructuredError(f"game acceptance must be streett or rabin, not {kind!r}", kno)
    pairs = []
    for no, toks in b.all("pair"):
        p = _pair(toks, no)
        for i in p.green | p.red:
            _in_range(i, n, no, "position")
        pairs.append(p)
    if pairs and kind is None:
        raise StructuredError("pairs need an 'acceptance' line", b.all("pair")[0][0])
    tno, tv = b.one("target", required=False)
    target = _parse_ids(tv[0], tno) if tv else frozenset()
    for t in target:
        _in_range(t, n, tno, "target position")
    meta = {}
    for no, toks in b.all("meta"):
        _need(toks, 3, no)
        meta[toks[1]] = _json(toks[2], no)
    try:
        return Game(tuple(owners), tuple(tuple(m) for m in moves), init,
                    tuple(prov) if has_prov else None, kind, tuple(pairs), target, meta)
    except ModelError as e:
        raise StructuredError(str(e), b.first) from None


def _parse_strategy(b: _Body) -> MealyStrategy:
    b.check_keys({"mode", "pairs", "pair", "initial-memory", "update", "out"})
    mno, (mode, *_) = b.one("mode")
    if mode not in LAR_MODES:
        raise StructuredError(f"unknown LAR mode {mode!r}", mno)
    kno, kv = b.one("pairs")
    pairs = tuple(_pair(toks, no) for no, toks in b.all("pair"))
    if len(pairs) != _int(kv[0], kno, "count"):
        raise StructuredError(f"'pairs {kv[0]}' but {len(pairs)} pair line(s)", kno)

    def lar(tok, no):
        try:
            return LAR(_perm(tok, no))
        except ValueError as e:
            raise StructuredError(str(e), no) from None

    ino, iv = b.one("initial-memory")
    m0 = lar(iv[0], ino)
    if m0.k != len(pairs):
        raise StructuredError("initial memory does not match the number of pairs", ino)
    for no, toks in b.all("update"):
        _need(toks, 4, no)
        l, q, l2 = lar(toks[1], no), _int(toks[2], no), lar(toks[3], no)
        if lar_update(l, q, pairs, mode) != l2:
            raise StructuredError(f"update {l} {q} -> {l2} disagrees with the LAR rule", no)
    output, copies = {}, {}
    for no, toks in b.all("out"):
        _need(toks, 5, no)
        key = (_int(toks[1], no), _int(toks[2], no), lar(toks[3], no).perm)
        if key in output:
            raise StructuredError(f"duplicate output for {key}", no)
        output[key] = toks[4]
        if len(toks) > 5:
            t = toks[5]
            if t == "orig":
                copies[key] = None
            elif t.startswith("copy="):
                copies[key] = _int(t[5:], no, "copy")
            else:
                raise StructuredError(f"expected orig or copy=<i>, found {t!r}", no)
    mem = frozenset(k[2] for k in output)
    return MealyStrategy(pairs, mode, m0, output, mem, copies)


def _report_field(toks, no):
    _need(toks, 3, no)
    key, typ, vals = toks[1], toks[2], toks[3:]
    try:
        if typ == "Q":
            return key, [Fraction(v) for v in vals]
        if typ == "F":
            return key, [float(v) for v in vals]
        if len(vals) != 1:
            raise StructuredError(f"field of type {typ!r} takes one value", no)
        v = vals[0]
        if typ == "b":
            if v not in ("true", "false"):
                raise StructuredError(f"bad boolean {v!r}", no)
            return key, v == "true"
        if typ == "i":
            return key, int(v)
        if typ == "q":
            return key, Fraction(v)
        if typ == "f":
            return key, float(v)
        if typ == "s":
            return key, v
        if typ == "j":
            return key, json.loads(v)
    except (ValueError, ZeroDivisionError) as e:
        raise StructuredError(f"bad {typ} value: {e}", no) from None
    raise StructuredError(f"unknown field type {typ!r}", no)


def _parse_report(b: _Body) -> dict:
    b.check_keys({"field"})
    out = {}
    for no, toks in b.all("field"):
        k, v = _report_field(toks, no)
        if k in out:
            raise StructuredError(f"duplicate field {k!r}", no)
        out[k] = v
    return out


_PARSERS = {"automaton": _parse_automaton, "mdp": _parse_mdp, "game": _parse_game,
            "strategy": _parse_strategy, "report": _parse_report}


def document_kind(text: str) -> str:
    return _header(_lines(text))[1]


def _header(lines):
    if not lines or lines[0][1][0] != "gfm-format":
        raise StructuredError("document must start with 'gfm-format 1'", lines[0][0] if lines else 1)
    no, toks = lines[0]
    _need(toks, 2, no)
    if toks[1] != str(VERSION):
        raise StructuredError(f"unsupported format version {toks[1]} (expected {VERSION})", no)
    if len(lines) < 2 or lines[1][1][0] != "kind":
        raise StructuredError("second line must be 'kind <kind>'", lines[1][0] if len(lines) > 1 else no)
    kno, ktoks = lines[1]
    _need(ktoks, 2, kno)
    if ktoks[1] not in KINDS:
        raise StructuredError(f"unknown kind {ktoks[1]!r}", kno)
    return kno, ktoks[1]


def parse_structured(text: str, kind: str | None = None):
    """Parse one document; ``kind`` optionally demands a particular kind."""
    lines = _lines(text)
    kno, k = _header(lines)
    if kind is not None and k != kind:
        raise StructuredError(f"expected a {kind} document, found {k}", kno)
    body = lines[2:]
    if not body or body[-1][1] != ["end"]:
        raise StructuredError("document must finish with 'end'", body[-1][0] if body else kno)
    body = body[:-1]
    for no, toks in body:
        if toks == ["end"]:
            raise StructuredError("content after 'end'", no)
    return _PARSERS[k](_Body(body))
