"""Reading and writing automata in the HOA v1 format.

Supported acceptance: Büchi (``Inf(0)``), Streett (conjunctions of
``Fin(r)|Inf(g)``), Rabin (disjunctions of ``Fin(r)&Inf(g)``) and the
constants ``t``/``f``.  Streett and Rabin sets are state based.  Alternating
automata are not handled here; they travel in the structured format.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .automata import (RABIN, STREETT, AlternatingBuchiAutomaton, Alphabet, AutomatonError,
                       DeterministicOmegaAutomaton, NondetBuchiAutomaton, Pair, complete_det,
                       complete_nba)


class HOAError(AutomatonError):
    def __init__(self, msg, line=None, col=None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)


_TOKEN = re.compile(r'\s+|/\*.*?\*/|"(?:[^"\\]|\\.)*"|--[A-Z]+--|[A-Za-z_][\w-]*:|'
                    r'[A-Za-z_@][\w-]*|\d+|[\[\]{}()!&|]', re.S)


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise HOAError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        s = m.group(0)
        if not s.isspace() and not s.startswith("/*"):
            toks.append(_Tok(s, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    return toks


class _Stream:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else _Tok("", 1, 1)
            raise HOAError("unexpected end of input", last.line, last.col)
        self.i += 1
        return t

    def expect(self, text):
        t = self.next()
        if t.text != text:
            raise HOAError(f"expected {text!r}, found {t.text!r}", t.line, t.col)
        return t

    def int(self):
        t = self.next()
        if not t.text.isdigit():
            raise HOAError(f"expected a number, found {t.text!r}", t.line, t.col)
        return int(t.text)

    def at_header(self):
        t = self.peek()
        return t is not None and t.text.endswith(":") and t.text != "State:"


# ---------------------------------------------------------------- boolean formulas

def _parse_or(ts: _Stream, atom):
    left = _parse_and(ts, atom)
    while ts.peek() is not None and ts.peek().text == "|":
        ts.next()
        left = ("or", left, _parse_and(ts, atom))
    return left


def _parse_and(ts: _Stream, atom):
    left = _parse_not(ts, atom)
    while ts.peek() is not None and ts.peek().text == "&":
        ts.next()
        left = ("and", left, _parse_not(ts, atom))
    return left


def _parse_not(ts: _Stream, atom):
    t = ts.peek()
    if t is not None and t.text == "!":
        ts.next()
        return ("not", _parse_not(ts, atom))
    if t is not None and t.text == "(":
        ts.next()
        e = _parse_or(ts, atom)
        ts.expect(")")
        return e
    return atom(ts)


def _label_atom(ts: _Stream):
    t = ts.next()
    if t.text in ("t", "f"):
        return ("const", t.text == "t")
    if t.text.isdigit():
        return ("ap", int(t.text), t)
    raise HOAError(f"unexpected {t.text!r} in label", t.line, t.col)


def _eval_label(e, letter: int) -> bool:
    tag = e[0]
    if tag == "const":
        return e[1]
    if tag == "ap":
        return bool(letter >> e[1] & 1)
    if tag == "not":
        return not _eval_label(e[1], letter)
    if tag == "and":
        return _eval_label(e[1], letter) and _eval_label(e[2], letter)
    return _eval_label(e[1], letter) or _eval_label(e[2], letter)


def _label_aps(e):
    if e[0] == "ap":
        yield e
    elif e[0] in ("not",):
        yield from _label_aps(e[1])
    elif e[0] in ("and", "or"):
        yield from _label_aps(e[1])
        yield from _label_aps(e[2])


def _acc_atom(ts: _Stream):
    t = ts.next()
    if t.text in ("t", "f"):
        return ("const", t.text == "t")
    if t.text in ("Inf", "Fin"):
        ts.expect("(")
        neg = ts.peek() is not None and ts.peek().text == "!"
        if neg:
            raise HOAError("negated acceptance sets are not supported", t.line, t.col)
        n = ts.int()
        ts.expect(")")
        return (t.text.lower(), n)
    raise HOAError(f"unexpected {t.text!r} in acceptance condition", t.line, t.col)


def _flatten(e, op):
    if e[0] == op:
        return _flatten(e[1], op) + _flatten(e[2], op)
    return [e]


def _classify(acc, acc_name: str | None, where):
    """Map an acceptance formula to ``(kind, pairs-of-set-ids)``.

    kind is "buchi" (pairs = [set]), "all", "none", STREETT or RABIN with
    pairs ``[(green_set_or_None, red_set_or_None)]``.
    """
    line, col = where
    if acc[0] == "const":
        return ("all" if acc[1] else "none"), []
    if acc[0] == "inf" and (acc_name or "").lower() not in ("streett", "rabin"):
        return "buchi", [acc[1]]
    prefer = (acc_name or "").lower()

    def clause(e, inner):
        parts = _flatten(e, inner)
        fins = [p[1] for p in parts if p[0] == "fin"]
        infs = [p[1] for p in parts if p[0] == "inf"]
        if len(fins) + len(infs) != len(parts) or len(fins) > 1 or len(infs) > 1:
            return None
        return (infs[0] if infs else None, fins[0] if fins else None)

    def try_kind(outer, inner):
        out = []
        for c in _flatten(acc, outer):
            cl = clause(c, inner)
            if cl is None:
                return None
            out.append(cl)
        return out

    order = [(STREETT, "and", "or"), (RABIN, "or", "and")]
    if prefer == "rabin":
        order.reverse()
    for kind, outer, inner in order:
        pairs = try_kind(outer, inner)
        if pairs is not None:
            return kind, pairs
    raise HOAError("unsupported acceptance condition (expected Buchi, Streett or Rabin)", line, col)


# ---------------------------------------------------------------- parser

def parse_hoa(text: str):
    """Parse one HOA automaton; partial automata are completed with a rejecting sink."""
    ts = _Stream(_tokenize(text))
    hdr = {}
    starts = []
    aps = None
    acc = None
    acc_at = (1, 1)
    acc_name = None
    n_states = None
    props = set()
    first = ts.next()
    if first.text != "HOA:":
        raise HOAError("document must start with 'HOA:'", first.line, first.col)
    ver = ts.next()
    if ver.text != "v1":
        raise HOAError(f"unsupported HOA version {ver.text!r}", ver.line, ver.col)
    while True:
        t = ts.peek()
        if t is None:
            raise HOAError("missing --BODY--", first.line, first.col)
        if t.text == "--BODY--":
            ts.next()
            break
        key = ts.next()
        if not key.text.endswith(":"):
            raise HOAError(f"expected a header item, found {key.text!r}", key.line, key.col)
        name = key.text[:-1]
        if name == "States":
            n_states = ts.int()
        elif name == "Start":
            s = ts.int()
            if ts.peek() is not None and ts.peek().text == "&":
                raise HOAError("alternating automata are not supported in HOA; use the structured format",
                               key.line, key.col)
            starts.append(s)
        elif name == "AP":
            n = ts.int()
            aps = []
            for _ in range(n):
                s = ts.next()
                if not s.text.startswith('"'):
                    raise HOAError("AP names must be quoted", s.line, s.col)
                aps.append(s.text[1:-1])
        elif name == "Acceptance":
            ts.int()
            acc_at = (key.line, key.col)
            acc = _parse_or(ts, _acc_atom)
        elif name == "acc-name":
            acc_name = ts.next().text
            while not ts.at_header() and ts.peek().text != "--BODY--":
                ts.next()
        elif name == "properties":
            while not ts.at_header() and ts.peek().text != "--BODY--":
                props.add(ts.next().text)
        else:
            hdr[name] = []
            while not ts.at_header() and ts.peek().text != "--BODY--":
                hdr[name].append(ts.next().text)
    if acc is None:
        raise HOAError("missing Acceptance header", first.line, first.col)
    if aps is None:
        aps = []
    if not aps:
        # the alphabet type needs one proposition; a dummy one is unconstrained
        aps = ["_"]
    alphabet = Alphabet(tuple(aps))
    kind, pairs = _classify(acc, acc_name, acc_at)
    if len(starts) != 1:
        raise HOAError(f"exactly one initial state is supported, found {len(starts)}", *acc_at)

    names = {}
    state_marks: dict[int, set[int]] = {}
    edges = []  # (src, label expr or implicit index, dst, marks, tok)
    cur = None
    implicit = 0
    while True:
        t = ts.next()
        if t.text == "--END--":
            break
        if t.text == "State:":
            if ts.peek().text == "[":
                raise HOAError("state labels are not supported", t.line, t.col)
            cur = ts.int()
            implicit = 0
            if ts.peek() is not None and ts.peek().text.startswith('"'):
                names[cur] = ts.next().text[1:-1]
            if ts.peek() is not None and ts.peek().text == "{":
                state_marks[cur] = _marks(ts)
            continue
        if cur is None:
            raise HOAError("edge before the first State:", t.line, t.col)
        if t.text == "[":
            expr = _parse_or(ts, _label_atom)
            ts.expect("]")
            for ap in _label_aps(expr):
                if ap[1] >= len(aps):
                    raise HOAError(f"AP index {ap[1]} out of range", ap[2].line, ap[2].col)
            dst_tok = ts.next()
        else:
            expr = ("implicit", implicit)
            implicit += 1
            dst_tok = t
        if not dst_tok.text.isdigit():
            raise HOAError(f"expected a target state, found {dst_tok.text!r}", dst_tok.line, dst_tok.col)
        if ts.peek() is not None and ts.peek().text == "&":
            raise HOAError("alternating automata are not supported in HOA; use the structured format",
                           dst_tok.line, dst_tok.col)
        marks = _marks(ts) if ts.peek() is not None and ts.peek().text == "{" else set()
        edges.append((cur, expr, int(dst_tok.text), marks, dst_tok))

    n = n_states if n_states is not None else 1 + max([starts[0]] + [e[0] for e in edges]
                                                       + [e[2] for e in edges])
    for src, _, dst, _, tok in edges:
        if not (0 <= src < n and 0 <= dst < n):
            raise HOAError(f"state {max(src, dst)} out of range", tok.line, tok.col)
    succ: dict[tuple[int, int], set[int]] = {}
    trans_marks: dict[tuple[int, int, int], set[int]] = {}
    for src, expr, dst, marks, tok in edges:
        if expr[0] == "implicit":
            letters = [expr[1]] if expr[1] < alphabet.size else []
        else:
            letters = [a for a in alphabet.letters if _eval_label(expr, a)]
        for a in letters:
            succ.setdefault((src, a), set()).add(dst)
            trans_marks.setdefault((src, a, dst), set()).update(marks)
    name_list = [names.get(q, f"q{q}") for q in range(n)]
    deterministic = all(len(v) == 1 for v in succ.values())

    if kind in (STREETT, RABIN) or (kind in ("all", "none") and deterministic):
        if not deterministic:
            (src, a), _ = next((k, v) for k, v in succ.items() if len(v) > 1)
            tok = next(e[4] for e in edges if e[0] == src)
            raise HOAError(f"state {src} is nondeterministic on letter {alphabet.format_letter(a)}, "
                           f"but {kind} acceptance requires a deterministic automaton", tok.line, tok.col)
        if any(trans_marks.values()):
            tok = next(e[4] for e in edges if e[3])
            raise HOAError("transition-based Streett/Rabin acceptance is not supported", tok.line, tok.col)
        if kind == "all":
            kind, pairs = STREETT, []
        elif kind == "none":
            kind, pairs = RABIN, []

        def members(mark):
            return frozenset() if mark is None else frozenset(q for q in range(n)
                                                                if mark in state_marks.get(q, ()))
        if kind == STREETT:
            # a clause without Fin is "G infinitely often": every state is red
            plist = [Pair(members(g), members(r) if r is not None else frozenset(range(n)))
                     for g, r in pairs]
        else:
            # a clause without Inf is "finitely often R": every state is green
            plist = [Pair(members(g) if g is not None else frozenset(range(n)), members(r))
                     for g, r in pairs]
        partial = {k: next(iter(v)) for k, v in succ.items()}
        return complete_det(alphabet, partial, n, kind, plist, starts[0], name_list)

    if "deterministic" in props and not deterministic:
        raise HOAError("automaton declared deterministic has a nondeterministic choice", *acc_at)
    acc_states, acc_trans = set(), set()
    if kind == "buchi":
        s_id = pairs[0]
        acc_states = {q for q, ms in state_marks.items() if s_id in ms}
        acc_trans = {k for k, ms in trans_marks.items() if s_id in ms and k[0] not in acc_states}
    elif kind == "all":
        acc_trans = set(trans_marks)
    return complete_nba(alphabet, succ, n, starts[0], acc_states, acc_trans, name_list)


def _marks(ts: _Stream) -> set[int]:
    ts.expect("{")
    out = set()
    while ts.peek() is not None and ts.peek().text != "}":
        out.add(ts.int())
    ts.expect("}")
    return out


# ---------------------------------------------------------------- emitter

def _letter_label(alphabet: Alphabet, a: int) -> str:
    lits = [str(j) if a >> j & 1 else f"!{j}" for j in range(len(alphabet.aps))]
    return "&".join(lits)


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_hoa(aut) -> str:
    """HOA v1 text; edges are listed per letter in letter order."""
    if isinstance(aut, AlternatingBuchiAutomaton) and aut.universal:
        raise HOAError("alternating automata cannot be written as HOA; use the structured format")
    al = aut.alphabet
    out = ["HOA: v1", f"States: {aut.n_states}", f"Start: {aut.initial}",
           f"AP: {len(al.aps)} " + " ".join(_quote(p) for p in al.aps)]
    if isinstance(aut, DeterministicOmegaAutomaton):
        k = aut.k
        if aut.kind == STREETT:
            if k == 0:
                out += ["acc-name: all", "Acceptance: 0 t"]
            else:
                out += [f"acc-name: Streett {k}",
                        f"Acceptance: {2 * k} " + "&".join(f"(Fin({2 * i})|Inf({2 * i + 1}))"
                                                           for i in range(k))]
        else:
            if k == 0:
                out += ["acc-name: none", "Acceptance: 0 f"]
            else:
                out += [f"acc-name: Rabin {k}",
                        f"Acceptance: {2 * k} " + "|".join(f"(Fin({2 * i})&Inf({2 * i + 1}))"
                                                           for i in range(k))]
        out += ["properties: trans-labels explicit-labels state-acc deterministic complete",
                "--BODY--"]
        for q in range(aut.n_states):
            sets = []
            for i, p in enumerate(aut.pairs):
                if q in p.red:
                    sets.append(2 * i)
                if q in p.green:
                    sets.append(2 * i + 1)
            head = f"State: {q} {_quote(aut.names[q])}"
            if sets:
                head += " {" + " ".join(map(str, sets)) + "}"
            out.append(head)
            for a in al.letters:
                out.append(f"[{_letter_label(al, a)}] {aut.step(q, a)}")
        out.append("--END--")
        return "\n".join(out) + "\n"
    state_based = aut.state_based
    det = all(len(ts) == 1 for row in aut.delta for ts in row)
    props = ["trans-labels", "explicit-labels", "state-acc" if state_based else "trans-acc"]
    if det:
        props.append("deterministic")
    out += ["acc-name: Buchi", "Acceptance: 1 Inf(0)", "properties: " + " ".join(props), "--BODY--"]
    for q in range(aut.n_states):
        head = f"State: {q} {_quote(aut.names[q])}"
        if state_based and q in aut.accepting_states:
            head += " {0}"
        out.append(head)
        for a in al.letters:
            for t in aut.successors(q, a):
                mark = " {0}" if not state_based and aut.is_accepting(q, a, t) else ""
                out.append(f"[{_letter_label(al, a)}] {t}{mark}")
    out.append("--END--")
    return "\n".join(out) + "\n"
