from hypothesis import given
from hypothesis import strategies as st

import pytest

from altgfm.automata import (RABIN, STREETT, Alphabet, AutomatonError, DeterministicOmegaAutomaton,
                             LassoWord, NondetBuchiAutomaton, Pair, accepts_lasso_alternating,
                             accepts_lasso_det, complete_det, complete_nba, dualize)
from altgfm.construct import dsa_to_alt_gfm
from altgfm.fixtures import AB, A, B, guessing_nba, all_words_dba, inf_ab_dsa, universal_dsa

from gen import det_automata, lassos
from oracles import det_run_inf


def W(u, v):
    return LassoWord(tuple(u), tuple(v))


def oracle_accepts(aut, w):
    inf = det_run_inf(aut.delta, aut.initial, w.prefix, w.period)
    if aut.kind == STREETT:
        return all(not (inf & p.red) or bool(inf & p.green) for p in aut.pairs)
    return any(not (inf & p.red) and bool(inf & p.green) for p in aut.pairs)


def test_alphabet_letters():
    al = Alphabet(("a", "b"))
    assert al.size == 4
    assert al.letter({"b"}) == 2
    assert al.format_letter(3) == "{a,b}"
    assert al.parse_letter("{b, a}") == 3
    assert al.parse_letter("{}") == 0
    with pytest.raises(AutomatonError):
        al.letter({"c"})
    with pytest.raises(AutomatonError):
        Alphabet(("a", "a"))


def test_inf_ab_examples():
    d = inf_ab_dsa()
    assert accepts_lasso_det(d, W([], [A, B]))
    assert not accepts_lasso_det(d, W([A, B], [B]))
    assert not accepts_lasso_det(d, W([], [A]))


def test_empty_streett_accepts_everything():
    d = universal_dsa()
    for w in [W([], [A]), W([A, B], [B]), W([B], [A, B, B])]:
        assert accepts_lasso_det(d, w)


def test_dual_of_inf_ab():
    r = dualize(inf_ab_dsa())
    assert r.kind == RABIN
    assert r.pairs == (Pair(frozenset({1}), frozenset({0})), Pair(frozenset({0}), frozenset({1})))
    assert accepts_lasso_det(r, W([], [A]))
    assert not accepts_lasso_det(r, W([], [A, B]))


def test_inf_ab_alt_language_examples():
    alt = dsa_to_alt_gfm(inf_ab_dsa())
    assert accepts_lasso_alternating(alt, W([], [A, B]))
    assert not accepts_lasso_alternating(alt, W([], [B]))


def test_all_accepting_nondet_automaton():
    nba = NondetBuchiAutomaton(AB, ((frozenset({0, 1}),) * 2,) * 2,
                               accepting_states=frozenset({0, 1}))
    for w in [W([], [A]), W([B, A], [B, B])]:
        assert accepts_lasso_alternating(nba, w)


def test_guessing_and_all_words_accept_everything():
    for w in [W([], [A]), W([], [B]), W([A], [A, B]), W([B, B], [B, A, A])]:
        assert accepts_lasso_alternating(guessing_nba(), w)
        assert accepts_lasso_alternating(all_words_dba(), w)


@given(det_automata(), lassos())
def test_det_acceptance_matches_run_oracle(aut, w):
    assert accepts_lasso_det(aut, w) == oracle_accepts(aut, w)


@given(det_automata(kind=RABIN), lassos())
def test_rabin_acceptance_matches_run_oracle(aut, w):
    assert accepts_lasso_det(aut, w) == oracle_accepts(aut, w)


@given(det_automata(), lassos())
def test_automaton_xor_dual(aut, w):
    assert accepts_lasso_det(aut, w) != accepts_lasso_det(dualize(aut), w)


@given(det_automata(), lassos(), st.integers(0, 3))
def test_lasso_rotation_invariance(aut, w, r):
    # u·v^ω = (u·v[:r])·(v[r:]·v[:r])^ω
    r %= len(w.period)
    rot = LassoWord(w.prefix + w.period[:r], w.period[r:] + w.period[:r])
    assert accepts_lasso_det(aut, w) == accepts_lasso_det(aut, rot)
    unrolled = LassoWord(w.prefix + w.period, w.period + w.period)
    assert accepts_lasso_det(aut, w) == accepts_lasso_det(aut, unrolled)


@given(det_automata(), lassos())
def test_dualize_is_an_involution(aut, w):
    twice = dualize(dualize(aut))
    assert twice.kind == aut.kind and twice.pairs == aut.pairs
    assert accepts_lasso_det(twice, w) == accepts_lasso_det(aut, w)


def test_complete_det_adds_rejecting_sink():
    d = complete_det(AB, {(0, A): 0}, 1, STREETT, [])
    assert d.n_states == 2 and d.step(0, B) == 1
    assert d.pairs == (Pair(frozenset(), frozenset({1})),)
    assert accepts_lasso_det(d, W([], [A]))
    assert not accepts_lasso_det(d, W([A], [B]))
    r = complete_det(AB, {(0, A): 0}, 1, RABIN, [(frozenset({0}), frozenset())])
    assert not accepts_lasso_det(r, W([B], [A]))


def test_complete_nba_sink_rejects():
    n = complete_nba(AB, {(0, A): {0}}, 1, accepting_states={0})
    assert n.n_states == 2
    assert accepts_lasso_alternating(n, W([], [A]))
    assert not accepts_lasso_alternating(n, W([], [A, B]))


def test_invalid_automata_rejected():
    with pytest.raises(AutomatonError):
        DeterministicOmegaAutomaton(AB, ((0,),), STREETT, ())
    with pytest.raises(AutomatonError):
        DeterministicOmegaAutomaton(AB, ((0, 2),), STREETT, ())
    with pytest.raises(AutomatonError):
        NondetBuchiAutomaton(AB, ((frozenset(), frozenset({0})),))
    with pytest.raises(AutomatonError):
        NondetBuchiAutomaton(AB, ((frozenset({0}), frozenset({0})),),
                             accepting_transitions=frozenset({(0, 0, 1)}))


def test_lasso_needs_nonempty_period():
    with pytest.raises(ValueError):
        LassoWord((A,), ())
