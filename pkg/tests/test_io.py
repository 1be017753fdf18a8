from fractions import Fraction

from hypothesis import given

import pytest

from altgfm.automata import RABIN, STREETT, Pair, dualize
from altgfm.construct import dra_to_gfm_nba, dsa_to_alt_gfm
from altgfm.fixtures import (AB, guessing_nba, all_words_dba, coin_loop_game, inf_ab_dsa, gb_chain, hub_mdp,
                             last_letter_dsa, not_gfg_arena, universal_dsa)
from altgfm.hoa import HOAError, emit_hoa, parse_hoa
from altgfm.models import MDP, augment, product_det, product_game, product_nba
from altgfm.strategy import extract_control_strategy
from altgfm.structured import StructuredError, document_kind, emit_structured, parse_structured

from gen import det_automata, mdps

INF_AB_HOA = """HOA: v1
name: "inf a and inf b"
States: 2
Start: 0
AP: 1 "b"
acc-name: Streett 2
Acceptance: 4 (Fin(0)|Inf(1))&(Fin(2)|Inf(3))
--BODY--
State: 0 "q0" {1 2}
[!0] 0
[0] 1
State: 1 "q1" {0 3}
[!0] 0
[0] 1
--END--
"""


def test_parse_inf_ab():
    d = parse_hoa(INF_AB_HOA)
    assert d.kind == STREETT and d.n_states == 2
    assert d.pairs == (Pair(frozenset({0}), frozenset({1})), Pair(frozenset({1}), frozenset({0})))
    assert d.structurally_equal(inf_ab_dsa())


def test_acceptance_true_is_empty_streett():
    d = parse_hoa('HOA: v1\nStates: 1\nStart: 0\nAP: 1 "a"\nAcceptance: 0 t\n'
                  '--BODY--\nState: 0\n[t] 0\n--END--\n')
    assert d.kind == STREETT and d.k == 0
    assert "Acceptance: 0 t" in emit_hoa(universal_dsa())


def test_all_words_marks_both_loops():
    text = emit_hoa(all_words_dba())
    assert "[!0] 0 {0}" in text and "[0] 0 {0}" in text
    assert "Acceptance: 1 Inf(0)" in text


def test_dra_to_nba_hoa_has_seven_states():
    text = emit_hoa(dra_to_gfm_nba(dualize(inf_ab_dsa())))
    assert "States: 7" in text
    assert parse_hoa(text).n_states == 7


@pytest.mark.parametrize("aut", [inf_ab_dsa(), dualize(inf_ab_dsa()), universal_dsa(), guessing_nba(),
                                 all_words_dba(), last_letter_dsa(), dra_to_gfm_nba(dualize(inf_ab_dsa()))])
def test_hoa_round_trip(aut):
    text = emit_hoa(aut)
    back = parse_hoa(text)
    assert back.structurally_equal(aut)
    assert emit_hoa(back) == text


@given(det_automata(max_states=4, max_pairs=3))
def test_hoa_round_trip_random(d):
    assert parse_hoa(emit_hoa(d)).structurally_equal(d)
    r = dualize(d)
    assert parse_hoa(emit_hoa(r)).structurally_equal(r)


def test_hoa_implicit_labels_and_completion():
    text = ('HOA: v1\nStates: 1\nStart: 0\nAP: 1 "b"\nacc-name: Buchi\nAcceptance: 1 Inf(0)\n'
            '--BODY--\nState: 0 {0}\n0\n--END--\n')
    n = parse_hoa(text)
    # only letter {} was given; {b} goes to a fresh rejecting sink
    assert n.n_states == 2 and n.successors(0, 1) == [1] and n.accepting_states == {0}


def test_hoa_syntax_error_position():
    bad = INF_AB_HOA.replace("[!0] 0\n[0] 1\nState: 1", "[!0 0\n[0] 1\nState: 1", 1)
    with pytest.raises(HOAError) as e:
        parse_hoa(bad)
    assert e.value.line == 10 and e.value.col == 5


def test_hoa_unsupported_acceptance():
    bad = INF_AB_HOA.replace("(Fin(0)|Inf(1))&(Fin(2)|Inf(3))", "(Inf(0)&Inf(1))|Inf(2)").replace(
        "acc-name: Streett 2\n", "")
    with pytest.raises(HOAError, match="unsupported acceptance"):
        parse_hoa(bad)


def test_hoa_nondeterminism_in_streett_document():
    bad = INF_AB_HOA.replace("[!0] 0\n[0] 1\nState: 1", "[!0] 0\n[t] 1\nState: 1", 1)
    with pytest.raises(HOAError, match="nondeterministic"):
        parse_hoa(bad)


def test_hoa_declared_deterministic_nba():
    text = ('HOA: v1\nStates: 2\nStart: 0\nAP: 1 "b"\nAcceptance: 1 Inf(0)\n'
            'properties: deterministic\n--BODY--\nState: 0\n[t] 0\n[t] 1\nState: 1\n[t] 1\n--END--\n')
    with pytest.raises(HOAError, match="declared deterministic"):
        parse_hoa(text)


def test_hoa_rejects_alternation():
    with pytest.raises(HOAError):
        emit_hoa(dsa_to_alt_gfm(inf_ab_dsa()))
    text = INF_AB_HOA.replace("[0] 1\nState: 1", "[0] 1&0\nState: 1", 1)
    with pytest.raises(HOAError, match="alternating"):
        parse_hoa(text)


# ---------------------------------------------------------------- structured


def _objects():
    g = product_game(gb_chain(), dsa_to_alt_gfm(inf_ab_dsa()))
    return [inf_ab_dsa(), dualize(inf_ab_dsa()), guessing_nba(), all_words_dba(), dsa_to_alt_gfm(inf_ab_dsa()),
            gb_chain(), not_gfg_arena(), hub_mdp(), g, product_nba(gb_chain(), guessing_nba()),
            product_det(hub_mdp(), last_letter_dsa()), augment(g, Fraction(9, 10)).game,
            coin_loop_game()]


@pytest.mark.parametrize("obj", _objects(), ids=lambda o: type(o).__name__)
def test_structured_round_trip(obj):
    text = emit_structured(obj)
    back = parse_structured(text)
    eq = back.structurally_equal(obj) if hasattr(obj, "structurally_equal") else back == obj
    assert eq
    assert emit_structured(back) == text


def test_strategy_round_trip():
    st = extract_control_strategy(hub_mdp(), last_letter_dsa())
    text = emit_structured(st)
    assert document_kind(text) == "strategy"
    back = parse_structured(text)
    assert back == st and emit_structured(back) == text


def test_report_round_trip():
    rep = {"value": Fraction(1, 3), "ok": True, "n": 3, "name": "a b", "values": [Fraction(1), Fraction(1, 2)],
           "err": 2.5e-10, "extra": {"x": [1, 2]}}
    assert parse_structured(emit_structured(rep)) == rep


@given(mdps(max_states=4, owners=True))
def test_mdp_round_trip_random(m):
    text = emit_structured(m)
    assert parse_structured(text) == m
    assert emit_structured(parse_structured(text)) == text


def test_trivial_mdp_round_trip():
    m = MDP(AB, (0,), ((("stay", ((0, Fraction(1)),)),),))
    assert parse_structured(emit_structured(m)) == m


MDP_TEXT = """gfm-format 1
kind mdp
ap b
states 1
initial 0
state 0 s max {}
action 0 go 0:ROW
end
"""


def test_row_sum_error():
    with pytest.raises(StructuredError, match="row sum 0.999") as e:
        parse_structured(MDP_TEXT.replace("0:ROW", "0:0.5 0:0.499"))
    assert e.value.line == 7


def test_decimal_probabilities_are_exact():
    m = parse_structured(MDP_TEXT.replace("0:ROW", "0:0.25 0:3/4"))
    assert m.actions[0][0][1] == ((0, Fraction(1)),)


def test_dangling_successor():
    with pytest.raises(StructuredError, match="dangling successor 3"):
        parse_structured(MDP_TEXT.replace("0:ROW", "3:1"))


def test_version_mismatch():
    with pytest.raises(StructuredError, match="unsupported format version 2"):
        parse_structured(MDP_TEXT.replace("gfm-format 1", "gfm-format 2").replace("0:ROW", "0:1"))


def test_missing_end_and_unknown_keyword():
    with pytest.raises(StructuredError, match="end"):
        parse_structured(MDP_TEXT.replace("0:ROW", "0:1").replace("end\n", ""))
    with pytest.raises(StructuredError, match="unknown keyword"):
        parse_structured(MDP_TEXT.replace("0:ROW", "0:1\nbogus 1"))


def test_kind_filter():
    with pytest.raises(StructuredError, match="expected a game"):
        parse_structured(MDP_TEXT.replace("0:ROW", "0:1"), kind="game")


def test_bad_strategy_update_is_caught():
    text = emit_structured(extract_control_strategy(hub_mdp(), last_letter_dsa()))
    bad = text.replace("update (2,1) 1 (1,2)", "update (2,1) 1 (2,1)")
    with pytest.raises(StructuredError, match="LAR rule"):
        parse_structured(bad)
