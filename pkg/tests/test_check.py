from fractions import Fraction

import pytest

from altgfm.automata import LassoWord, accepts_lasso_det, dualize
from altgfm.check import (InstanceParams, battery, check_gfm, gfg_counterexample, lang_equiv,
                          lassos, psemsat, random_instance, run_instance, summary_table)
from altgfm.construct import dra_to_gfm_nba, dsa_to_alt_gfm
from altgfm.fixtures import (AB, A, B, guessing_nba, all_words_dba, inf_ab_dsa, finitely_many_a_dsa, gb_chain,
                             universal_dsa)
from altgfm.structured import emit_structured


def test_guessing_is_not_gfm():
    r = check_gfm(guessing_nba(), universal_dsa(), gb_chain())
    assert (r.psat, r.psemsat, r.passed) == (0, 1, False)


def test_all_words_is_gfm():
    r = check_gfm(all_words_dba(), universal_dsa(), gb_chain())
    assert (r.psat, r.psemsat, r.passed) == (1, 1, True)


def test_inf_ab_alt_is_gfm_on_all_words_chain():
    r = check_gfm(dsa_to_alt_gfm(inf_ab_dsa()), inf_ab_dsa(), gb_chain())
    assert (r.psat, r.psemsat, r.passed) == (1, 1, True)
    assert r.sizes["automaton"] == 6


def test_float_check_within_tolerance():
    r = check_gfm(dsa_to_alt_gfm(inf_ab_dsa()), inf_ab_dsa(), gb_chain(), exact=False)
    assert r.passed and r.delta <= 1e-9


def test_lasso_enumeration_count():
    # |u| ≤ 3 over 2 letters: 1+2+4+8 prefixes; 2+4+8 periods
    assert sum(1 for _ in lassos(AB, 3)) == 15 * 14


def test_lang_equiv_examples():
    assert lang_equiv(dsa_to_alt_gfm(inf_ab_dsa()), inf_ab_dsa(), 3).passed
    assert lang_equiv(guessing_nba(), universal_dsa(), 2).passed
    rep = lang_equiv(inf_ab_dsa(), dualize(inf_ab_dsa()), 2)
    assert not rep.passed and rep.counterexample is not None and rep.left != rep.right
    with pytest.raises(ValueError):
        lang_equiv(inf_ab_dsa(), inf_ab_dsa(), 0)


def test_dra_nba_equivalence_bound_4():
    r = dualize(inf_ab_dsa())
    assert lang_equiv(dra_to_gfm_nba(r), r, 4).passed


def test_not_good_for_games():
    rep = gfg_counterexample()
    assert rep.value == 0
    assert rep.all_plays_in_language and rep.plays_checked > 0
    assert rep.passed
    assert accepts_lasso_det(finitely_many_a_dsa(), LassoWord((A,), (B,)))


def test_instances_are_reproducible():
    p = InstanceParams(n_mdp=3, n_dsa=2, k=1, exact_sizes=True)
    d1, m1 = random_instance(1, p)
    d2, m2 = random_instance(1, p)
    assert emit_structured(d1) == emit_structured(d2)
    assert emit_structured(m1) == emit_structured(m2)
    assert (m1.n_states, d1.n_states, d1.k) == (3, 2, 1)


def test_no_pairs_gives_semantic_value_one():
    p = InstanceParams(k=0)
    for seed in range(10):
        dsa, mdp = random_instance(seed, p)
        assert dsa.k == 0
        assert psemsat(mdp, dsa)[0] == 1


def test_small_battery():
    rows = battery(12, first_seed=0)
    for r in rows:
        assert r.passed and r.unpruned_equal and r.oracle_agrees and r.strategy_optimal
        assert r.vi_error <= 1e-8
    text = summary_table(rows)
    assert "12/12 instances pass" in text


def test_battery_parallel_equals_serial():
    a = [(r.seed, r.psat, r.psemsat) for r in battery(4, first_seed=20, workers=1)]
    b = [(r.seed, r.psat, r.psemsat) for r in battery(4, first_seed=20, workers=2)]
    assert a == b
