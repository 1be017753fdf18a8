import math
from fractions import Fraction

from hypothesis import given
from hypothesis import strategies as st

import pytest

from altgfm.automata import STREETT, DeterministicOmegaAutomaton, Pair
from altgfm.construct import dsa_to_alt_gfm
from altgfm.fixtures import (AB, A, B, inf_ab_dsa, gb_chain, hub_mdp, last_letter_dsa,
                             letter_choice_mdp, universal_dsa)
from altgfm.models import MDP, product_det, product_game
from altgfm.solve import buchi_game_value, streett_value
from altgfm.strategy import (ASCENDING, DESCENDING, LAR, ORIGINAL, CopyEntry, GoodCopyTable,
                             MealyStrategy, StrategyError, best_positional_value,
                             evaluate_strategy, extract_control_strategy, good_copy_table,
                             lar_update, oldest_reachable_good_copy)

from gen import mdps

ONE = Fraction(1)
INF_AB_PAIRS = inf_ab_dsa().pairs


def test_lar_examples():
    assert lar_update(LAR((2, 1)), 0, INF_AB_PAIRS) == LAR((1, 2))
    assert lar_update(LAR((1, 2)), 1, INF_AB_PAIRS) == LAR((2, 1))
    assert lar_update(LAR((1, 2)), 0, INF_AB_PAIRS) == LAR((1, 2))


def test_lar_no_green_hit():
    pairs = (Pair(frozenset({1}), frozenset()), Pair(frozenset({2}), frozenset()))
    assert lar_update(LAR((2, 1)), 0, pairs) == LAR((2, 1))


def test_lar_tie_order():
    pairs = (Pair(frozenset({0}), frozenset()), Pair(frozenset({0}), frozenset()),
             Pair(frozenset(), frozenset()))
    assert lar_update(LAR((3, 1, 2)), 0, pairs, DESCENDING) == LAR((2, 1, 3))
    assert lar_update(LAR((3, 1, 2)), 0, pairs, ASCENDING) == LAR((1, 2, 3))
    assert LAR.initial(3) == LAR((3, 2, 1)) and LAR.initial(3, ASCENDING) == LAR((1, 2, 3))
    with pytest.raises(ValueError):
        LAR((1, 1))


@given(st.permutations([1, 2, 3]), st.integers(0, 3))
def test_lar_update_is_a_permutation(perm, q):
    pairs = (Pair(frozenset({0, 1}), frozenset()), Pair(frozenset({1, 2}), frozenset()),
             Pair(frozenset({3}), frozenset()))
    out = lar_update(LAR(tuple(perm)), q, pairs)
    assert sorted(out.perm) == [1, 2, 3]
    hit = [i + 1 for i, p in enumerate(pairs) if q in p.green]
    assert set(out.perm[:len(hit)]) == set(hit)


def _table(good, reachable):
    e = CopyEntry(ONE, {c: ONE for c in good}, frozenset(good), frozenset(reachable))
    return GoodCopyTable({(0, 0): e}, frozenset(), {})


def test_oldest_reachable_good_copy():
    t = _table({ORIGINAL, 0, 1, 2}, {ORIGINAL, 0, 1, 2})
    assert oldest_reachable_good_copy(0, 0, LAR((1, 2)), t) == 2
    assert oldest_reachable_good_copy(0, 0, LAR((2, 1)), t) == 1


def test_oldest_copy_fallbacks():
    assert oldest_reachable_good_copy(0, 0, LAR((1, 2)), _table({ORIGINAL, 0}, {ORIGINAL, 0})) == 0
    assert oldest_reachable_good_copy(0, 0, LAR((1, 2)), _table({ORIGINAL}, {ORIGINAL})) is ORIGINAL
    # good but unreachable copies are ignored
    assert oldest_reachable_good_copy(0, 0, LAR((1, 2)), _table({ORIGINAL, 0, 2}, {ORIGINAL, 0})) == 0


def _table_for(mdp, dsa):
    aut = dsa_to_alt_gfm(dsa)
    game = product_game(mdp, aut)
    vals, strat = buchi_game_value(game, exact=True)
    return good_copy_table(game, aut, vals, strat.sigma)


def test_all_copies_good_on_all_words_chain():
    t = _table_for(gb_chain(), inf_ab_dsa())
    for e in t.entries.values():
        assert e.good == set(e.values) and e.orig_value == 1


def test_dead_label_all_copies_good():
    m = MDP(AB, (A,), ((("t", ((0, ONE),)),),))
    t = _table_for(m, inf_ab_dsa())
    for e in t.entries.values():
        assert e.orig_value == 0 and e.good == set(e.values)


def test_extraction_on_all_words_chain():
    st_ = extract_control_strategy(gb_chain(), inf_ab_dsa())
    assert evaluate_strategy(gb_chain(), inf_ab_dsa(), st_) == 1
    assert st_.initial_memory == LAR((1, 2))


def test_letter_choice_fixture():
    m, d = letter_choice_mdp(), inf_ab_dsa()
    st_ = extract_control_strategy(m, d)
    assert evaluate_strategy(m, d, st_) == 1
    assert len(st_.memory_states) <= math.factorial(d.k)
    # the automaton state (and here the MDP state too) records the last
    # letter, so positional strategies can already alternate
    assert best_positional_value(m, d, on_product=True) == 1
    assert best_positional_value(m, d, on_product=False) == 1


def test_memory_is_needed_on_hub_fixture():
    m, d = hub_mdp(), last_letter_dsa()
    st_ = extract_control_strategy(m, d)
    assert evaluate_strategy(m, d, st_) == 1
    assert best_positional_value(m, d, on_product=True) == 0
    assert len(st_.memory_states) == 2 == math.factorial(d.k)
    # at H2 the choice flips with the memory
    outs = {perm: a for (s, q, perm), a in st_.output.items() if s == 1}
    assert sorted(outs.values()) == ["left", "right"]


def test_ascending_mode_also_optimal():
    m, d = hub_mdp(), last_letter_dsa()
    st_ = extract_control_strategy(m, d, mode=ASCENDING)
    assert evaluate_strategy(m, d, st_) == 1


def test_no_pairs_strategy_is_positional():
    st_ = extract_control_strategy(letter_choice_mdp(), universal_dsa())
    assert st_.memory_states == {()}
    assert evaluate_strategy(letter_choice_mdp(), universal_dsa(), st_) == 1


def test_value_zero_instance():
    m = MDP(AB, (A,), ((("t", ((0, ONE),)),),))
    st_ = extract_control_strategy(m, inf_ab_dsa())
    assert evaluate_strategy(m, inf_ab_dsa(), st_) == 0


def test_any_strategy_on_a_chain():
    # a chain has one action, so every output table gives the same value
    m, d = gb_chain(), inf_ab_dsa()
    out = {(s, q, perm): "tau" for s in range(2) for q in range(2) for perm in ((1, 2), (2, 1))}
    st_ = MealyStrategy(d.pairs, DESCENDING, LAR((1, 2)), out, frozenset({(1, 2), (2, 1)}))
    assert evaluate_strategy(m, d, st_) == 1


def test_undefined_output_raises():
    m, d = letter_choice_mdp(), inf_ab_dsa()
    st_ = MealyStrategy(d.pairs, DESCENDING, LAR((1, 2)), {}, frozenset())
    with pytest.raises(StrategyError):
        evaluate_strategy(m, d, st_)


def test_games_rejected():
    from altgfm.fixtures import not_gfg_arena
    with pytest.raises(StrategyError):
        extract_control_strategy(not_gfg_arena(), inf_ab_dsa())


@given(mdps(max_states=4, max_actions=2))
def test_extracted_strategy_is_optimal(m):
    d = inf_ab_dsa()
    st_ = extract_control_strategy(m, d, verify=False)
    assert evaluate_strategy(m, d, st_) == streett_value(product_det(m, d))[0][0]
    assert len(st_.memory_states) <= 2


@given(mdps(max_states=3, max_actions=2, alphabet=last_letter_dsa().alphabet))
def test_extracted_strategy_is_optimal_three_letters(m):
    d = last_letter_dsa()
    st_ = extract_control_strategy(m, d, verify=False)
    assert evaluate_strategy(m, d, st_) == streett_value(product_det(m, d))[0][0]
