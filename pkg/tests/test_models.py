from fractions import Fraction

from hypothesis import given

import pytest

from altgfm.construct import dsa_to_alt_gfm
from altgfm.fixtures import (HALF, AB, guessing_nba, all_words_dba, coin_loop_game, inf_ab_dsa, gb_chain,
                             not_gfg_arena, universal_dsa)
from altgfm.models import (CHANCE, MAX, MDP, MIN, Game, ModelError, Move, action_position, augment,
                           auto_position, product_det, product_game, product_nba)
from altgfm.automata import Alphabet, NondetBuchiAutomaton

from gen import mdps

ONE = Fraction(1)


def named(game):
    mn, an = game.meta["mdp_names"], game.meta["aut_names"]
    return [(mn[s], an[q]) for _, s, q in game.provenance]


def test_guessing_product_shape():
    g = product_nba(gb_chain(), guessing_nba())
    states = named(g)
    drawn = {(s, q) for s in ("s0", "s1") for q in ("q0", "q1", "q2")}
    assert drawn <= set(states)
    extra = set(states) - drawn
    assert extra == {("s0", "sink"), ("s1", "sink")}
    # from (s, q0) the automaton guesses q1 or q2; each choice is a product action
    p = states.index(("s0", "q0"))
    assert sorted(m.label for m in g.moves[p]) == [("tau", 1), ("tau", 2)]
    assert all(not m.accepting for m in g.moves[p])
    # reading g from q1 accepts; q2 reading b accepts
    assert all(m.accepting for m in g.moves[states.index(("s0", "q1"))])
    assert all(m.accepting for m in g.moves[states.index(("s1", "q2"))])
    assert not any(m.accepting for m in g.moves[states.index(("s1", "q1"))])


def test_all_words_product_is_the_chain():
    g = product_nba(gb_chain(), all_words_dba())
    assert g.n == 2 and g.is_chain
    assert all(m.accepting for ms in g.moves for m in ms)


def test_deterministic_nba_product_is_isomorphic():
    g = product_nba(gb_chain(), all_words_dba())
    for p, ms in enumerate(g.moves):
        (m,) = ms
        assert m.label == ("tau", 0)
        assert [pr for _, pr in m.dist] == [HALF, HALF]


def test_product_det_pairs_lifted():
    g = product_det(gb_chain(), inf_ab_dsa())
    assert g.n == 4 and g.pair_kind == "streett" and len(g.pairs) == 2
    for i, pr in enumerate(g.pairs):
        assert all(g.provenance[p][2] in inf_ab_dsa().pairs[i].green for p in pr.green)
        assert all(g.provenance[p][2] in inf_ab_dsa().pairs[i].red for p in pr.red)


def test_product_game_phases():
    alt = dsa_to_alt_gfm(inf_ab_dsa())
    g = product_game(gb_chain(), alt)
    assert g.n == 2 * 2 * alt.n_states
    for s in range(2):
        for q in range(alt.n_states):
            a, b = auto_position(g, s, q), action_position(g, s, q)
            assert g.provenance[a] == ("auto", s, q) and g.provenance[b] == ("action", s, q)
            assert g.owners[a] == (MIN if q in alt.universal else MAX)
            for m in g.moves[a]:
                assert len(m.dist) == 1 and g.provenance[m.dist[0][0]][0] == "action"
            for m in g.moves[b]:
                assert not m.accepting
                assert all(g.provenance[t][0] == "auto" for t, _ in m.dist)
                assert sum(p for _, p in m.dist) == 1


def test_product_game_without_universal_states():
    g = product_game(gb_chain(), guessing_nba())
    assert MIN not in g.owners


def test_arena_owner_carried():
    g = product_game(not_gfg_arena(), dsa_to_alt_gfm(universal_dsa()))
    u_action = [p for p, pv in enumerate(g.provenance) if pv[0] == "action" and pv[1] == 0]
    assert u_action and all(g.owners[p] == MIN for p in u_action)


def test_coin_loop_augmentation():
    p, z = Fraction(1, 3), Fraction(9, 10)
    aug = augment(coin_loop_game(p), z)
    g = aug.game
    assert aug.sink == 3 and g.target == {3}
    assert g.moves[0][0].dist == ((1, p * z), (2, (1 - p) * z), (3, 1 - z))
    assert g.moves[1][0].dist == ((0, z), (3, 1 - z))
    assert g.moves[2][0].dist == ((0, ONE),)
    assert g.moves[3][0].dist == ((3, ONE),) and g.owners[3] == CHANCE
    assert not any(m.accepting for ms in g.moves for m in ms)


def test_augment_rejects_bad_zeta():
    for z in (0, 1, Fraction(3, 2)):
        with pytest.raises(ModelError):
            augment(coin_loop_game(), z)


def test_alphabet_mismatch():
    other = NondetBuchiAutomaton(Alphabet(("x", "y")), ((frozenset({0}),) * 4,))
    with pytest.raises(ModelError):
        product_nba(gb_chain(), other)


def test_mdp_validation():
    with pytest.raises(ModelError, match="row sum"):
        MDP(AB, (0,), ((("a", ((0, Fraction(1, 2)),)),),))
    with pytest.raises(ModelError, match="dangling"):
        MDP(AB, (0,), ((("a", ((1, ONE),)),),))
    with pytest.raises(ModelError, match="no enabled action"):
        MDP(AB, (0,), ((),))
    with pytest.raises(ModelError):
        MDP(AB, (0,), ((("a", ((0, ONE),)), ("a", ((0, ONE),))),))
    with pytest.raises(ModelError):
        Game((CHANCE,), ((Move(((0, ONE),)), Move(((0, ONE),))),))


@given(mdps(max_states=4))
def test_product_game_distributions_are_stochastic(m):
    g = product_game(m, dsa_to_alt_gfm(inf_ab_dsa()))
    for ms in g.moves:
        for mv in ms:
            assert sum(p for _, p in mv.dist) == 1
    assert g.provenance[g.initial] == ("auto", m.initial, 0)


def test_restrict_fixes_moves():
    g = product_nba(gb_chain(), guessing_nba())
    r = g.restrict({0: 1})
    assert r.moves[0] == (g.moves[0][1],) and r.owners[0] == CHANCE
