import math
import random
from fractions import Fraction

import pytest

from altgfm.construct import dsa_to_alt_gfm
from altgfm.fixtures import HALF, guessing_nba, all_words_dba, inf_ab_dsa, gb_chain
from altgfm.models import MAX, Game, ModelError, Move, augment, product_game, product_nba
from altgfm.rl import SINK, Interpreter, LearnerConfig, interpret_step, q_learn, zeta_sweep

ONE = Fraction(1)


def loop(accepting):
    return Game((MAX,), ((Move(((0, ONE),), accepting),),))


def test_reward_frequency_matches_one_minus_zeta():
    rng = random.Random(3)
    n, z = 4000, HALF
    hits = sum(interpret_step(loop(True), 0, 0, z, rng)[1] for _ in range(n))
    p = 1 - float(z)
    sd = math.sqrt(p * (1 - p) / n)
    assert abs(hits / n - p) < 4 * sd


def test_reward_frequency_other_zeta():
    rng = random.Random(11)
    n, z = 4000, Fraction(9, 10)
    hits = sum(interpret_step(loop(True), 0, 0, z, rng)[1] for _ in range(n))
    sd = math.sqrt(0.1 * 0.9 / n)
    assert abs(hits / n - 0.1) < 4 * sd


def test_non_accepting_move_never_rewards():
    rng = random.Random(0)
    for _ in range(500):
        nxt, r = interpret_step(loop(False), 0, 0, HALF, rng)
        assert (nxt, r) == (0, 0)


def test_sink_is_absorbing():
    assert interpret_step(loop(True), None, 0, HALF, random.Random(0)) == (None, 0)


def test_interpreter_hides_the_model():
    env = Interpreter(product_nba(gb_chain(), all_words_dba()), HALF)
    assert not hasattr(env, "game") and env.enabled(0) == 1
    with pytest.raises(ModelError):
        env.step(0, 5, random.Random(0))


def test_config_validation():
    for bad in ({"zeta": 1}, {"zeta": 0}, {"episodes": 0}, {"gamma": 0}, {"epsilon_end": 2}):
        with pytest.raises(ModelError):
            LearnerConfig(**bad)
    cfg = LearnerConfig(episodes=100)
    assert cfg.exploration(0) == 1.0 and cfg.exploration(60) == cfg.epsilon_end
    assert cfg.learning_rate(3) == pytest.approx(0.05)


def test_reward_discipline_in_traces():
    g = product_nba(gb_chain(), all_words_dba())
    res = q_learn(augment(g, Fraction(9, 10)), LearnerConfig(episodes=200, seed=1), keep_traces=50)
    assert len(res.traces) == 50
    for t in res.traces:
        assert t.rewards <= 1
        if t.rewards:
            assert t.terminal == SINK and t.steps[-1][3] is None


def test_learn_all_words():
    g = product_nba(gb_chain(), all_words_dba())
    res = q_learn(augment(g, Fraction(9, 10)), LearnerConfig(seed=7))
    assert res.reach_value == 1 and res.buchi_value == 1 and res.optimal


def test_learn_guessing_is_zero():
    g = product_nba(gb_chain(), guessing_nba())
    res = q_learn(augment(g, Fraction(9, 10)), LearnerConfig(episodes=2000, seed=0))
    assert res.buchi_value == 0 == res.optimum


def test_learn_inf_ab_alt_game():
    g = product_game(gb_chain(), dsa_to_alt_gfm(inf_ab_dsa()))
    res = q_learn(augment(g, Fraction(9, 10)), LearnerConfig(seed=2))
    assert res.buchi_value == 1 and res.optimal


def test_sweep_all_words():
    g = product_nba(gb_chain(), all_words_dba())
    res = zeta_sweep(g, (HALF, Fraction(9, 10), Fraction(99, 100)))
    assert all(r.reach_value == 1 and r.induced_value == 1 for r in res.rows)
    assert res.almost_sure_consistent and res.threshold == HALF


def test_sweep_guessing():
    g = product_nba(gb_chain(), guessing_nba())
    res = zeta_sweep(g)
    assert all(r.induced_value == 0 and r.reach_value < 1 for r in res.rows)
    assert [r.reach_value for r in res.rows] == [Fraction(1, 11), Fraction(1, 101), Fraction(1, 1001)]
    assert res.almost_sure_consistent


def threshold_game():
    # move 0: one accepting step into a dead end; move 1: a coin for an accepting loop
    return Game((MAX,) * 4, (
        (Move(((1, ONE),), True), Move(((2, HALF), (3, HALF)))),
        (Move(((1, ONE),)),),
        (Move(((2, ONE),), True),),
        (Move(((3, ONE),)),),
    ))


def test_sweep_exhibits_threshold():
    res = zeta_sweep(threshold_game(), (Fraction(3, 10), Fraction(9, 10), Fraction(99, 100)))
    low, *high = res.rows
    assert low.induced_value == 0 < low.optimum == HALF
    assert all(r.optimal for r in high)
    assert res.threshold == Fraction(9, 10)
    assert "threshold: 9/10" in res.table()
