"""Small reference models and automata used by tests, docs and the CLI.

Over the one-proposition alphabet ``AB`` letter 0 reads as ``a`` (or ``g``)
and letter 1 as ``b``.
"""

from fractions import Fraction

from .automata import (STREETT, Alphabet, DeterministicOmegaAutomaton, NondetBuchiAutomaton,
                       Pair, complete_nba)
from .models import MAX, MIN, MDP, Game, Move

AB = Alphabet(("b",))
A = G = 0
B = 1
HALF = Fraction(1, 2)

# three letters a = {a}, b = {b}, c = {} over two propositions
ABC = Alphabet(("a", "b"))
LA, LB, LC = 1, 2, 0


def gb_chain() -> MDP:
    """Two-state chain: ``s0`` labelled g, ``s1`` labelled b, every step a fair coin."""
    coin = ((0, HALF), (1, HALF))
    return MDP(AB, (G, B), ((("tau", coin),), (("tau", coin),)), names=("s0", "s1"))


def guessing_nba() -> NondetBuchiAutomaton:
    """Accepts every word, but guesses the next letter and is therefore not GFM."""
    partial = {(0, G): {1, 2}, (0, B): {1, 2}, (1, G): {0}, (2, B): {0}}
    return complete_nba(AB, partial, 3, accepting_transitions={(1, G, 0), (2, B, 0)},
                        names=("q0", "q1", "q2"))


def all_words_dba() -> NondetBuchiAutomaton:
    return NondetBuchiAutomaton(AB, ((frozenset({0}), frozenset({0})),),
                                accepting_transitions=frozenset({(0, G, 0), (0, B, 0)}),
                                names=("q0",))


def universal_dsa(alphabet: Alphabet = AB) -> DeterministicOmegaAutomaton:
    """One state, no pairs: the language of all words."""
    return DeterministicOmegaAutomaton(alphabet, ((0,) * alphabet.size,), STREETT, ())


def inf_ab_dsa() -> DeterministicOmegaAutomaton:
    """Infinitely many a-s and infinitely many b-s; the state is the last letter."""
    return DeterministicOmegaAutomaton(
        AB, ((0, 1), (0, 1)), STREETT,
        (Pair(frozenset({0}), frozenset({1})), Pair(frozenset({1}), frozenset({0}))),
        names=("q0", "q1"))


def coin_loop_game(p=HALF) -> Game:
    """0 -tau0-> {1: p, 2: 1-p}; 1 -tau1-> 0; 2 -tau2-> 0.  tau0, tau1 accept."""
    p = Fraction(p)
    one = Fraction(1)
    moves = (
        (Move(((1, p), (2, 1 - p)), True, "tau0"),),
        (Move(((0, one),), True, "tau1"),),
        (Move(((0, one),), False, "tau2"),),
    )
    return Game((MAX, MAX, MAX), moves)


def finitely_many_a_dsa() -> DeterministicOmegaAutomaton:
    """States ``a`` and ``b`` remember the last letter; pair ``⟨∅, {a}⟩``."""
    return DeterministicOmegaAutomaton(AB, ((0, 1), (0, 1)), STREETT,
                                       (Pair(frozenset(), frozenset({0})),),
                                       initial=1, names=("a", "b"))


def not_gfg_arena() -> MDP:
    """MIN may wait in ``u`` (b) or go once through ``v`` (a) to ``w`` (b) forever."""
    one = Fraction(1)
    acts = (
        (("stay", ((0, one),)), ("go", ((1, one),))),
        (("next", ((2, one),)),),
        (("stay", ((2, one),)),),
    )
    return MDP(AB, (B, A, B), acts, names=("u", "v", "w"), owners=(MIN, MAX, MAX))


def letter_choice_mdp() -> MDP:
    """Both states offer ``go_a`` / ``go_b``; state ``A`` is labelled a, ``B`` b.

    The label of the next state is chosen by the action, so this is the
    state-labelled form of a single state with two labelled actions.
    """
    one = Fraction(1)
    acts = ((("go_a", ((0, one),)), ("go_b", ((1, one),))),) * 2
    return MDP(AB, (A, B), acts, names=("A", "B"))


def hub_mdp() -> MDP:
    """``H`` (c) -> ``H2`` (c) -> choice of ``X`` (a) or ``Y`` (b) -> ``H``."""
    one = Fraction(1)
    acts = (
        (("next", ((1, one),)),),
        (("left", ((2, one),)), ("right", ((3, one),))),
        (("back", ((0, one),)),),
        (("back", ((0, one),)),),
    )
    return MDP(ABC, (LC, LC, LA, LB), acts, names=("H", "H2", "X", "Y"))


def last_letter_dsa() -> DeterministicOmegaAutomaton:
    """Over {a, b, c}: infinitely many c-s demand infinitely many a-s and b-s.

    States ``qc, qa, qb`` record the last letter; pairs ``⟨{qa},{qc}⟩, ⟨{qb},{qc}⟩``.
    """
    row = [0] * ABC.size
    row[LA], row[LB], row[LC] = 1, 2, 0
    # letter {a,b} is unused by the fixtures and treated like c
    row[LA | LB] = 0
    return DeterministicOmegaAutomaton(
        ABC, (tuple(row),) * 3, STREETT,
        (Pair(frozenset({1}), frozenset({0})), Pair(frozenset({2}), frozenset({0}))),
        names=("qc", "qa", "qb"))
