"""Limit-reachability reduction and a tabular learning demonstrator.

Accepting moves of a product are diverted to a rewarding sink with
probability ``1 - zeta``.  The learner only talks to an interpreter that
samples successors and tosses the reward coin; it never reads the model.
Strategies it returns are evaluated exactly on the known model.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .models import CHANCE, MAX, MIN, AugmentedModel, Game, ModelError, as_fraction, augment
from .solve import buchi_game_value, reach_value, strategy_value

SINK = "sink"
CAP = "cap"


@dataclass(frozen=True)
class LearnerConfig:
    zeta: Fraction = Fraction(9, 10)
    episodes: int = 10_000
    alpha: float = 0.1
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    # discount < 1 so that declaring early beats postponing forever
    gamma: float = 0.99
    max_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        z = as_fraction(self.zeta)
        if not 0 < z < 1:
            raise ModelError(f"zeta must lie in (0,1), got {self.zeta}")
        object.__setattr__(self, "zeta", z)
        if self.episodes <= 0 or self.alpha <= 0 or not 0 < self.gamma <= 1:
            raise ModelError("episodes, alpha and gamma must be positive (gamma at most 1)")
        if not 0 <= self.epsilon_end <= self.epsilon_start <= 1:
            raise ModelError("exploration schedule must satisfy 0 <= end <= start <= 1")

    def learning_rate(self, episode: int) -> float:
        return self.alpha / math.sqrt(episode + 1)

    def exploration(self, episode: int) -> float:
        half = max(1, self.episodes // 2)
        if episode >= half:
            return self.epsilon_end
        return self.epsilon_start + (self.epsilon_end - self.epsilon_start) * episode / half


@dataclass
class EpisodeTrace:
    steps: list[tuple[int, int, int, int | None]] = field(default_factory=list)
    terminal: str = CAP

    @property
    def rewards(self) -> int:
        return sum(r for _, _, r, _ in self.steps)


class Interpreter:
    """Model-free view of a product: current position, enabled moves, reward."""

    def __init__(self, game: Game, zeta):
        self._game = game
        self.zeta = as_fraction(zeta)
        self._z = float(self.zeta)

    @property
    def initial(self) -> int:
        return self._game.initial

    def enabled(self, pos: int) -> int:
        return len(self._game.moves[pos])

    def owner(self, pos: int) -> int:
        return self._game.owners[pos]

    @property
    def n_positions(self) -> int:
        return self._game.n

    def step(self, pos: int, move: int, rng: random.Random):
        return interpret_step(self._game, pos, move, self._z, rng)


def interpret_step(game: Game, pos: int | None, move: int, zeta, rng: random.Random):
    """One interpreted step: ``(next position or None at the sink, reward)``."""
    if pos is None:
        return None, 0
    ms = game.moves[pos]
    if not 0 <= move < len(ms):
        raise ModelError(f"move {move} is not enabled at position {pos}")
    mv = ms[move]
    if mv.accepting and rng.random() >= float(zeta):
        return None, 1
    x = rng.random()
    acc = 0.0
    for s, p in mv.dist:
        acc += float(p)
        if x < acc:
            return s, 0
    return mv.dist[-1][0], 0


@dataclass
class LearningResult:
    sigma: dict[int, int]
    pi: dict[int, int]
    q: list[list[float]]
    estimate: float
    reach_value: Fraction
    buchi_value: Fraction
    optimum: Fraction
    episodes: int
    rewarded: int
    diagnostics: list[str] = field(default_factory=list)
    traces: list[EpisodeTrace] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.buchi_value == self.optimum


def _greedy(q, owner, p):
    row = q[p]
    if owner == MIN:
        best = min(row)
    else:
        best = max(row)
    return row.index(best)


def _value(q, owner, p):
    return min(q[p]) if owner == MIN else max(q[p])


def q_learn(aug: AugmentedModel, cfg: LearnerConfig = LearnerConfig(), keep_traces: int = 0):
    """Minimax tabular Q-learning on the interpreter of ``aug.base``.

    MAX positions back up the maximum, MIN positions the minimum.  Returns
    the greedy strategy pair with its exact values on the known model.
    """
    if cfg.zeta != aug.zeta:
        cfg = LearnerConfig(**{**cfg.__dict__, "zeta": aug.zeta})
    env = Interpreter(aug.base, cfg.zeta)
    rng = random.Random(cfg.seed)
    n = env.n_positions
    owners = [env.owner(p) for p in range(n)]
    q = [[0.0] * env.enabled(p) for p in range(n)]
    cap = cfg.max_steps or 10 * n
    rewarded = 0
    traces = []
    for ep in range(cfg.episodes):
        alpha = cfg.learning_rate(ep)
        eps = cfg.exploration(ep)
        pos = env.initial
        trace = EpisodeTrace() if len(traces) < keep_traces else None
        for _ in range(cap):
            k = len(q[pos])
            if k == 1 or owners[pos] == CHANCE:
                mv = 0
            elif rng.random() < eps:
                mv = rng.randrange(k)
            else:
                mv = _greedy(q, owners[pos], pos)
            nxt, r = env.step(pos, mv, rng)
            target = r if nxt is None else cfg.gamma * _value(q, owners[nxt], nxt)
            q[pos][mv] += alpha * (target - q[pos][mv])
            if trace is not None:
                trace.steps.append((pos, mv, r, nxt))
            if nxt is None:
                rewarded += r
                if trace is not None:
                    trace.terminal = SINK
                break
            pos = nxt
        if trace is not None:
            traces.append(trace)
    sigma = {p: _greedy(q, MAX, p) for p in range(n) if owners[p] == MAX}
    pi = {p: _greedy(q, MIN, p) for p in range(n) if owners[p] == MIN}
    base = aug.base
    rv = reach_value(aug.game.restrict(sigma), exact=True)[aug.game.initial]
    bv = strategy_value(base, sigma, exact=True)[base.initial]
    opt = buchi_game_value(base, exact=True)[0][base.initial]
    res = LearningResult(sigma, pi, q, _value(q, owners[env.initial], env.initial), rv, bv, opt,
                         cfg.episodes, rewarded, traces=traces)
    if rewarded == 0:
        res.diagnostics.append("no episode reached the reward sink")
    return res


# ---------------------------------------------------------------- ζ sweep

@dataclass
class SweepRow:
    zeta: Fraction
    reach_value: Fraction
    induced_value: Fraction
    optimum: Fraction

    @property
    def optimal(self) -> bool:
        return self.induced_value == self.optimum


@dataclass
class SweepResult:
    rows: list[SweepRow]

    @property
    def threshold(self) -> Fraction | None:
        """Smallest tested ζ from which every larger tested ζ gives a
        Büchi-optimal strategy; ``None`` if the largest one does not."""
        best = None
        for row in sorted(self.rows, key=lambda r: r.zeta, reverse=True):
            if not row.optimal:
                break
            best = row.zeta
        return best

    @property
    def almost_sure_consistent(self) -> bool:
        """Reach value 1 at every tested ζ iff Büchi value 1."""
        reach_one = all(r.reach_value == 1 for r in self.rows)
        return reach_one == (self.rows[0].optimum == 1) if self.rows else True

    def table(self) -> str:
        lines = ["zeta      reach     induced   optimum   optimal"]
        for r in self.rows:
            lines.append(f"{str(r.zeta):<9} {_fmt(r.reach_value):<9} {_fmt(r.induced_value):<9} "
                         f"{_fmt(r.optimum):<9} {'yes' if r.optimal else 'no'}")
        th = self.threshold
        lines.append(f"threshold: {'none' if th is None else th}")
        return "\n".join(lines)


def _fmt(x):
    s = str(x)
    return s if len(s) <= 9 else f"{float(x):.6f}"


def zeta_sweep(game: Game, zetas=(Fraction(9, 10), Fraction(99, 100), Fraction(999, 1000)),
               exact: bool = True) -> SweepResult:
    """For each ζ: optimal reach value of the augmented model and the Büchi
    value of its optimal positional strategy on ``game``."""
    opt = buchi_game_value(game, exact=exact)[0][game.initial]
    rows = []
    for z in zetas:
        aug = augment(game, as_fraction(z))
        vec, strat = reach_value(aug.game, exact=exact, with_strategies=True)
        sigma = {p: i for p, i in strat.sigma.items() if p < game.n}
        induced = strategy_value(game, sigma, exact=exact)[game.initial]
        rows.append(SweepRow(aug.zeta, vec[aug.game.initial], induced, opt))
    return SweepResult(rows)
