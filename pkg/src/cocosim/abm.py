"""Asynchronous agent-based update schemes with exogenously fixed strategies.

Three schemes are implemented. IM picks one agent per step: empty-handed
agents may climb, holders seek a random partner and a successful match clears
both coconuts. AM1 picks an ordered pair and lets both climb independently,
trading when both already held a nut at the start of the step. AM2 picks one
agent and clears at most one coconut per step, trading against the current
coconut level. IM tracks the pair-adjusted dynamics; AM1 and AM2 align with
the single-clearing mean-field description.

All schemes evaluate a climbing decision with two independent draws (tree
encounter, then tree cost) so that every climb event carries a realized cost.
An agent climbs when the tree cost does not exceed its threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from cocosim.core import (
    ConfigError,
    ModelParams,
    Population,
    cost_cdf,
    init_population,
    rng_stream,
)

# transition codes kept numeric in bulk records
STAY0, CLIMB, TRADE, STAY1 = 0, 1, 2, 3
TRANSITION_NAMES = {STAY0: "stay0", CLIMB: "climb", TRADE: "trade", STAY1: "stay1"}

IM, AM1, AM2 = "IM", "AM1", "AM2"
_VARIANTS = (IM, AM1, AM2)

EXCLUDE_SELF, MEAN_FIELD = "exclude_self", "mean_field"


@dataclass(frozen=True)
class UpdateScheme:
    """One of the asynchronous update variants, with the AM2 trading mode."""

    variant: str = IM
    self_trade_mode: str = EXCLUDE_SELF   # AM2 only

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ConfigError(f"unknown scheme variant {self.variant!r}")
        if self.self_trade_mode not in (EXCLUDE_SELF, MEAN_FIELD):
            raise ConfigError(f"unknown self-trade mode {self.self_trade_mode!r}")


@dataclass(frozen=True)
class SimConfig:
    total_steps: int = 14_000
    burn_in_steps: int = 4_000
    eps0: float = 0.0
    replicates: int = 1

    def __post_init__(self):
        if not self.burn_in_steps < self.total_steps:
            raise ConfigError(
                f"burn_in_steps ({self.burn_in_steps}) must be < total_steps ({self.total_steps})")
        if self.burn_in_steps < 0:
            raise ConfigError("burn_in_steps must be >= 0")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not 0.0 <= self.eps0 <= 1.0:
            raise ConfigError(f"eps0 must be in [0, 1], got {self.eps0}")


@dataclass(frozen=True)
class StepEvent:
    """What happened to one agent in one micro step."""

    agent_index: int
    transition: int                  # STAY0 / CLIMB / TRADE / STAY1
    tree_cost: Optional[float]       # set on climb attempts that found a tree
    reward: float

    @property
    def transition_name(self) -> str:
        return TRANSITION_NAMES[self.transition]


def climb_attempt(strategy: float, p: ModelParams, rng: np.random.Generator):
    """Two-draw climbing decision for an empty-handed agent.

    Returns (climbed, tree_cost); tree_cost is None when no tree was found.
    """
    if rng.random() >= p.f:
        return False, None
    cost = rng.uniform(p.c_min, p.c_max)
    return (cost <= strategy), cost


def am2_trade_probability(e: int, n: int, self_trade_mode: str) -> float:
    """Probability that a holder clears its coconut this step under AM2."""
    if self_trade_mode == MEAN_FIELD:
        return e / n
    return (e - 1) / (n - 1)


def step(pop: Population, scheme: UpdateScheme, p: ModelParams,
         rng: np.random.Generator) -> list[StepEvent]:
    """One asynchronous micro step; mutates pop and reports the events."""
    if scheme.variant == IM:
        return _step_im(pop, p, rng)
    if scheme.variant == AM1:
        return _step_am1(pop, p, rng)
    return _step_am2(pop, p, rng, scheme.self_trade_mode)


def _step_im(pop: Population, p: ModelParams, rng) -> list[StepEvent]:
    s = pop.states
    i = int(rng.integers(pop.n))
    if s[i] == 0:
        climbed, cost = climb_attempt(pop.strategies[i], p, rng)
        if climbed:
            s[i] = 1
            return [StepEvent(i, CLIMB, cost, -cost)]
        return [StepEvent(i, STAY0, cost, 0.0)]
    j = int(rng.integers(pop.n - 1))
    if j >= i:
        j += 1
    if s[j] == 1:
        s[i] = 0
        s[j] = 0
        return [StepEvent(i, TRADE, None, p.y), StepEvent(j, TRADE, None, p.y)]
    return [StepEvent(i, STAY1, None, 0.0)]


def _step_am1(pop: Population, p: ModelParams, rng) -> list[StepEvent]:
    s = pop.states
    i = int(rng.integers(pop.n))
    j = int(rng.integers(pop.n - 1))
    if j >= i:
        j += 1
    # climbing checks and the trade predicate all use start-of-step states,
    # so a freshly harvested nut is not traded within the same step
    si, sj = int(s[i]), int(s[j])
    events = []
    if si == 0:
        climbed, cost = climb_attempt(pop.strategies[i], p, rng)
        if climbed:
            s[i] = 1
            events.append(StepEvent(i, CLIMB, cost, -cost))
        else:
            events.append(StepEvent(i, STAY0, cost, 0.0))
    if sj == 0:
        climbed, cost = climb_attempt(pop.strategies[j], p, rng)
        if climbed:
            s[j] = 1
            events.append(StepEvent(j, CLIMB, cost, -cost))
        else:
            events.append(StepEvent(j, STAY0, cost, 0.0))
    if si == 1 and sj == 1:
        s[i] = 0
        s[j] = 0
        events.append(StepEvent(i, TRADE, None, p.y))
        events.append(StepEvent(j, TRADE, None, p.y))
    elif si == 1:
        events.insert(0, StepEvent(i, STAY1, None, 0.0))
    elif sj == 1:
        events.append(StepEvent(j, STAY1, None, 0.0))
    return events


def _step_am2(pop: Population, p: ModelParams, rng, self_trade_mode: str) -> list[StepEvent]:
    s = pop.states
    i = int(rng.integers(pop.n))
    if s[i] == 0:
        climbed, cost = climb_attempt(pop.strategies[i], p, rng)
        if climbed:
            s[i] = 1
            return [StepEvent(i, CLIMB, cost, -cost)]
        return [StepEvent(i, STAY0, cost, 0.0)]
    e = int(np.sum(s))
    if rng.random() < am2_trade_probability(e, pop.n, self_trade_mode):
        s[i] = 0
        return [StepEvent(i, TRADE, None, p.y)]
    return [StepEvent(i, STAY1, None, 0.0)]


@dataclass
class Trajectory:
    """Per-step record of one simulation run.

    epsilon[t] is the coconut fraction after step t; event_types and rewards
    describe the chosen agent's transition. sigma[t] (state/climbing-probability
    covariance) is recorded on request by run().
    """

    epsilon: np.ndarray
    mean_strategy: np.ndarray
    event_types: np.ndarray              # int8 transition codes
    rewards: np.ndarray
    final_population: Population
    sigma: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.epsilon)

    def to_csv(self, path) -> None:
        """RFC-4180 CSV: step, epsilon, mean_strategy, event_type, reward."""
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "epsilon", "mean_strategy", "event_type", "reward"])
            for t in range(len(self.epsilon)):
                w.writerow([t, repr(float(self.epsilon[t])),
                            repr(float(self.mean_strategy[t])),
                            TRANSITION_NAMES[int(self.event_types[t])],
                            repr(float(self.rewards[t]))])


def run(p: ModelParams, scheme: UpdateScheme, cfg: SimConfig,
        strategies: np.ndarray, rng: np.random.Generator,
        record_sigma: bool = False) -> Trajectory:
    """Run total_steps micro steps from a fresh population at eps0."""
    pop = init_population(p, cfg.eps0, strategies, p.y, 0.0, rng)
    n_steps = cfg.total_steps
    eps = np.empty(n_steps)
    ev = np.empty(n_steps, dtype=np.int8)
    rew = np.empty(n_steps)
    mean_c = float(np.mean(pop.strategies))
    e = int(np.sum(pop.states))
    sig = np.empty(n_steps) if record_sigma else None
    gc = None
    if record_sigma:
        # centered climbing probabilities track the covariance incrementally;
        # constant strategies give an exactly zero series
        g = cost_cdf(pop.strategies, p)
        gc = g - g.mean() if np.ptp(g) > 0.0 else np.zeros_like(g)
        sum_sgc = float(np.dot(pop.states, gc))
    for t in range(n_steps):
        events = step(pop, scheme, p, rng)
        first = events[0]
        delta = 0
        for x in events:
            if x.transition == CLIMB:
                delta += 1
            elif x.transition == TRADE:
                delta -= 1
            if record_sigma and x.transition in (CLIMB, TRADE):
                sum_sgc += gc[x.agent_index] if x.transition == CLIMB else -gc[x.agent_index]
        e += delta
        eps[t] = e
        ev[t] = first.transition
        rew[t] = first.reward
        if record_sigma:
            sig[t] = sum_sgc / pop.n
    eps /= p.n_agents
    return Trajectory(
        epsilon=eps,
        mean_strategy=np.full(n_steps, mean_c),
        event_types=ev,
        rewards=rew,
        final_population=pop,
        sigma=sig,
    )


def stationary_mean(p: ModelParams, scheme: UpdateScheme, cfg: SimConfig,
                    strategies: np.ndarray,
                    experiment_id: str = "stationary") -> tuple[float, float]:
    """Post-burn-in mean coconut level pooled over replicates, with a
    standard error estimated from the replicate means."""
    if cfg.burn_in_steps < 1:
        raise ConfigError("stationary_mean needs burn_in_steps >= 1")
    means = np.empty(cfg.replicates)
    for r in range(cfg.replicates):
        rng = rng_stream(p.master_seed, f"{experiment_id}/{scheme.variant}", r)
        traj = run(p, scheme, cfg, strategies, rng)
        means[r] = traj.epsilon[cfg.burn_in_steps:].mean()
    mean = float(means.mean())
    if cfg.replicates == 1:
        return mean, 0.0
    return mean, float(means.std(ddof=1) / np.sqrt(cfg.replicates))
