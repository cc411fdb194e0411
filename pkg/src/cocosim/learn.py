"""Endogenous strategies via temporal-difference value learning.

Each micro step runs the single-clearing action scheme for one chosen agent
(search and trade), then lets every agent update the value of its pre-step
state from its own reward signal: zero for all bystanders, the realized
climbing cost or consumption utility for the acting agent. Strategies are
recomputed as the value difference c_i = V_i(1) - V_i(0) after every update,
optionally perturbed by a small uniform exploration noise.

The per-step discount factor embeds the continuous rate gamma into the
asynchronous schedule, where each step advances effective time by 1/N:
gamma_r = exp(-gamma / N). With the learning rate at zero the dynamics
reduce, draw for draw, to the fixed-strategy single-clearing scheme.

Two implementations share the identical arithmetic: ``learn_step`` applies
one update to a plain Population (the auditable reference), while
``LearningSim`` drives long runs with O(1) bookkeeping of the population
sums. Their trajectories agree bit for bit on a common stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from cocosim.abm import (
    CLIMB,
    EXCLUDE_SELF,
    STAY0,
    STAY1,
    TRADE,
    StepEvent,
    am2_trade_probability,
    climb_attempt,
)
from cocosim._parallel import pmap
from cocosim.core import (
    ConfigError,
    ModelParams,
    Population,
    init_population,
    rng_stream,
)

_RESYNC_INTERVAL = 1 << 16   # exact recompute of running sums


@dataclass(frozen=True)
class LearnConfig:
    """Knobs of one learning run.

    v1_init defaults to the consumption utility y (so the initial strategy
    starts above c_max and agents accept any tree); eps_fix, when set, pins
    the trading probability while climbing still sees the true population.
    """

    alpha: float = 0.05
    gamma: float = 0.1
    exploration_amplitude: float = 0.0
    eps_fix: Optional[float] = None
    v1_init: Optional[float] = None     # None: use p.y
    v0_init: float = 0.0
    eps0: float = 0.5
    total_steps: int = 200_000

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must be in [0, 1), got {self.alpha}")
        if self.gamma < 0.0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if self.exploration_amplitude < 0.0:
            raise ConfigError("exploration_amplitude must be >= 0")
        if self.eps_fix is not None and not 0.0 <= self.eps_fix <= 1.0:
            raise ConfigError(f"eps_fix must be in [0, 1], got {self.eps_fix}")
        if not 0.0 <= self.eps0 <= 1.0:
            raise ConfigError(f"eps0 must be in [0, 1], got {self.eps0}")
        if self.total_steps < 1:
            raise ConfigError("total_steps must be >= 1")

    def gamma_r(self, n_agents: int) -> float:
        """Per-step discount factor, in (0, 1]."""
        return math.exp(-self.gamma / n_agents)

    def resolve_v1_init(self, p: ModelParams) -> float:
        return p.y if self.v1_init is None else self.v1_init


def td_error(s_old: int, s_new: int, reward: float, v1: float, v0: float,
             gamma_r: float) -> float:
    """Temporal-difference error: reward plus discounted next-state value
    minus the current estimate."""
    future = v1 if s_new else v0
    current = v1 if s_old else v0
    return reward + gamma_r * future - current


def initial_learning_population(p: ModelParams, cfg: LearnConfig,
                                rng: np.random.Generator) -> Population:
    """States at eps0, uniform initial values, strategies at their difference."""
    pop = init_population(p, cfg.eps0, np.zeros(p.n_agents),
                          cfg.resolve_v1_init(p), cfg.v0_init, rng)
    pop.strategies[:] = pop.values_have - pop.values_not
    return pop


def learn_step(pop: Population, cfg: LearnConfig, p: ModelParams,
               rng: np.random.Generator) -> StepEvent:
    """One search/trade/learn micro step on a Population (reference form).

    Mutates states, values, and strategies in place and returns the acting
    agent's event. The acting agent's climbing decision reads its current
    strategy (which carries the previous step's exploration noise).
    """
    n = pop.n
    s = pop.states
    v1, v0 = pop.values_have, pop.values_not
    i = int(rng.integers(n))
    s_i = int(s[i])

    reward, cost, s_new = 0.0, None, s_i
    if s_i == 0:
        climbed, cost = climb_attempt(pop.strategies[i], p, rng)
        if climbed:
            s_new, reward = 1, -cost
        transition = CLIMB if climbed else STAY0
    else:
        e = int(np.sum(s))
        prob = cfg.eps_fix if cfg.eps_fix is not None else \
            am2_trade_probability(e, n, EXCLUDE_SELF)
        if rng.random() < prob:
            s_new, reward = 0, p.y
            transition = TRADE
        else:
            transition = STAY1

    # value update: bystanders see zero reward and an unchanged state, which
    # decays their active value; the acting agent uses its realized reward
    gamma_r = cfg.gamma_r(n)
    decay = 1.0 + cfg.alpha * (gamma_r - 1.0)
    ov1_i, ov0_i = float(v1[i]), float(v0[i])
    holders = s == 1
    v1[holders] *= decay
    v0[~holders] *= decay
    delta = td_error(s_i, s_new, reward, ov1_i, ov0_i, gamma_r)
    if s_i:
        v1[i] = ov1_i + cfg.alpha * delta
    else:
        v0[i] = ov0_i + cfg.alpha * delta
    if s_new != s_i:
        s[i] = s_new

    pop.strategies[:] = v1 - v0
    if cfg.exploration_amplitude > 0.0:
        a = cfg.exploration_amplitude
        pop.strategies += rng.uniform(-a, a, n)
    return StepEvent(i, transition, cost, reward)


class LearningSim:
    """Incremental engine for long learning runs.

    Keeps each agent's active-state and other-state value so the per-step
    discounting of every agent is a single in-place multiply, with running
    partition sums providing O(1) population means. Arithmetic matches
    learn_step exactly, draw for draw.
    """

    def __init__(self, p: ModelParams, cfg: LearnConfig, rng: np.random.Generator):
        self.p = p
        self.cfg = cfg
        self.rng = rng
        self.n = p.n_agents
        self.gamma_r = cfg.gamma_r(self.n)
        self.decay = 1.0 + cfg.alpha * (self.gamma_r - 1.0)
        pop = initial_learning_population(p, cfg, rng)
        self.states = pop.states
        holders = self.states == 1
        self.v_active = np.where(holders, pop.values_have, pop.values_not)
        self.v_other = np.where(holders, pop.values_not, pop.values_have)
        # without exploration noise the strategy vector is a pure function of
        # the values and is only materialized on demand
        self._track_strategies = cfg.exploration_amplitude > 0.0
        self.strategies = pop.strategies if self._track_strategies else None
        self.e = int(np.sum(self.states))
        self.t = 0
        self._sync_sums()

    def _sync_sums(self):
        holders = self.states == 1
        # sum_v1 = A1 + B0, sum_v0 = A0 + B1
        self.a1 = float(self.v_active[holders].sum())
        self.a0 = float(self.v_active[~holders].sum())
        self.b1 = float(self.v_other[holders].sum())
        self.b0 = float(self.v_other[~holders].sum())

    @property
    def epsilon(self) -> float:
        return self.e / self.n

    @property
    def mean_v1(self) -> float:
        return (self.a1 + self.b0) / self.n

    @property
    def mean_v0(self) -> float:
        return (self.a0 + self.b1) / self.n

    @property
    def mean_c(self) -> float:
        return (self.a1 + self.b0 - self.a0 - self.b1) / self.n

    def population(self) -> Population:
        holders = self.states == 1
        if self._track_strategies:
            strategies = self.strategies.copy()
        else:
            diff = self.v_active - self.v_other
            np.negative(diff, where=~holders, out=diff)
            strategies = diff
        return Population(
            states=self.states.copy(),
            strategies=strategies,
            values_have=np.where(holders, self.v_active, self.v_other),
            values_not=np.where(holders, self.v_other, self.v_active),
        )

    def step(self) -> StepEvent:
        i, transition, cost, reward = self._advance()
        return StepEvent(i, transition, cost, reward)

    def _advance(self):
        p, cfg, rng = self.p, self.cfg, self.rng
        n = self.n
        i = int(rng.integers(n))
        s_i = int(self.states[i])
        ov = float(self.v_active[i])    # value of the pre-step state
        oi = float(self.v_other[i])

        reward, cost, s_new = 0.0, None, s_i
        if s_i == 0:
            c_i = self.strategies[i] if self._track_strategies else oi - ov
            climbed, cost = climb_attempt(c_i, p, rng)
            if climbed:
                s_new, reward = 1, -cost
            transition = CLIMB if climbed else STAY0
        else:
            prob = cfg.eps_fix if cfg.eps_fix is not None else \
                am2_trade_probability(self.e, n, EXCLUDE_SELF)
            if rng.random() < prob:
                s_new, reward = 0, p.y
                transition = TRADE
            else:
                transition = STAY1

        # discount every agent's active value, then correct the acting agent
        self.v_active *= self.decay
        self.a1 *= self.decay
        self.a0 *= self.decay
        target = ov if s_new == s_i else oi
        updated = ov + cfg.alpha * (reward + self.gamma_r * target - ov)
        if s_i:
            self.a1 += updated - ov * self.decay
        else:
            self.a0 += updated - ov * self.decay
        self.v_active[i] = updated

        if s_new != s_i:
            # the new state's value becomes active; move agent i's
            # contributions between the holder/non-holder partitions
            self.v_active[i], self.v_other[i] = oi, updated
            if s_i:
                self.a1 -= updated
                self.b1 -= oi
                self.a0 += oi
                self.b0 += updated
            else:
                self.a0 -= updated
                self.b0 -= oi
                self.a1 += oi
                self.b1 += updated
            self.states[i] = s_new
            self.e += 1 if s_new else -1

        if self._track_strategies:
            # strategies from values, then exploration noise
            diff = self.v_active - self.v_other
            np.negative(diff, where=self.states == 0, out=diff)
            self.strategies[:] = diff
            a = cfg.exploration_amplitude
            self.strategies += rng.uniform(-a, a, n)

        self.t += 1
        if self.t % _RESYNC_INTERVAL == 0:
            self._sync_sums()
        return i, transition, cost, reward


@dataclass
class LearningTrajectory:
    """Per-step record of one learning run plus the final population.

    mean_c is recorded before exploration noise, so it equals
    mean_v1 - mean_v0 at every step.
    """

    epsilon: np.ndarray
    mean_c: np.ndarray
    mean_v1: np.ndarray
    mean_v0: np.ndarray
    final_population: Population

    def __len__(self) -> int:
        return len(self.epsilon)

    def to_csv(self, path, every: int = 1) -> None:
        """RFC-4180 CSV: step, epsilon, mean_c, mean_v1, mean_v0."""
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "epsilon", "mean_c", "mean_v1", "mean_v0"])
            for t in range(0, len(self.epsilon), every):
                w.writerow([t, repr(float(self.epsilon[t])), repr(float(self.mean_c[t])),
                            repr(float(self.mean_v1[t])), repr(float(self.mean_v0[t]))])


def run_learning(p: ModelParams, cfg: LearnConfig,
                 rng: np.random.Generator) -> LearningTrajectory:
    """Iterate the learning step total_steps times and record the series."""
    sim = LearningSim(p, cfg, rng)
    steps = cfg.total_steps
    n = sim.n
    eps = np.empty(steps)
    mean_c = np.empty(steps)
    mean_v1 = np.empty(steps)
    mean_v0 = np.empty(steps)
    advance = sim._advance
    for t in range(steps):
        advance()
        eps[t] = sim.e
        sum_v1 = sim.a1 + sim.b0
        sum_v0 = sim.a0 + sim.b1
        mean_c[t] = (sum_v1 - sum_v0) / n
        mean_v1[t] = sum_v1 / n
        mean_v0[t] = sum_v0 / n
    eps /= n
    return LearningTrajectory(eps, mean_c, mean_v1, mean_v0, sim.population())


def _probe_task(args) -> tuple[float, float]:
    p, cfg, eps_fix, experiment_id = args
    d = cfg.__dict__ | {"eps_fix": eps_fix}
    run_cfg = LearnConfig(**d)
    rng = rng_stream(p.master_seed, f"{experiment_id}/eps_fix={eps_fix:.6g}")
    traj = run_learning(p, run_cfg, rng)
    return eps_fix, float(traj.mean_c[-1])


def nullcline_probe(p: ModelParams, cfg: LearnConfig,
                    eps_fix_grid=None, workers: int | None = None,
                    experiment_id: str = "nullcline-probe") -> list[tuple[float, float]]:
    """Final mean strategy of one pinned-trading run per grid value.

    Pinning only fixes the trading probability; climbing still depends on the
    realized population, so the realized coconut level generally differs from
    the pinned value.
    """
    if eps_fix_grid is None:
        eps_fix_grid = np.round(np.arange(0.0, 1.0001, 0.05), 10)
    grid = [float(v) for v in eps_fix_grid]
    if any(not 0.0 <= v <= 1.0 for v in grid):
        raise ConfigError("eps_fix grid values must lie in [0, 1]")
    tasks = [(p, cfg, v, experiment_id) for v in grid]
    return pmap(_probe_task, tasks, workers)


@dataclass(frozen=True)
class PhaseCell:
    """Averaged endpoint of several short learning runs from one grid point."""

    eps0: float
    c0: float
    eps_final_mean: float
    c_final_mean: float
    n_runs: int


def _phase_task(args) -> PhaseCell:
    p, base_cfg, eps0, c0, runs, steps, experiment_id = args
    d = base_cfg.__dict__ | {
        "eps0": eps0, "v1_init": c0, "v0_init": 0.0, "total_steps": steps,
    }
    cfg = LearnConfig(**d)
    eps_f = np.empty(runs)
    c_f = np.empty(runs)
    for r in range(runs):
        rng = rng_stream(p.master_seed,
                         f"{experiment_id}/eps0={eps0:.6g}/c0={c0:.6g}", r)
        traj = run_learning(p, cfg, rng)
        eps_f[r] = traj.epsilon[-1]
        c_f[r] = traj.mean_c[-1]
    return PhaseCell(eps0, c0, float(eps_f.mean()), float(c_f.mean()), runs)


def phase_diagram(p: ModelParams, cfg: LearnConfig,
                  eps0_grid=None, c0_grid=None, runs: int = 10,
                  steps: int = 10_000, workers: int | None = None,
                  experiment_id: str = "phase") -> list[PhaseCell]:
    """Endpoint samples over a grid of initial conditions.

    Initial strategies are set homogeneously through the values (V(0) = 0,
    V(1) = c0); the initial coconut level is drawn at eps0. Cells run
    independently with derived streams and merge by value.
    """
    if eps0_grid is None:
        eps0_grid = np.linspace(0.0, 1.0, 26)
    if c0_grid is None:
        c0_grid = np.linspace(p.c_min, p.c_max, 26)
    tasks = [(p, cfg, float(e0), float(c0), runs, steps, experiment_id)
             for e0 in eps0_grid for c0 in c0_grid]
    return pmap(_phase_task, tasks, workers)
