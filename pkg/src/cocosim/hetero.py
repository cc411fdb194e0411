"""Heterogeneous strategy scenarios and the covariance correction.

When strategies differ, agents with low thresholds climb less and hold
coconuts less often, so holding state and climbing probability become
correlated. The population covariance sigma between the two is exactly the
term the mean-field up rate misses; its stationary time average, estimated
from simulation, corrects both the Markov chain row and the fixed-point
formula.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from cocosim.abm import SimConfig, Trajectory, UpdateScheme, run
from cocosim.core import ConfigError, ModelParams, Population, cost_cdf

HOMOGENEOUS = "homogeneous"
UNIFORM = "uniform"
TWO_POINT = "two_point"
LINEAR_DECREASING = "linear_decreasing"
GAMMA_DIST = "gamma_dist"

_KINDS = (HOMOGENEOUS, UNIFORM, TWO_POINT, LINEAR_DECREASING, GAMMA_DIST)

GAMMA_SHAPE = 1.0
GAMMA_SCALE = 0.2


@dataclass(frozen=True)
class StrategyScenario:
    """A distribution of fixed individual strategies on [c_min, c_max].

    homogeneous(c): every agent at c. uniform: i.i.d. uniform on the support.
    two_point(c_a, c_b): half the population at each value (odd populations
    put the extra agent at c_a). linear_decreasing: density falls linearly
    from c_min, reaching zero at c_max. gamma_dist: c_min plus a
    Gamma(shape 1, scale 1/5) excess, resampled until it fits the support,
    so all strategies stay meaningful; moments refer to this truncated law.
    """

    kind: str
    c: Optional[float] = None              # homogeneous
    c_a: Optional[float] = None            # two_point
    c_b: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.kind == HOMOGENEOUS and self.c is None:
            raise ConfigError("homogeneous scenario needs c")
        if self.kind == TWO_POINT and (self.c_a is None or self.c_b is None):
            raise ConfigError("two_point scenario needs c_a and c_b")


def sample_strategies(sc: StrategyScenario, n: int, p: ModelParams,
                      rng: np.random.Generator) -> np.ndarray:
    """Draw n strategies for the scenario; deterministic kinds consume no draws."""
    if n < 1:
        raise ConfigError("need at least one agent")
    if sc.kind == HOMOGENEOUS:
        return np.full(n, float(sc.c))
    if sc.kind == TWO_POINT:
        n_a = n - n // 2
        out = np.empty(n)
        out[:n_a] = sc.c_a
        out[n_a:] = sc.c_b
        return out
    if sc.kind == UNIFORM:
        return rng.uniform(p.c_min, p.c_max, n)
    if sc.kind == LINEAR_DECREASING:
        # inverse CDF of the triangular density 2 (c_max - c) / (c_max - c_min)^2
        u = rng.random(n)
        return p.c_min + (p.c_max - p.c_min) * (1.0 - np.sqrt(1.0 - u))
    # gamma_dist: anchored at c_min, rejection beyond c_max
    out = np.empty(n)
    filled = 0
    while filled < n:
        draw = p.c_min + rng.gamma(GAMMA_SHAPE, GAMMA_SCALE, n - filled)
        keep = draw[draw <= p.c_max]
        out[filled:filled + len(keep)] = keep
        filled += len(keep)
    return out


def covariance_sigma(pop: Population, p: ModelParams) -> float:
    """Population covariance between holding state and climbing probability.

    Computed against centered climbing probabilities so a constant-strategy
    population yields exactly zero.
    """
    g = cost_cdf(pop.strategies, p)
    if np.ptp(g) == 0.0:
        return 0.0
    return float(np.dot(pop.states, g - g.mean())) / pop.n


@dataclass
class SigmaEstimate:
    """Stationary covariance estimate from one simulated run."""

    sigma_bar: float
    series: np.ndarray           # sigma(t) for each post-burn-in step
    steps_averaged: int
    g_mean: float                # realized mean climbing probability
    mean_eps: float              # post-burn-in mean coconut level
    trajectory: Trajectory


def estimate_sigma_bar(p: ModelParams, scenario: StrategyScenario,
                       scheme: UpdateScheme, cfg: SimConfig,
                       rng: np.random.Generator,
                       steps_averaged: int = 2000) -> SigmaEstimate:
    """Run the agent model under the scenario and time-average the covariance.

    sigma(t) is measured every micro step; the estimate averages the final
    ``steps_averaged`` steps of the run, mirroring how the corrected chain row
    and fixed point are meant to be fed.
    """
    measured = cfg.total_steps - cfg.burn_in_steps
    if measured < steps_averaged:
        raise ConfigError(
            f"need at least {steps_averaged} post-burn-in steps, have {measured}")
    strategies = sample_strategies(scenario, p.n_agents, p, rng)
    traj = run(p, scheme, cfg, strategies, rng, record_sigma=True)
    series = traj.sigma[cfg.burn_in_steps:]
    return SigmaEstimate(
        sigma_bar=float(series[-steps_averaged:].mean()),
        series=series,
        steps_averaged=steps_averaged,
        g_mean=float(np.mean(cost_cdf(strategies, p))),
        mean_eps=float(traj.epsilon[cfg.burn_in_steps:].mean()),
        trajectory=traj,
    )


def scenario_moments(sc: StrategyScenario, k_max: int, p: ModelParams) -> np.ndarray:
    """Analytic moments <G>, <G^2>, ..., <G^k_max> of the climbing probability.

    uniform: 1/(k+1); two_point: (G_a^k + G_b^k)/2; homogeneous: G^k;
    linear_decreasing: 2/((k+1)(k+2)); gamma_dist: quadrature over the
    truncated density (absolute accuracy 1e-8).
    """
    if k_max < 1:
        raise ConfigError("k_max must be >= 1")
    ks = np.arange(1, k_max + 1)
    if sc.kind == HOMOGENEOUS:
        return float(cost_cdf(sc.c, p)) ** ks
    if sc.kind == UNIFORM:
        return 1.0 / (ks + 1.0)
    if sc.kind == TWO_POINT:
        ga, gb = float(cost_cdf(sc.c_a, p)), float(cost_cdf(sc.c_b, p))
        return (ga ** ks + gb ** ks) / 2.0
    if sc.kind == LINEAR_DECREASING:
        return 2.0 / ((ks + 1.0) * (ks + 2.0))
    # truncated exponential on [0, width] in cost excess; g = excess / width
    width = p.c_max - p.c_min
    lam = 1.0 / GAMMA_SCALE
    norm = 1.0 - np.exp(-lam * width)

    def density(g):
        return width * lam * np.exp(-lam * width * g) / norm

    out = np.empty(k_max)
    for i, k in enumerate(ks):
        val, err = quad(lambda g, k=k: g ** k * density(g), 0.0, 1.0,
                        epsabs=1e-10, epsrel=1e-10)
        if err > 1e-8:
            raise ConfigError(f"moment quadrature failed at order {k}")
        out[i] = val
    return out


def harvest_rate_identity_gap(pop: Population, p: ModelParams) -> float:
    """Gap between the exact per-step harvest rate and its mean/covariance split.

    The rate f <(1-s) G> decomposes exactly into f [(1-eps)<G> - sigma]; this
    returns the absolute difference of the two evaluations (zero up to
    floating-point rounding for every population).
    """
    g = cost_cdf(pop.strategies, p)
    direct = p.f * float(np.mean((1 - pop.states) * g))
    eps = float(np.sum(pop.states)) / pop.n
    split = p.f * ((1.0 - eps) * float(np.mean(g)) - covariance_sigma(pop, p))
    return abs(direct - split)
