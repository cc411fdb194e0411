"""Exogenous parameters, agent population state, and the tree-cost distribution.

Everything downstream (simulation schemes, Markov chains, ODE descriptions,
learning) consumes the primitives defined here: the uniform tree-cost
distribution G, its partial first moment (the climbing integral), the
coconut fraction, and seeded population initialization.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """Invalid parameters or experiment configuration."""


class NumericsError(RuntimeError):
    """A numerical routine failed (divergence, missing root, no convergence)."""


@dataclass(frozen=True)
class ModelParams:
    """Exogenous constants of the coconut economy.

    Defaults reproduce the baseline parameterization used throughout:
    100 agents, tree-encounter probability 0.8, consumption utility 0.6,
    tree costs uniform on [0.3, 0.5], discount rate 0.1, learning rate 0.05.
    """

    n_agents: int = 100
    f: float = 0.8
    y: float = 0.6
    c_min: float = 0.3
    c_max: float = 0.5
    gamma: float = 0.1
    alpha: float = 0.05
    master_seed: int = 20160904

    def __post_init__(self):
        if self.n_agents < 2:
            raise ConfigError(f"n_agents must be >= 2, got {self.n_agents}")
        if not 0.0 <= self.f <= 1.0:
            raise ConfigError(f"f must be in [0, 1], got {self.f}")
        if not self.c_min < self.c_max:
            raise ConfigError(f"need c_min < c_max, got [{self.c_min}, {self.c_max}]")
        if self.gamma < 0.0:
            raise ConfigError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned int, got {self.master_seed}")

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelParams":
        """Build from a JSON-style mapping with exactly these field names."""
        known = {f_.name for f_ in cls.__dataclass_fields__.values()}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown parameter fields: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "f": self.f,
            "y": self.y,
            "c_min": self.c_min,
            "c_max": self.c_max,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "master_seed": self.master_seed,
        }


@dataclass
class Population:
    """Per-agent state: coconut indicator, strategy threshold, and value pair.

    Mutated only by a single owning simulation loop; use one Population per
    concurrent run.
    """

    states: np.ndarray        # int8 in {0, 1}
    strategies: np.ndarray    # float cost thresholds, never clamped
    values_have: np.ndarray   # V_i(1)
    values_not: np.ndarray    # V_i(0)

    def __post_init__(self):
        n = len(self.states)
        for name in ("strategies", "values_have", "values_not"):
            if len(getattr(self, name)) != n:
                raise ConfigError(f"{name} has length {len(getattr(self, name))}, expected {n}")

    @property
    def n(self) -> int:
        return len(self.states)

    def copy(self) -> "Population":
        return Population(
            self.states.copy(), self.strategies.copy(),
            self.values_have.copy(), self.values_not.copy(),
        )


def cost_cdf(c, p: ModelParams):
    """Probability that a tree's cost falls below ``c`` (uniform costs).

    Linear between c_min and c_max, saturating at 0 and 1 outside. Strategies
    above c_max therefore accept every tree; below c_min, none.
    Accepts scalars or arrays.
    """
    width = p.c_max - p.c_min
    return np.clip((np.asarray(c, dtype=float) - p.c_min) / width, 0.0, 1.0)[()]


def cost_quantile(g, p: ModelParams):
    """Inverse of cost_cdf on [c_min, c_max]: the cost whose CDF equals ``g``."""
    g = np.asarray(g, dtype=float)
    if np.any(g < 0.0) or np.any(g > 1.0):
        raise ConfigError("quantile argument must lie in [0, 1]")
    return (p.c_min + g * (p.c_max - p.c_min))[()]


def climb_integral(c, p: ModelParams):
    """Expected surplus of accepting trees up to threshold c: integral of (c - x) dG(x).

    For uniform costs this is 0 below c_min, (c - c_min)^2 / (2 (c_max - c_min))
    inside the support, and c - (c_min + c_max)/2 above it. Nonnegative, convex,
    with derivative cost_cdf(c). Accepts scalars or arrays.
    """
    c = np.asarray(c, dtype=float)
    width = p.c_max - p.c_min
    inside = (np.clip(c, p.c_min, p.c_max) - p.c_min) ** 2 / (2.0 * width)
    above = np.where(c > p.c_max, c - p.c_max, 0.0)
    return (inside + above)[()]


def epsilon(pop: Population) -> float:
    """Fraction of agents currently holding a coconut."""
    return float(np.sum(pop.states)) / pop.n


def init_population(p: ModelParams, eps0: float, strategies: np.ndarray,
                    v1_0: float, v0_0: float, rng: np.random.Generator) -> Population:
    """Draw a population with each agent holding a coconut with probability eps0.

    Values are set uniformly to (v1_0, v0_0); strategies are taken as given.
    """
    if not 0.0 <= eps0 <= 1.0:
        raise ConfigError(f"eps0 must be in [0, 1], got {eps0}")
    strategies = np.asarray(strategies, dtype=float)
    if strategies.shape != (p.n_agents,):
        raise ConfigError(
            f"strategies has shape {strategies.shape}, expected ({p.n_agents},)")
    states = (rng.random(p.n_agents) < eps0).astype(np.int8)
    n = p.n_agents
    return Population(
        states=states,
        strategies=strategies.copy(),
        values_have=np.full(n, float(v1_0)),
        values_not=np.full(n, float(v0_0)),
    )


def rng_stream(master_seed: int, experiment_id: str, replicate: int = 0) -> np.random.Generator:
    """Independent PCG64 stream derived purely from (master_seed, experiment_id, replicate).

    The experiment id is hashed with SHA-256 so any two distinct ids yield
    unrelated streams; identical arguments always reproduce the identical
    bit stream, which is what makes whole experiments byte-reproducible.
    """
    digest = hashlib.sha256(experiment_id.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
    seq = np.random.SeedSequence([int(master_seed), *words, int(replicate)])
    return np.random.default_rng(seq)
