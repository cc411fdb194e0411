"""Simulation laboratory for the Diamond coconut search-equilibrium model.

Agent-based update schemes with fixed or learned strategies, the exact
finite-population Markov chain, mean-field ODE descriptions with a
heterogeneity correction, and an experiment harness that drives the
standard figures.
"""

from cocosim.core import (
    ConfigError,
    ModelParams,
    NumericsError,
    Population,
    climb_integral,
    cost_cdf,
    cost_quantile,
    epsilon,
    init_population,
    rng_stream,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ModelParams",
    "NumericsError",
    "Population",
    "climb_integral",
    "cost_cdf",
    "cost_quantile",
    "epsilon",
    "init_population",
    "rng_stream",
    "__version__",
]


def __getattr__(name):
    # convenience: surface the main submodule entry points lazily, so that
    # importing the package stays cheap
    import importlib

    lookup = {
        "abm": "cocosim.abm",
        "chain": "cocosim.chain",
        "dynamics": "cocosim.dynamics",
        "hetero": "cocosim.hetero",
        "learn": "cocosim.learn",
        "config": "cocosim.config",
        "experiments": "cocosim.experiments",
        "plots": "cocosim.plots",
    }
    if name in lookup:
        return importlib.import_module(lookup[name])
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
