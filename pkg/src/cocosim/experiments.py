"""Experiment presets and the result pipeline.

Each preset reproduces one of the standard figures: simulated series next to
their theoretical counterparts, written as RFC-4180 CSV files plus a manifest
carrying the config hash, seed, library versions, and timings. Identical
configurations produce byte-identical CSVs; plots are rendered from the CSVs
afterwards and can always be regenerated without re-simulating.

The heavy sweeps fan out over a process pool; every task derives its RNG
stream from (master_seed, experiment id, replicate), so the schedule never
affects the numbers.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from cocosim import __version__
from cocosim._parallel import pmap
from cocosim.abm import TRANSITION_NAMES, SimConfig, UpdateScheme, run, stationary_mean
from cocosim.chain import IM_CHAIN, build_chain, stationary
from cocosim.config import ExperimentSpec
from cocosim.core import (
    ConfigError,
    ModelParams,
    NumericsError,
    cost_cdf,
    cost_quantile,
    rng_stream,
)
from cocosim.dynamics import (
    adjusted_eps,
    bifurcation_gamma,
    corrected_eps,
    epsilon_fixpoint,
    integrate,
    moment_hierarchy,
    original_2d,
    solve_equilibria,
    strategy_nullcline,
    value_3d,
)
from cocosim.hetero import (
    StrategyScenario,
    estimate_sigma_bar,
    sample_strategies,
    scenario_moments,
)
from cocosim.learn import LearnConfig, phase_diagram, run_learning

Table = tuple[list[str], list[list]]


@dataclass
class ResultBundle:
    """Everything one experiment produced."""

    spec: ExperimentSpec
    csv_paths: dict[str, Path]
    plot_paths: list[Path] = field(default_factory=list)
    manifest_path: Path | None = None
    manifest: dict = field(default_factory=dict)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if np.isnan(v) else repr(v)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(path: Path, table: Table) -> None:
    columns, rows = table
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _gamma_params(p: ModelParams, gamma: float) -> ModelParams:
    d = p.to_dict()
    d["gamma"] = float(gamma)
    return ModelParams(**d)


def _finalize(spec: ExperimentSpec, tables: dict[str, Table], t_start: float,
              plots: bool, kind: str | None = None) -> ResultBundle:
    out = spec.output_dir
    out.mkdir(parents=True, exist_ok=True)
    csv_paths = {}
    for name, table in tables.items():
        path = out / f"{name}.csv"
        write_csv(path, table)
        csv_paths[name] = path
    plot_paths = []
    if plots:
        from cocosim.plots import render
        plot_paths = render(kind or spec.id, csv_paths, out)
    bundle = ResultBundle(spec, csv_paths, plot_paths)
    bundle.manifest = {
        "experiment": kind or spec.id,
        "config_hash": spec.config_hash(),
        "master_seed": spec.params.master_seed,
        "versions": {
            "cocosim": __version__,
            "numpy": np.__version__,
            "python": ".".join(map(str, __import__("sys").version_info[:3])),
        },
        "wall_time_s": round(time.time() - t_start, 3),
        "csv_files": {k: str(v) for k, v in csv_paths.items()},
        "plot_files": [str(v) for v in plot_paths],
    }
    bundle.manifest_path = out / "manifest.json"
    with open(bundle.manifest_path, "w") as fh:
        json.dump(bundle.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return bundle


# ---------------------------------------------------------------- fig 1

def _fig1_task(args):
    p, variant, cfg, c, exp_id = args
    mean, se = stationary_mean(p, UpdateScheme(variant), cfg,
                               np.full(p.n_agents, c), experiment_id=exp_id)
    return c, variant, mean, se


def _build_fig1(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    p = spec.params
    c_grid = [round(float(c), 10) for c in
              ov.get("c_grid", np.arange(0.30, 0.5001, 0.01))]
    cfg = SimConfig(total_steps=ov.get("total_steps", 14_000),
                    burn_in_steps=ov.get("burn_in_steps", 4_000),
                    eps0=0.0, replicates=ov.get("replicates", 10))
    tasks = [(p, variant, cfg, c, f"{spec.id}/c={c}")
             for c in c_grid for variant in ("IM", "AM1", "AM2")]
    results = pmap(_fig1_task, tasks, workers)
    means = {(c, v): m for c, v, m, _ in results}
    rows = []
    for c in c_grid:
        rows.append([
            c,
            means[(c, "IM")], means[(c, "AM1")], means[(c, "AM2")],
            epsilon_fixpoint(c, p, "original"),
            epsilon_fixpoint(c, p, "adjusted"),
        ])
    cols = ["c", "mean_eps_IM", "mean_eps_AM1", "mean_eps_AM2",
            "eps_star_original", "eps_star_adjusted"]
    return {"fig1_fixed_points": (cols, rows)}


# ---------------------------------------------------------------- fig 2

def _fig2_task(args):
    p, cfg, c, exp_id, rep = args
    traj = run(p, UpdateScheme("IM"), cfg, np.full(p.n_agents, c),
               rng_stream(p.master_seed, exp_id, rep))
    counts = np.rint(traj.epsilon[cfg.burn_in_steps:] * p.n_agents).astype(int)
    return np.bincount(counts, minlength=p.n_agents + 1)


def _build_fig2(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    p = spec.params
    c = ov.get("c", 0.4)
    replicates = ov.get("replicates", 10)
    cfg = SimConfig(total_steps=ov.get("total_steps", 104_000),
                    burn_in_steps=ov.get("burn_in_steps", 4_000), eps0=0.0)
    tasks = [(p, cfg, c, spec.id, r) for r in range(replicates)]
    counts = sum(pmap(_fig2_task, tasks, workers))
    freq = counts / counts.sum()
    pi = stationary(build_chain(p, c, IM_CHAIN)).probabilities
    rows = [[e, freq[e], pi[e]] for e in range(p.n_agents + 1)]
    tables = {"fig2_distribution": (
        ["e", "empirical_frequency", "stationary_probability"], rows)}
    if ov.get("export_matrix", False):
        mat = build_chain(p, c, IM_CHAIN).entries
        tables["fig2_matrix"] = (
            ["e"] + [str(k) for k in range(p.n_agents + 1)],
            [[e] + list(mat[e]) for e in range(p.n_agents + 1)])
    return tables


# ---------------------------------------------------------------- figs 3-4

_SCENARIOS_FIG3 = (StrategyScenario("uniform"),
                   StrategyScenario("two_point", c_a=0.35, c_b=0.45))
_SCENARIOS_FIG4 = (StrategyScenario("linear_decreasing"),
                   StrategyScenario("gamma_dist"))


def _hetero_task(args):
    p, scenario, cfg, exp_id, rep = args
    est = estimate_sigma_bar(p, scenario, UpdateScheme("IM"), cfg,
                             rng_stream(p.master_seed, exp_id, rep))
    counts = np.rint(est.trajectory.epsilon[cfg.burn_in_steps:] * p.n_agents)
    hist = np.bincount(counts.astype(int), minlength=p.n_agents + 1)
    return est.sigma_bar, est.g_mean, est.mean_eps, hist


def hetero_correction_summary(p: ModelParams, scenario: StrategyScenario,
                              cfg: SimConfig, replicates: int, exp_id: str,
                              workers=None):
    """Pooled sigma estimate, simulated mean, and both fixed-point predictions."""
    tasks = [(p, scenario, cfg, exp_id, r) for r in range(replicates)]
    results = pmap(_hetero_task, tasks, workers)
    sigma_bar = float(np.mean([r[0] for r in results]))
    g_mean = float(np.mean([r[1] for r in results]))
    eps_sim = float(np.mean([r[2] for r in results]))
    hist = sum(r[3] for r in results)
    c_eq = float(cost_quantile(g_mean, p))
    return {
        "scenario": scenario.kind,
        "g_mean": g_mean,
        "sigma_bar": sigma_bar,
        "eps_sim_mean": eps_sim,
        "eps_star_corrected": epsilon_fixpoint(c_eq, p, "corrected", sigma_bar=sigma_bar),
        "eps_star_uncorrected": epsilon_fixpoint(c_eq, p, "adjusted"),
        "c_equivalent": c_eq,
        "histogram": hist / hist.sum(),
    }


def _build_fig34(spec: ExperimentSpec, workers, scenarios) -> dict[str, Table]:
    ov = spec.overrides
    p = spec.params
    cfg = SimConfig(total_steps=ov.get("total_steps", 14_000),
                    burn_in_steps=ov.get("burn_in_steps", 4_000), eps0=0.0)
    replicates = ov.get("replicates", 10)
    tables: dict[str, Table] = {}
    summary_rows = []
    for scenario in scenarios:
        s = hetero_correction_summary(p, scenario, cfg, replicates,
                                      f"{spec.id}/{scenario.kind}", workers)
        pi_unc = stationary(build_chain(p, s["c_equivalent"], IM_CHAIN)).probabilities
        pi_cor = stationary(build_chain(p, s["c_equivalent"], IM_CHAIN,
                                        sigma_bar=s["sigma_bar"])).probabilities
        rows = [[e, s["histogram"][e], pi_unc[e], pi_cor[e]]
                for e in range(p.n_agents + 1)]
        tables[f"{spec.id}_{scenario.kind}_distribution"] = (
            ["e", "empirical_frequency", "pi_uncorrected", "pi_corrected"], rows)
        summary_rows.append([s["scenario"], s["g_mean"], s["sigma_bar"],
                             s["eps_sim_mean"], s["eps_star_corrected"],
                             s["eps_star_uncorrected"]])
    tables[f"{spec.id}_summary"] = (
        ["scenario", "g_mean", "sigma_bar", "eps_sim_mean",
         "eps_star_corrected", "eps_star_uncorrected"], summary_rows)
    return tables


# ---------------------------------------------------------------- fig 5

def _fig5_task(args):
    p, cfg, exp_id = args
    traj = run_learning(p, cfg, rng_stream(p.master_seed, exp_id))
    return float(traj.mean_c[-1])


def _build_fig5(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    gammas = [float(g) for g in ov.get("gammas", (0.1, 0.2, 0.3))]
    grid = [round(float(v), 10) for v in
            ov.get("eps_fix_grid", np.arange(0.0, 1.0001, 0.05))]
    steps = ov.get("total_steps", 200_000)
    alpha = ov.get("alpha", spec.params.alpha)
    tasks = []
    for gamma in gammas:
        p = _gamma_params(spec.params, gamma)
        for eps_fix in grid:
            cfg = LearnConfig(alpha=alpha, gamma=gamma, eps_fix=eps_fix,
                              total_steps=steps)
            tasks.append((p, cfg, f"{spec.id}/gamma={gamma}/eps_fix={eps_fix}"))
    finals = pmap(_fig5_task, tasks, workers)
    rows = []
    k = 0
    for gamma in gammas:
        p = _gamma_params(spec.params, gamma)
        for eps_fix in grid:
            rows.append([gamma, eps_fix, finals[k],
                         strategy_nullcline(eps_fix, p)])
            k += 1
    return {"fig5_nullcline_probe": (
        ["gamma", "eps_fix", "mean_c_final", "c_nullcline"], rows)}


# ---------------------------------------------------------------- fig 6

def _fig6_task(args):
    p, cfg, exp_id = args
    traj = run_learning(p, cfg, rng_stream(p.master_seed, exp_id))
    return float(traj.epsilon[-1]), float(traj.mean_c[-1])


def _build_fig6(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    gammas = [round(float(g), 10) for g in
              ov.get("gammas", np.arange(0.02, 0.5001, 0.02))]
    steps = ov.get("total_steps", 200_000)
    alpha = ov.get("alpha", spec.params.alpha)
    tasks = [(_gamma_params(spec.params, g),
              LearnConfig(alpha=alpha, gamma=g, total_steps=steps),
              f"{spec.id}/gamma={g}") for g in gammas]
    finals = pmap(_fig6_task, tasks, workers)
    rows = []
    for gamma, (eps_f, c_f) in zip(gammas, finals):
        eqs = solve_equilibria(_gamma_params(spec.params, gamma))
        interior = [e for e in eqs if e.branch != "collapse"]
        low = interior[0] if interior else None
        up = interior[-1] if len(interior) > 1 else None
        rows.append([
            gamma, eps_f, c_f,
            low.eps_star if low else None, low.c_star if low else None,
            up.eps_star if up else None, up.c_star if up else None,
        ])
    return {"fig6_equilibrium_selection": (
        ["gamma", "eps_final", "c_final", "eps_lower", "c_lower",
         "eps_upper", "c_upper"], rows)}


# ---------------------------------------------------------------- figs 7-8

def _learning_curve_task(args):
    p, cfg, exp_id, rep, record_every = args
    traj = run_learning(p, cfg, rng_stream(p.master_seed, exp_id, rep))
    return traj.mean_c[record_every - 1::record_every]


def _build_fig7(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    p = spec.params
    deltas = [float(d) for d in ov.get("deltas",
                                       (-0.001, 0.0, 0.001, 0.002, 0.005, 0.01))]
    steps = ov.get("total_steps", 200_000)
    replicates = ov.get("replicates", 5)
    alpha = ov.get("alpha", 0.025)
    noise = ov.get("exploration_amplitude", 0.0)
    every = ov.get("record_every", 200)
    low = solve_equilibria(p)[0]
    tasks = []
    for d in deltas:
        cfg = LearnConfig(alpha=alpha, gamma=p.gamma, exploration_amplitude=noise,
                          eps0=low.eps_star, v1_init=low.v1_star + d,
                          v0_init=low.v0_star, total_steps=steps)
        for rep in range(replicates):
            tasks.append((p, cfg, f"{spec.id}/delta={d}", rep, every))
    curves = pmap(_learning_curve_task, tasks, workers)
    n_rec = len(curves[0])
    cols = ["step"] + [f"mean_c_delta_{d:+g}" for d in deltas]
    rows = []
    for k in range(n_rec):
        row = [(k + 1) * every]
        for di in range(len(deltas)):
            vals = [curves[di * replicates + r][k] for r in range(replicates)]
            row.append(float(np.mean(vals)))
        rows.append(row)
    return {"fig7_low_start_curves": (cols, rows)}


def _build_fig8(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    sizes = [int(n) for n in ov.get("n_agents_list", (50, 100, 200))]
    replicates = ov.get("replicates", 5)
    alpha = ov.get("alpha", 0.025)
    noise = ov.get("exploration_amplitude", 0.0015)
    low = solve_equilibria(spec.params)[0]
    tau_max = 2000
    tasks = []
    for n in sizes:
        d = spec.params.to_dict()
        d["n_agents"] = n
        p = ModelParams(**d)
        cfg = LearnConfig(alpha=alpha, gamma=p.gamma, exploration_amplitude=noise,
                          eps0=low.eps_star, v1_init=low.v1_star,
                          v0_init=low.v0_star, total_steps=tau_max * n)
        for rep in range(replicates):
            # record every N steps: one sample per rescaled time unit
            tasks.append((p, cfg, f"{spec.id}/N={n}", rep, n))
    curves = pmap(_learning_curve_task, tasks, workers)
    cols = ["tau"] + [f"mean_c_N{n}" for n in sizes]
    rows = []
    for k in range(tau_max):
        row = [k + 1]
        for ni in range(len(sizes)):
            vals = [curves[ni * replicates + r][k] for r in range(replicates)]
            row.append(float(np.mean(vals)))
        rows.append(row)
    return {"fig8_rescaled_curves": (cols, rows)}


# ---------------------------------------------------------------- figs 9-10

def _phase_table(p: ModelParams, cfg: LearnConfig, ov: dict, exp_id: str,
                 workers, eps0_default, c0_default) -> Table:
    cells = phase_diagram(
        p, cfg,
        eps0_grid=ov.get("eps0_grid", eps0_default),
        c0_grid=ov.get("c0_grid", c0_default),
        runs=ov.get("runs", 10), steps=ov.get("steps", 10_000),
        workers=workers, experiment_id=exp_id)
    rows = [[c.eps0, c.c0, c.eps_final_mean, c.c_final_mean, c.n_runs]
            for c in cells]
    return (["eps0", "c0", "eps_final_mean", "c_final_mean", "n_runs"], rows)


def _build_fig9(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    gammas = [float(g) for g in ov.get("gammas", (0.1, 0.2))]
    tables = {}
    for gamma in gammas:
        p = _gamma_params(spec.params, gamma)
        cfg = LearnConfig(alpha=ov.get("alpha", p.alpha), gamma=gamma)
        name = f"fig9_phase_gamma{gamma:g}".replace(".", "p")
        tables[name] = _phase_table(
            p, cfg, ov, f"{spec.id}/gamma={gamma}", workers,
            np.linspace(0.0, 1.0, 26), np.linspace(p.c_min, p.c_max, 26))
    return tables


def _build_fig10(spec: ExperimentSpec, workers) -> dict[str, Table]:
    ov = spec.overrides
    p = _gamma_params(spec.params, 0.2)
    cfg = LearnConfig(alpha=ov.get("alpha", p.alpha), gamma=0.2)
    return {"fig10_saddle_closeup": _phase_table(
        p, cfg, ov, f"{spec.id}/gamma=0.2", workers,
        np.linspace(0.0, 0.2, 11), np.linspace(0.30, 0.333, 12))}


# ---------------------------------------------------------------- custom

def _scenario_from(ov: dict) -> StrategyScenario:
    scen = ov.get("scenario", {"kind": "homogeneous", "c": 0.4})
    return StrategyScenario(scen["kind"], c=scen.get("c"),
                            c_a=scen.get("c_a"), c_b=scen.get("c_b"))


def _build_custom(spec: ExperimentSpec, workers) -> dict[str, Table]:
    """Fixed-strategy simulation driven entirely by overrides."""
    ov = spec.overrides
    p = spec.params
    cfg = SimConfig(total_steps=ov.get("total_steps", 14_000),
                    burn_in_steps=ov.get("burn_in_steps", 4_000),
                    eps0=ov.get("eps0", 0.0),
                    replicates=ov.get("replicates", 1))
    scenario = _scenario_from(ov)
    scheme = UpdateScheme(ov.get("scheme", "IM"),
                          ov.get("self_trade_mode", "exclude_self"))
    strategies = sample_strategies(
        scenario, p.n_agents, p, rng_stream(p.master_seed, "custom/strategies"))
    traj = run(p, scheme, cfg, strategies,
               rng_stream(p.master_seed, "custom/run", 0))
    rows = [[t, traj.epsilon[t], traj.mean_strategy[t],
             TRANSITION_NAMES[int(traj.event_types[t])], traj.rewards[t]]
            for t in range(len(traj))]
    mean = float(traj.epsilon[cfg.burn_in_steps:].mean())
    return {
        "trajectory": (["step", "epsilon", "mean_strategy", "event_type", "reward"],
                       rows),
        "summary": (["scheme", "scenario", "mean_eps_stationary"],
                    [[scheme.variant, scenario.kind, mean]]),
    }


# ------------------------------------------------- command-style experiments

def chain_experiment(spec: ExperimentSpec, plots: bool = True) -> ResultBundle:
    """Stationary distribution (and optionally the matrix) of one chain."""
    t0 = time.time()
    ov = spec.overrides
    p = spec.params
    variant = ov.get("chain_variant", IM_CHAIN)
    c = ov.get("c", 0.4)
    sigma_bar = ov.get("sigma_bar")
    m = build_chain(p, c, variant, sigma_bar=sigma_bar)
    pi = stationary(m).probabilities
    tables = {"stationary": (["e", "probability"],
                             [[e, pi[e]] for e in range(p.n_agents + 1)])}
    if ov.get("export_matrix", False):
        tables["matrix"] = (["e"] + [str(k) for k in range(p.n_agents + 1)],
                            [[e] + list(m.entries[e]) for e in range(p.n_agents + 1)])
    return _finalize(spec, tables, t0, plots, kind="chain")


def ode_experiment(spec: ExperimentSpec, plots: bool = True) -> ResultBundle:
    """Integrate one deterministic description and dump the series."""
    t0 = time.time()
    ov = spec.overrides
    p = spec.params
    variant = ov.get("variant", "adjusted_eps")
    c = ov.get("c", 0.4)
    if variant == "original_2d":
        sys1, names = original_2d(p), ["eps", "c"]
        init = ov.get("init", [0.0, p.y])
    elif variant == "adjusted_eps":
        sys1, names = adjusted_eps(p, c), ["eps"]
        init = ov.get("init", [0.0])
    elif variant == "corrected_eps":
        sys1 = corrected_eps(p, float(cost_cdf(c, p)), ov.get("sigma_bar", 0.0))
        names = ["eps"]
        init = ov.get("init", [0.0])
    elif variant == "value_3d":
        sys1, names = value_3d(p), ["eps", "v1", "v0"]
        init = ov.get("init", [0.5, p.y, 0.0])
    elif variant == "moment_hierarchy":
        k = ov.get("k_moments", 3)
        moments = scenario_moments(_scenario_from(ov), k + 1, p)
        sys1 = moment_hierarchy(p, moments)
        names = ["eps"] + [f"sigma_{j}" for j in range(1, k + 1)]
        init = ov.get("init", [0.0] * (k + 1))
    else:
        raise ConfigError(f"unknown ode variant {variant!r}")
    res = integrate(sys1, init, ov.get("t_end", 100.0), ov.get("dt", 1e-3))
    rows = [[res.t[k], *res.y[k]] for k in range(len(res.t))]
    return _finalize(spec, {"ode_series": (["t", *names], rows)}, t0, plots,
                     kind="ode")


def equilibria_experiment(spec: ExperimentSpec, plots: bool = True) -> ResultBundle:
    """Equilibrium branches over a discount-rate sweep, plus the fold point."""
    t0 = time.time()
    ov = spec.overrides
    gammas = [round(float(g), 10) for g in
              ov.get("gammas", np.arange(0.02, 0.5001, 0.02))]
    rows = []
    for gamma in gammas:
        for eq in solve_equilibria(_gamma_params(spec.params, gamma)):
            rows.append([gamma, eq.c_star, eq.eps_star, eq.branch])
    tables = {"equilibria": (["gamma", "c", "eps", "branch"], rows)}
    try:
        gstar = bifurcation_gamma(_gamma_params(spec.params, 0.1))
        tables["bifurcation"] = (["gamma_star"], [[gstar]])
    except NumericsError:
        tables["bifurcation"] = (["gamma_star"], [[None]])
    return _finalize(spec, tables, t0, plots, kind="equilibria")


def hetero_experiment(spec: ExperimentSpec, workers: int | None = None,
                      plots: bool = True) -> ResultBundle:
    """Covariance estimate and corrected predictions for one scenario."""
    t0 = time.time()
    ov = spec.overrides
    p = spec.params
    cfg = SimConfig(total_steps=ov.get("total_steps", 14_000),
                    burn_in_steps=ov.get("burn_in_steps", 4_000), eps0=0.0)
    scenario = _scenario_from(ov)
    s = hetero_correction_summary(p, scenario, cfg, ov.get("replicates", 10),
                                  "hetero", workers)
    tables = {
        "hetero_summary": (
            ["scenario", "g_mean", "sigma_bar", "eps_sim_mean",
             "eps_star_corrected", "eps_star_uncorrected"],
            [[s["scenario"], s["g_mean"], s["sigma_bar"], s["eps_sim_mean"],
              s["eps_star_corrected"], s["eps_star_uncorrected"]]]),
    }
    return _finalize(spec, tables, t0, plots, kind="hetero")


def learn_experiment(spec: ExperimentSpec, plots: bool = True) -> ResultBundle:
    """One learning run, recorded every record_every steps."""
    t0 = time.time()
    ov = spec.overrides
    p = spec.params
    cfg = LearnConfig(
        alpha=ov.get("alpha", p.alpha), gamma=p.gamma,
        exploration_amplitude=ov.get("exploration_amplitude", 0.0),
        eps_fix=ov.get("eps_fix"), v1_init=ov.get("v1_init"),
        v0_init=ov.get("v0_init", 0.0), eps0=ov.get("eps0", 0.5),
        total_steps=ov.get("total_steps", 200_000))
    traj = run_learning(p, cfg, rng_stream(p.master_seed, "learn", 0))
    every = ov.get("record_every", 100)
    rows = [[t, traj.epsilon[t], traj.mean_c[t], traj.mean_v1[t], traj.mean_v0[t]]
            for t in range(every - 1, len(traj), every)]
    return _finalize(spec, {"learning": (
        ["step", "epsilon", "mean_c", "mean_v1", "mean_v0"], rows)}, t0, plots,
        kind="learn")


def phase_experiment(spec: ExperimentSpec, workers: int | None = None,
                     plots: bool = True) -> ResultBundle:
    """Phase-diagram sweep at the configured discount rate."""
    t0 = time.time()
    ov = spec.overrides
    p = spec.params
    cfg = LearnConfig(alpha=ov.get("alpha", p.alpha), gamma=p.gamma)
    table = _phase_table(p, cfg, ov, "phase", workers,
                         np.linspace(0.0, 1.0, 26),
                         np.linspace(p.c_min, p.c_max, 26))
    return _finalize(spec, {"phase": table}, t0, plots, kind="phase")


_BUILDERS = {
    "fig1": _build_fig1,
    "fig2": _build_fig2,
    "fig3": lambda spec, w: _build_fig34(spec, w, _SCENARIOS_FIG3),
    "fig4": lambda spec, w: _build_fig34(spec, w, _SCENARIOS_FIG4),
    "fig5": _build_fig5,
    "fig6": _build_fig6,
    "fig7": _build_fig7,
    "fig8": _build_fig8,
    "fig9": _build_fig9,
    "fig10": _build_fig10,
    "custom": _build_custom,
}


def run_experiment(spec: ExperimentSpec, workers: int | None = None,
                   plots: bool = True) -> ResultBundle:
    """Execute a preset and write its CSVs, plots, and manifest."""
    if spec.id not in _BUILDERS:
        raise ConfigError(f"unknown experiment id {spec.id!r}")
    t0 = time.time()
    tables = _BUILDERS[spec.id](spec, workers)
    return _finalize(spec, tables, t0, plots)
