"""SVG rendering of experiment CSVs.

Plots are derived purely from the CSV files, so they can be regenerated at
any time without re-simulating. Everything is static line/scatter/quiver
output; no interactive display.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read_csv_columns(path: Path) -> dict[str, list]:
    """Columns of a result CSV, numeric where possible, None for blanks."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, raw in zip(header, row):
                if raw == "":
                    cols[name].append(None)
                else:
                    try:
                        cols[name].append(float(raw))
                    except ValueError:
                        cols[name].append(raw)
    return cols


def _save(fig, out: Path) -> Path:
    fig.savefig(out, format="svg")
    plt.close(fig)
    return out


def _plot_series(path: Path, x: str, out: Path, points=(), lines=(),
                 xlabel=None, ylabel=None) -> Path:
    cols = read_csv_columns(path)
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in lines:
        pairs = [(a, b) for a, b in zip(cols[x], cols[name]) if b is not None]
        if pairs:
            ax.plot([a for a, _ in pairs], [b for _, b in pairs], label=name)
    for name in points:
        pairs = [(a, b) for a, b in zip(cols[x], cols[name]) if b is not None]
        if pairs:
            ax.plot([a for a, _ in pairs], [b for _, b in pairs], "*",
                    label=name)
    ax.set_xlabel(xlabel or x)
    if ylabel:
        ax.set_ylabel(ylabel)
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out)


def _plot_quiver(path: Path, out: Path) -> Path:
    cols = read_csv_columns(path)
    fig, ax = plt.subplots(figsize=(5.5, 5))
    x, y = cols["eps0"], cols["c0"]
    u = [a - b for a, b in zip(cols["eps_final_mean"], x)]
    v = [a - b for a, b in zip(cols["c_final_mean"], y)]
    ax.quiver(x, y, u, v, angles="xy", scale_units="xy", scale=1.0, width=0.003)
    ax.set_xlabel("initial coconut level")
    ax.set_ylabel("initial strategy")
    fig.tight_layout()
    return _save(fig, out)


def render(kind: str, csv_paths: dict[str, Path], out_dir: Path) -> list[Path]:
    """Render the standard plots for an experiment's CSV set."""
    made: list[Path] = []
    for name, path in csv_paths.items():
        out = out_dir / f"{name}.svg"
        cols = read_csv_columns(path)
        header = list(cols)
        try:
            if name.endswith("_distribution") or name == "stationary":
                made.append(_plot_series(
                    path, "e", out,
                    points=[c for c in header if c.startswith("empirical")],
                    lines=[c for c in header if c.startswith(("pi_", "stationary",
                                                              "probability"))],
                    ylabel="probability"))
            elif name == "fig1_fixed_points":
                made.append(_plot_series(
                    path, "c", out,
                    points=["mean_eps_IM", "mean_eps_AM1", "mean_eps_AM2"],
                    lines=["eps_star_original", "eps_star_adjusted"],
                    ylabel="stationary coconut level"))
            elif name == "fig5_nullcline_probe":
                made.append(_plot_series(
                    path, "eps_fix", out, points=["mean_c_final"],
                    lines=["c_nullcline"], ylabel="strategy"))
            elif name == "fig6_equilibrium_selection":
                made.append(_plot_series(
                    path, "gamma", out, points=["c_final"],
                    lines=["c_lower", "c_upper"], ylabel="strategy"))
            elif name.startswith(("fig9_phase", "fig10_", "phase")):
                made.append(_plot_quiver(path, out))
            elif name in ("fig7_low_start_curves",):
                made.append(_plot_series(
                    path, "step", out,
                    lines=[c for c in header if c != "step"],
                    ylabel="mean strategy"))
            elif name == "fig8_rescaled_curves":
                made.append(_plot_series(
                    path, "tau", out,
                    lines=[c for c in header if c != "tau"],
                    ylabel="mean strategy"))
            elif name == "learning":
                made.append(_plot_series(
                    path, "step", out,
                    lines=["epsilon", "mean_c", "mean_v1", "mean_v0"]))
            elif name == "ode_series":
                made.append(_plot_series(
                    path, "t", out, lines=[c for c in header if c != "t"]))
            elif name == "equilibria":
                made.append(_plot_series(
                    path, "gamma", out, points=["c"], ylabel="strategy"))
            elif name == "trajectory":
                made.append(_plot_series(path, "step", out, lines=["epsilon"]))
        except (KeyError, ValueError):
            continue
    return made
