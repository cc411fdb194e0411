"""Exact finite-population Markov chain over coconut counts.

For homogeneous strategies the count of coconuts is itself Markov; the chain
gives the stationary statistics of the agent model without simulation. Two
variants exist: the IM chain (one harvest up, pair trades take two coconuts
out) and the AM2 chain (at most one coconut cleared per step). Both exclude
self-trading, hence the e(e-1)/(N(N-1)) down rate; the mean-field eps^2 term
of the differential description differs from it noticeably at N=100.

A time-averaged covariance correction can be subtracted from the up rate to
account for heterogeneous strategies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from cocosim.core import ConfigError, ModelParams, NumericsError, cost_cdf

IM_CHAIN, AM2_CHAIN = "IM_chain", "AM2_chain"

_ROW_SUM_TOL = 1e-12
_STATIONARY_TOL = 1e-9
_DIRECT_SOLVE_MAX_N = 2000


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix over coconut counts 0..N."""

    entries: np.ndarray
    variant: str
    sigma_bar: Optional[float] = None
    clamped_rows: int = 0          # up rates clamped to zero by the correction

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def to_csv(self, path) -> None:
        """Dense matrix dump for audit: row e, then P(0|e) .. P(N|e)."""
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["e"] + [str(k) for k in range(self.size)])
            for e in range(self.size):
                w.writerow([e] + [repr(float(v)) for v in self.entries[e]])


@dataclass(frozen=True)
class StationaryDistribution:
    probabilities: np.ndarray

    @property
    def mode_state(self) -> int:
        return int(np.argmax(self.probabilities))

    def mean(self) -> float:
        return float(np.dot(np.arange(len(self.probabilities)), self.probabilities))

    def to_csv(self, path) -> None:
        import csv
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["e", "probability"])
            for e, prob in enumerate(self.probabilities):
                w.writerow([e, repr(float(prob))])


def build_chain(p: ModelParams, c: float, variant: str = IM_CHAIN,
                sigma_bar: Optional[float] = None) -> TransitionMatrix:
    """Transition matrix for homogeneous strategy c, optionally corrected.

    Up rate f (N-e)/N G(c), minus f sigma_bar when a covariance correction is
    supplied; corrected rates that would turn negative are clamped to zero and
    counted. Down rate e(e-1)/(N(N-1)) moves two states for the IM chain and
    one state for the AM2 chain.
    """
    if variant not in (IM_CHAIN, AM2_CHAIN):
        raise ConfigError(f"unknown chain variant {variant!r}")
    if not np.isfinite(c):
        raise ConfigError(f"strategy must be finite, got {c}")
    n = p.n_agents
    g = float(cost_cdf(c, p))
    e = np.arange(n + 1, dtype=float)
    up = p.f * (n - e) / n * g
    if sigma_bar is not None:
        up -= p.f * float(sigma_bar)
    clamped = int(np.sum(up < 0.0))
    up = np.clip(up, 0.0, None)
    if np.any(up > 1.0):
        raise NumericsError("up rate above 1; parameters are inconsistent")
    down = e * (e - 1.0) / (n * (n - 1.0))

    mat = np.zeros((n + 1, n + 1))
    idx = np.arange(n + 1)
    mat[idx[:-1], idx[:-1] + 1] = up[:-1]
    if variant == IM_CHAIN:
        mat[idx[2:], idx[2:] - 2] = down[2:]
    else:
        mat[idx[2:], idx[2:] - 1] = down[2:]
    mat[idx, idx] += 1.0 - mat.sum(axis=1)

    rows = mat.sum(axis=1)
    if np.max(np.abs(rows - 1.0)) > _ROW_SUM_TOL or np.any(mat < -_ROW_SUM_TOL):
        raise AssertionError("transition rows failed stochasticity check")
    return TransitionMatrix(entries=mat, variant=variant,
                            sigma_bar=None if sigma_bar is None else float(sigma_bar),
                            clamped_rows=clamped)


def stationary(m: TransitionMatrix) -> StationaryDistribution:
    """Stationary distribution: the left unit eigenvector, normalized.

    Solved directly via (P^T - I) pi = 0 with a normalization row for modest
    sizes, by power iteration beyond. When the up rates all vanish (no
    climbing possible) the count drains and the chain has several absorbing
    structures; by convention the point mass on e=0 is returned.
    """
    mat = m.entries
    n1 = mat.shape[0]
    above = np.diag(mat, 1)
    if np.all(above == 0.0):
        pi = np.zeros(n1)
        pi[0] = 1.0
        return StationaryDistribution(pi)

    if n1 <= _DIRECT_SOLVE_MAX_N + 1:
        a = mat.T - np.eye(n1)
        a[-1, :] = 1.0
        b = np.zeros(n1)
        b[-1] = 1.0
        pi = np.linalg.solve(a, b)
    else:
        pi = np.full(n1, 1.0 / n1)
        for _ in range(1_000_000):
            nxt = pi @ mat
            if np.max(np.abs(nxt - pi)) < 1e-12:
                pi = nxt
                break
            pi = nxt
        else:
            raise NumericsError("power iteration did not converge")

    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    if np.any(pi < 0.0):
        raise NumericsError("stationary solve produced negative mass")
    pi /= pi.sum()
    residual = float(np.max(np.abs(pi @ mat - pi)))
    if residual > _STATIONARY_TOL:
        raise NumericsError(f"stationary residual {residual:.3g} above tolerance")
    return StationaryDistribution(pi)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Total-variation distance between two distributions on the same support."""
    return 0.5 * float(np.sum(np.abs(np.asarray(p) - np.asarray(q))))


def occupancy_histogram(epsilon_series: np.ndarray, n: int) -> np.ndarray:
    """Empirical distribution of coconut counts from an epsilon series."""
    counts = np.rint(np.asarray(epsilon_series) * n).astype(int)
    hist = np.bincount(counts, minlength=n + 1).astype(float)
    return hist / hist.sum()
