"""Deterministic descriptions of the coconut economy.

ODE right-hand sides (mean-field, pair-adjusted, covariance-corrected, the
three-dimensional value system, and the truncated moment hierarchy), a
fixed-step RK4 integrator with steady-state detection, closed-form coconut
fixed points, the strategy nullcline, equilibrium solving, and bifurcation
detection in the discount rate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from cocosim.core import ModelParams, NumericsError, climb_integral, cost_cdf

# Integrator defaults: fixed step, generous steady-state horizon.
DEFAULT_DT = 1e-3
DEFAULT_T_MAX = 1e3
STEADY_TOL = 1e-10


@dataclass(frozen=True)
class OdeSystem:
    """A named autonomous right-hand side with a fixed state dimension."""

    name: str
    dim: int
    rhs: Callable[[float, np.ndarray], np.ndarray]

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.rhs(t, y)


def original_2d(p: ModelParams) -> OdeSystem:
    """Coupled (eps, c) system: mean-field harvesting with single-coconut
    clearing (-eps^2) and the optimal-strategy evolution."""
    f, y_util = p.f, p.y

    def rhs(t, state):
        eps, c = state
        return np.array([
            f * (1.0 - eps) * cost_cdf(c, p) - eps * eps,
            p.gamma * c + eps * (c - y_util) + f * climb_integral(c, p),
        ])

    return OdeSystem("original_2d", 2, rhs)


def adjusted_eps(p: ModelParams, c: float) -> OdeSystem:
    """One-dimensional coconut dynamics at fixed strategy with the pair-trade
    correction (-2 eps^2): two agents clear per trade but only one can climb."""
    rate = p.f * cost_cdf(c, p)

    def rhs(t, state):
        eps = state[0]
        return np.array([rate * (1.0 - eps) - 2.0 * eps * eps])

    return OdeSystem("adjusted_eps", 1, rhs)


def corrected_eps(p: ModelParams, g_mean: float,
                  sigma: float | Callable[[float], float]) -> OdeSystem:
    """Pair-adjusted coconut dynamics with the heterogeneity correction.

    ``g_mean`` is the population mean climbing probability and ``sigma`` the
    state/climbing-probability covariance, either a constant (time average)
    or an external signal sigma(t). The correction makes this an open system:
    the covariance is computed from micro-level data, not from eps itself.
    """
    sig = sigma if callable(sigma) else (lambda t, s=float(sigma): s)

    def rhs(t, state):
        eps = state[0]
        return np.array([p.f * ((1.0 - eps) * g_mean - sig(t)) - 2.0 * eps * eps])

    return OdeSystem("corrected_eps", 1, rhs)


def value_3d(p: ModelParams) -> OdeSystem:
    """Three-dimensional system (eps, V(1), V(0)) from which the strategy
    equation derives via c = V(1) - V(0). Keeps the -eps^2 trade convention."""
    f, y_util, gamma = p.f, p.y, p.gamma

    def rhs(t, state):
        eps, v1, v0 = state
        c = v1 - v0
        return np.array([
            f * (1.0 - eps) * cost_cdf(c, p) - eps * eps,
            gamma * v1 + eps * (c - y_util),
            gamma * v0 - f * climb_integral(c, p),
        ])

    return OdeSystem("value_3d", 3, rhs)


def moment_rhs(state: np.ndarray, moments: Sequence[float], p: ModelParams,
               sigma_tail: float = 0.0) -> np.ndarray:
    """Right-hand side of the truncated moment hierarchy.

    ``state`` is (eps, sigma_1, ..., sigma_K) where sigma_k is the covariance
    between holding state and the k-th power of the climbing probability;
    ``moments`` supplies <G>, <G^2>, ..., <G^(K+1)>. The hierarchy follows from
    the per-agent holding-probability equation

        dp_i/dt = f (1 - p_i) G_i - 2 eps p_i

    (pair-clearing trade convention, matching the -2 eps^2 aggregate term)
    by differentiating sigma_k = <G^k p> - <G^k> eps:

        d eps    = f (1 - eps) <G> - f s1 - 2 eps^2
        d s_k    = f (1 - eps) (<G^(k+1)> - <G^k><G>) - f s_(k+1)
                   - 2 eps s_k + f <G^k> s1

    closed by setting the first omitted covariance to ``sigma_tail``
    (zero by default, since the covariances decay in k whenever the climbing
    probabilities stay below one). For a degenerate strategy distribution all
    central differences vanish and the eps equation reduces to the
    pair-adjusted dynamics with every sigma_k frozen at zero.
    """
    k_max = len(state) - 1
    if k_max < 1:
        raise NumericsError("hierarchy needs at least one covariance (K >= 1)")
    if len(moments) < k_max + 1:
        raise NumericsError(
            f"need moments up to order {k_max + 1}, got {len(moments)}")
    eps = state[0]
    sig = np.empty(k_max + 1)
    sig[:k_max] = state[1:]
    sig[k_max] = sigma_tail
    m = np.asarray(moments, dtype=float)
    f = p.f
    out = np.empty(k_max + 1)
    out[0] = f * (1.0 - eps) * m[0] - f * sig[0] - 2.0 * eps * eps
    for k in range(1, k_max + 1):
        out[k] = (f * (1.0 - eps) * (m[k] - m[k - 1] * m[0])
                  - f * sig[k] - 2.0 * eps * sig[k - 1] + f * m[k - 1] * sig[0])
    return out


def moment_hierarchy(p: ModelParams, moments: Sequence[float]) -> OdeSystem:
    """Truncated hierarchy as an integrable system; K = len(moments) - 1."""
    m = tuple(float(v) for v in moments)
    k_max = len(m) - 1
    if k_max < 1:
        raise NumericsError("need moments up to order K+1 with K >= 1")

    def rhs(t, state):
        return moment_rhs(state, m, p)

    return OdeSystem(f"moment_hierarchy_{k_max}", k_max + 1, rhs)


@dataclass
class IntegrationResult:
    t: np.ndarray
    y: np.ndarray           # shape (len(t), dim)
    steady: bool            # stopped early at a steady state

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]


def integrate(sys: OdeSystem, init: Sequence[float], t_end: float = DEFAULT_T_MAX,
              dt: float = DEFAULT_DT) -> IntegrationResult:
    """Classical fixed-step RK4 with early stop at steady state.

    Integration halts once the max-norm of the right-hand side drops below
    1e-10; a non-finite state raises NumericsError carrying the last finite
    state reached.
    """
    if dt <= 0:
        raise NumericsError(f"dt must be positive, got {dt}")
    y0 = np.asarray(init, dtype=float)
    if y0.shape != (sys.dim,):
        raise NumericsError(f"init has shape {y0.shape}, {sys.name} needs ({sys.dim},)")
    n_steps = int(round(t_end / dt))
    ts = np.empty(n_steps + 1)
    ys = np.empty((n_steps + 1, sys.dim))
    ts[0], ys[0] = 0.0, y0
    rhs = sys.rhs
    y = y0.copy()
    t = 0.0
    half = dt / 2.0
    sixth = dt / 6.0
    for n in range(1, n_steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + half, y + half * k1)
        k3 = rhs(t + half, y + half * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = n * dt
        if not np.all(np.isfinite(y)):
            raise NumericsError(
                f"integration of {sys.name} diverged at t={t:.6g}; "
                f"last finite state {ys[n - 1]}")
        ts[n], ys[n] = t, y
        if np.max(np.abs(rhs(t, y))) < STEADY_TOL:
            return IntegrationResult(ts[:n + 1], ys[:n + 1], True)
    return IntegrationResult(ts, ys, False)


def epsilon_fixpoint(c: float, p: ModelParams, variant: str = "adjusted",
                     sigma_bar: float = 0.0) -> float:
    """Closed-form stationary coconut level at fixed strategy.

    Variants: "original" (single-coconut clearing, -eps^2), "adjusted"
    (pair clearing, -2 eps^2), "corrected" (pair clearing plus the
    covariance correction sigma_bar). Returns 0 when the climbing
    probability vanishes; raises NumericsError when the corrected
    discriminant turns negative (no real fixed point).
    """
    g = float(cost_cdf(c, p))
    fg = p.f * g
    if fg == 0.0:
        return 0.0
    if variant == "original":
        return fg / 2.0 * (np.sqrt(1.0 + 4.0 / fg) - 1.0)
    if variant == "adjusted":
        return fg / 4.0 * (np.sqrt(1.0 + 8.0 / fg) - 1.0)
    if variant == "corrected":
        # discriminant of 2 eps^2 + fG eps - f[(1-eps)G - sigma] completing to
        # eps = (fG/4)(sqrt(1 + 8/(fG) - 8 sigma/(f G^2)) - 1)
        disc = 1.0 + 8.0 / fg - 8.0 * sigma_bar / (p.f * g * g)
        if disc < 0.0:
            raise NumericsError(
                f"no real corrected fixed point: discriminant {disc:.3g} < 0 "
                f"(fG={fg:.3g}, sigma_bar={sigma_bar:.3g})")
        return fg / 4.0 * (np.sqrt(disc) - 1.0)
    raise NumericsError(f"unknown fixed-point variant {variant!r}")


def _eps_star_original_vec(c: np.ndarray, p: ModelParams) -> np.ndarray:
    fg = p.f * cost_cdf(c, p)
    with np.errstate(divide="ignore"):
        val = fg / 2.0 * (np.sqrt(1.0 + 4.0 / np.where(fg > 0, fg, 1.0)) - 1.0)
    return np.where(fg > 0, val, 0.0)


def nullcline_residual(c, eps: float, p: ModelParams):
    """Residual of the strategy stationarity condition at (eps, c)."""
    return p.gamma * c + eps * (c - p.y) + p.f * climb_integral(c, p)


def strategy_nullcline(eps: float, p: ModelParams, tol: float = 1e-12) -> float:
    """Strategy value where the strategy dynamics vanish at coconut level eps.

    The residual gamma*c + eps*(c - y) + f*I(c) is strictly increasing in c,
    so the root on [0, y] is unique; found by bisection. Raises NumericsError
    if the bracket shows no sign change.
    """
    if not 0.0 <= eps <= 1.0:
        raise NumericsError(f"eps must be in [0, 1], got {eps}")
    lo, hi = 0.0, p.y
    r_lo = float(nullcline_residual(lo, eps, p))
    r_hi = float(nullcline_residual(hi, eps, p))
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if r_lo > 0.0 or r_hi < 0.0:
        raise NumericsError(
            f"no nullcline root in [0, {p.y}]: residuals ({r_lo:.3g}, {r_hi:.3g})")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        r_mid = float(nullcline_residual(mid, eps, p))
        if r_mid == 0.0:
            return mid
        if r_mid < 0.0:
            lo = mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    if abs(nullcline_residual(root, eps, p)) > 1e-9:
        raise NumericsError(f"nullcline residual too large at c={root}")
    return root


@dataclass(frozen=True)
class Equilibrium:
    """A stationary point of the coupled coconut/strategy dynamics."""

    eps_star: float
    c_star: float
    v1_star: float
    v0_star: float
    branch: str     # "lower", "upper", or "collapse"


def solve_equilibria(p: ModelParams, scan_margin: float = 0.05,
                     scan_step: float = 1e-4) -> list[Equilibrium]:
    """All intersections of the coconut and strategy nullclines.

    Scans the strategy axis over [c_min - margin, c_max + margin] for sign
    changes of gamma*c + eps*(c)*(c - y) + f*I(c) with eps*(c) the
    single-clearing stationary level, polishes each bracket to machine
    precision, and recovers the stationary values from the value equations
    (V(1) = eps*(y - c*)/gamma, V(0) = f*I(c*)/gamma; undefined at gamma=0).
    Returns the collapse point (eps*=0, c*=0 below c_min) when no interior
    intersection exists.
    """
    grid = np.arange(p.c_min - scan_margin, p.c_max + scan_margin + scan_step,
                     scan_step)
    vals = (p.gamma * grid + _eps_star_original_vec(grid, p) * (grid - p.y)
            + p.f * climb_integral(grid, p))

    def residual(c):
        return float(nullcline_residual(c, epsilon_fixpoint(c, p, "original"), p))

    roots: list[float] = []
    for k in range(len(grid) - 1):
        a, b = float(vals[k]), float(vals[k + 1])
        if a == 0.0:
            roots.append(float(grid[k]))
        elif a * b < 0.0:
            lo, hi = float(grid[k]), float(grid[k + 1])
            r_lo = a
            # bracketed Newton polish: bisect, then Newton near the root
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                r_mid = residual(mid)
                if r_mid == 0.0 or hi - lo < 1e-14:
                    break
                if (r_mid < 0.0) == (r_lo < 0.0):
                    lo, r_lo = mid, r_mid
                else:
                    hi = mid
            root = 0.5 * (lo + hi)
            h = 1e-8
            for _ in range(3):
                d = (residual(root + h) - residual(root - h)) / (2.0 * h)
                if d == 0.0:
                    break
                step = residual(root) / d
                if not np.isfinite(step) or abs(step) > scan_step:
                    break
                root -= step
            roots.append(root)
    # drop interior duplicates from grid points landing exactly on roots
    dedup: list[float] = []
    for r in sorted(roots):
        if not dedup or r - dedup[-1] > 10 * scan_step:
            dedup.append(r)

    if not dedup:
        return [Equilibrium(0.0, 0.0, 0.0, 0.0, "collapse")]

    out = []
    for idx, c_star in enumerate(dedup):
        eps_star = epsilon_fixpoint(c_star, p, "original")
        if p.gamma > 0.0:
            v1 = eps_star * (p.y - c_star) / p.gamma
            v0 = p.f * float(climb_integral(c_star, p)) / p.gamma
        else:
            v1 = v0 = float("nan")
        branch = "upper" if (len(dedup) > 1 and idx == len(dedup) - 1) else "lower"
        out.append(Equilibrium(float(eps_star), float(c_star), v1, v0, branch))
    return out


def count_interior_equilibria(p: ModelParams) -> int:
    eqs = solve_equilibria(p)
    return sum(1 for e in eqs if e.branch != "collapse")


def bifurcation_gamma(p: ModelParams, gamma_hi_start: float = 0.3,
                      width: float = 1e-5) -> float:
    """Discount rate beyond which the two nullclines cease to intersect.

    Bisects between a discount rate with at least two interior equilibria and
    one with none, down to the requested bracket width.
    """
    lo = p.gamma if p.gamma > 0 else 0.1
    if count_interior_equilibria(_with_gamma(p, lo)) < 2:
        raise NumericsError(
            f"bracket construction failed: no pair of interior equilibria at gamma={lo}")
    hi = gamma_hi_start
    while count_interior_equilibria(_with_gamma(p, hi)) > 0:
        hi *= 2.0
        if hi > 64.0:
            raise NumericsError("bracket construction failed: equilibria persist to gamma=64")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if count_interior_equilibria(_with_gamma(p, mid)) >= 2:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _with_gamma(p: ModelParams, gamma: float) -> ModelParams:
    d = p.to_dict()
    d["gamma"] = gamma
    return ModelParams(**d)
