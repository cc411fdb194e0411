import numpy as np
import pytest

from cocosim.core import ModelParams, NumericsError
from cocosim.dynamics import (
    Equilibrium,
    OdeSystem,
    adjusted_eps,
    bifurcation_gamma,
    corrected_eps,
    count_interior_equilibria,
    epsilon_fixpoint,
    integrate,
    moment_hierarchy,
    moment_rhs,
    nullcline_residual,
    original_2d,
    solve_equilibria,
    strategy_nullcline,
    value_3d,
)


def gamma_variant(p, gamma):
    d = p.to_dict()
    d["gamma"] = gamma
    return ModelParams(**d)


class TestEpsilonFixpoint:
    def test_zero_at_cmin(self, params):
        for variant in ("original", "adjusted", "corrected"):
            assert epsilon_fixpoint(params.c_min, params, variant) == 0.0

    def test_original_hand_value(self, params):
        # fG = 0.4: 0.2 * (sqrt(11) - 1)
        assert epsilon_fixpoint(0.4, params, "original") == pytest.approx(
            0.2 * (np.sqrt(11) - 1), abs=1e-12)
        assert epsilon_fixpoint(0.4, params, "original") == pytest.approx(0.46332, abs=5e-6)

    def test_adjusted_hand_value(self, params):
        # fG = 0.4: 0.1 * (sqrt(21) - 1)
        assert epsilon_fixpoint(0.4, params, "adjusted") == pytest.approx(
            0.1 * (np.sqrt(21) - 1), abs=1e-12)
        assert epsilon_fixpoint(0.4, params, "adjusted") == pytest.approx(0.35826, abs=5e-6)

    def test_corrected_zero_sigma_equals_adjusted(self, params):
        for c in np.linspace(0.3, 0.55, 11):
            assert epsilon_fixpoint(c, params, "corrected", sigma_bar=0.0) == \
                epsilon_fixpoint(c, params, "adjusted")

    def test_corrected_negative_discriminant(self, params):
        with pytest.raises(NumericsError):
            epsilon_fixpoint(0.31, params, "corrected", sigma_bar=0.5)

    def test_original_roots_mean_field_rhs(self, params):
        # cross-check: eps* is a zero of the single-clearing eps equation
        for c in (0.35, 0.4, 0.45):
            eps = epsilon_fixpoint(c, params, "original")
            from cocosim.core import cost_cdf
            rhs = params.f * (1 - eps) * cost_cdf(c, params) - eps**2
            assert abs(rhs) < 1e-10

    def test_original_matches_integration(self, params):
        # independent route: integrate the single-clearing eps ODE at fixed c
        from cocosim.core import cost_cdf
        c = 0.4
        sys1 = OdeSystem("eps_original", 1, lambda t, s: np.array(
            [params.f * (1 - s[0]) * cost_cdf(c, params) - s[0] ** 2]))
        final = integrate(sys1, [0.0], 200.0, 1e-3).final[0]
        assert final == pytest.approx(epsilon_fixpoint(c, params, "original"), abs=1e-6)

    def test_unknown_variant(self, params):
        with pytest.raises(NumericsError):
            epsilon_fixpoint(0.4, params, "bogus")


class TestIntegrate:
    def test_starts_at_fixed_point_stays(self, params):
        c = 0.4
        eps_star = epsilon_fixpoint(c, params, "adjusted")
        res = integrate(adjusted_eps(params, c), [eps_star], 10.0, 1e-3)
        assert np.max(np.abs(res.y - eps_star)) < 1e-8

    def test_adjusted_converges_to_fixed_point(self, params):
        res = integrate(adjusted_eps(params, 0.4), [0.0], 50.0, 1e-3)
        assert res.final[0] == pytest.approx(0.35826, abs=1e-5)
        assert res.final[0] == pytest.approx(
            epsilon_fixpoint(0.4, params, "adjusted"), abs=1e-6)

    def test_adjusted_steady_for_c_grid(self, params):
        for c in np.arange(0.32, 0.5001, 0.02):
            res = integrate(adjusted_eps(params, c), [0.0], 1000.0, 1e-3)
            assert res.steady
            assert res.final[0] == pytest.approx(
                epsilon_fixpoint(c, params, "adjusted"), abs=1e-6)

    def test_value3d_stays_at_equilibrium(self, params):
        low = solve_equilibria(params)[0]
        init = [low.eps_star, low.v1_star, low.v0_star]
        res = integrate(value_3d(params), init, 10.0, 1e-3)
        assert np.max(np.abs(res.y - np.array(init))) < 1e-6

    def test_rk4_order_four(self, params):
        # halving dt reduces end-state error by ~16x against a dt/8 reference
        sys1 = adjusted_eps(params, 0.4)
        dt = 0.1
        ref = integrate(sys1, [0.0], 3.0, dt / 8).final[0]
        e1 = abs(integrate(sys1, [0.0], 3.0, dt).final[0] - ref)
        e2 = abs(integrate(sys1, [0.0], 3.0, dt / 2).final[0] - ref)
        assert 12.0 < e1 / e2 < 20.0

    def test_divergence_raises(self, params):
        def rhs(t, s):
            with np.errstate(over="ignore", invalid="ignore"):
                return s * s + 1.0

        blow = OdeSystem("blow", 1, rhs)
        with pytest.raises(NumericsError, match="diverged"):
            integrate(blow, [1.0], 100.0, 0.5)

    def test_bad_inputs(self, params):
        sys1 = adjusted_eps(params, 0.4)
        with pytest.raises(NumericsError):
            integrate(sys1, [0.0], 1.0, -0.1)
        with pytest.raises(NumericsError):
            integrate(sys1, [0.0, 1.0], 1.0, 0.1)

    def test_corrected_eps_zero_sigma_matches_adjusted(self, params):
        from cocosim.core import cost_cdf
        g = float(cost_cdf(0.4, params))
        a = integrate(adjusted_eps(params, 0.4), [0.1], 5.0, 1e-3)
        b = integrate(corrected_eps(params, g, 0.0), [0.1], 5.0, 1e-3)
        assert np.allclose(a.y, b.y, atol=1e-14)

    def test_corrected_eps_callable_signal(self, params):
        res = integrate(corrected_eps(params, 0.5, lambda t: 0.02), [0.0], 50.0, 1e-3)
        target = epsilon_fixpoint(0.4, params, "corrected", sigma_bar=0.02)
        assert res.final[0] == pytest.approx(target, abs=1e-6)


class TestStrategyNullcline:
    def test_eps_zero_gives_zero(self, params):
        assert strategy_nullcline(0.0, params) == 0.0

    def test_hand_point(self, params):
        # gamma*c + f*I(c) = 0.044 + 0.0392 = 0.0832; eps = 0.0832 / (y - c) = 0.52
        assert abs(nullcline_residual(0.44, 0.52, params)) < 1e-12
        assert strategy_nullcline(0.52, params) == pytest.approx(0.44, abs=1e-9)

    def test_residual_small_on_grid(self, params):
        for eps in np.linspace(0.05, 1.0, 20):
            c = strategy_nullcline(eps, params)
            assert abs(nullcline_residual(c, eps, params)) < 1e-9

    def test_lower_equilibrium_point(self, params):
        # the gamma=0.1 pessimistic equilibrium sits on the nullcline
        c = strategy_nullcline(0.102007, params)
        assert c == pytest.approx(0.302897, abs=1e-4)

    def test_invalid_eps(self, params):
        with pytest.raises(NumericsError):
            strategy_nullcline(1.5, params)


class TestSolveEquilibria:
    def test_baseline_gamma01(self, params):
        eqs = solve_equilibria(params)
        assert [e.branch for e in eqs] == ["lower", "upper"]
        low, up = eqs
        # frozen from an independent scan/brentq solve of the same algebraic system
        assert low.eps_star == pytest.approx(0.102007, abs=1e-5)
        assert low.c_star == pytest.approx(0.302897, abs=1e-5)
        assert low.v1_star == pytest.approx(0.303065, abs=1e-5)
        assert low.v0_star == pytest.approx(0.000168, abs=1e-5)
        assert up.eps_star == pytest.approx(0.518804, abs=1e-5)
        assert up.c_star == pytest.approx(0.439838, abs=1e-5)

    def test_gamma02_lower(self, params):
        eqs = solve_equilibria(gamma_variant(params, 0.2))
        assert eqs[0].c_star == pytest.approx(0.316309, abs=1e-5)

    def test_gamma03_collapse(self, params):
        eqs = solve_equilibria(gamma_variant(params, 0.3))
        assert len(eqs) == 1
        assert eqs[0].branch == "collapse"
        assert eqs[0].eps_star == 0.0
        assert eqs[0].c_star < params.c_min

    def test_defining_system_residuals(self, params):
        # every interior equilibrium is a zero of both the 2-D and 3-D systems
        for gamma in (0.1, 0.15, 0.2):
            p = gamma_variant(params, gamma)
            for eq in solve_equilibria(p):
                if eq.branch == "collapse":
                    continue
                r2 = original_2d(p)(0.0, np.array([eq.eps_star, eq.c_star]))
                assert np.max(np.abs(r2)) < 1e-10
                r3 = value_3d(p)(0.0, np.array([eq.eps_star, eq.v1_star, eq.v0_star]))
                assert np.max(np.abs(r3)) < 1e-8
                assert eq.c_star == pytest.approx(eq.v1_star - eq.v0_star, abs=1e-8)


class TestBifurcation:
    def test_bracket_and_value(self, params):
        gstar = bifurcation_gamma(params)
        assert 0.2 < gstar < 0.3
        assert gstar == pytest.approx(0.24230, abs=5e-4)
        assert count_interior_equilibria(gamma_variant(params, gstar - 1e-3)) == 2
        assert count_interior_equilibria(gamma_variant(params, gstar + 1e-3)) == 0

    def test_count_monotone_in_gamma(self, params):
        counts = [count_interior_equilibria(gamma_variant(params, g))
                  for g in np.arange(0.05, 0.301, 0.05)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_bracket_failure(self, params):
        with pytest.raises(NumericsError):
            bifurcation_gamma(gamma_variant(params, 0.4))


# exact per-agent oracle for the moment hierarchy: a continuum of climbing
# probabilities g on [0, 1] (the uniform-strategy scenario), integrated directly
class ContinuumOracle:
    def __init__(self, p, m=2000):
        self.f = p.f
        self.g = (np.arange(m) + 0.5) / m

    def rhs(self, prob):
        eps = prob.mean()
        return self.f * (1 - prob) * self.g - 2 * eps * prob

    def rk4_step(self, prob, dt):
        k1 = self.rhs(prob)
        k2 = self.rhs(prob + dt / 2 * k1)
        k3 = self.rhs(prob + dt / 2 * k2)
        k4 = self.rhs(prob + dt * k3)
        return prob + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    def run(self, t_end, dt=1e-3, record=None):
        prob = np.zeros_like(self.g)
        out = []
        steps = int(round(t_end / dt))
        for n in range(steps):
            prob = self.rk4_step(prob, dt)
            if record is not None and (n + 1) % record == 0:
                out.append((round((n + 1) * dt, 9), prob.copy()))
        return prob, out

    def moments(self, k_max):
        return [float((self.g ** k).mean()) for k in range(1, k_max + 1)]

    def state(self, prob, k_max):
        eps = prob.mean()
        sig = [float((self.g ** k * prob).mean() - (self.g ** k).mean() * eps)
               for k in range(1, k_max + 1)]
        return np.array([eps, *sig])


class TestMomentHierarchy:
    def test_degenerate_distribution_reduces_to_adjusted(self, params):
        # homogeneous strategies: all central differences vanish, covariances
        # stay frozen at zero, and the eps equation is exactly the
        # pair-adjusted one
        g = 0.5
        moments = [g ** k for k in range(1, 5)]
        state = np.array([0.2, 0.0, 0.0, 0.0])
        d = moment_rhs(state, moments, params)
        adj = adjusted_eps(params, 0.4)(0.0, state[:1])
        assert d[0] == pytest.approx(adj[0], abs=1e-15)
        assert np.all(d[1:] == 0.0)

    def test_finite_difference_oracle(self, params):
        # evaluate the hierarchy at the exact state of the per-agent continuum
        # with the exact tail covariance supplied: must match d/dt to fd accuracy
        oracle = ContinuumOracle(params, m=2000)
        prob, _ = oracle.run(2.0, dt=1e-3)
        k_max = 4
        state = oracle.state(prob, k_max)
        tail = oracle.state(prob, k_max + 1)[-1]
        moments = oracle.moments(k_max + 1)
        d = moment_rhs(state, moments, params, sigma_tail=tail)
        h = 1e-5
        fwd = oracle.rk4_step(prob, h)
        bwd = oracle.rk4_step(prob, -h)
        fd = (oracle.state(fwd, k_max) - oracle.state(bwd, k_max)) / (2 * h)
        assert np.max(np.abs(d - fd)) < 1e-9

    def test_closure_error_decreases_with_k(self, params):
        # truncation error against the exact continuum over t <= 4, uniform scenario
        oracle = ContinuumOracle(params, m=1000)
        _, recorded = oracle.run(4.0, dt=1e-3, record=100)
        ref = {t: prob.mean() for t, prob in recorded}
        sups = []
        for k in (1, 3, 5):
            sysk = moment_hierarchy(params, oracle.moments(k + 1))
            res = integrate(sysk, np.zeros(k + 1), 4.0, 1e-3)
            idx = {round(t, 9): n for n, t in enumerate(res.t)}
            sup = max(abs(res.y[idx[t], 0] - ref[t]) for t in ref)
            sups.append(sup)
        assert sups[0] > sups[1] > sups[2]
        assert sups[0] < 0.05

    def test_moment_rhs_input_validation(self, params):
        with pytest.raises(NumericsError):
            moment_rhs(np.array([0.1]), [0.5], params)
        with pytest.raises(NumericsError):
            moment_rhs(np.array([0.1, 0.0]), [0.5], params)

    def test_factory_dimension(self, params):
        sysk = moment_hierarchy(params, [0.5, 1 / 3, 0.25])
        assert sysk.dim == 3

    @pytest.mark.slow
    def test_tracks_simulation_ensemble_early(self, params):
        # ensemble of pair-scheme runs, uniform strategies, N=1000: the K=3
        # truncation tracks the ensemble mean while the closure holds (t <= 4;
        # beyond that the omitted tail covariance matters, since for strategies
        # reaching c_max the covariances decay only slowly in k)
        from cocosim.abm import IM, SimConfig, UpdateScheme, run
        from cocosim.core import cost_cdf, rng_stream

        big = ModelParams(n_agents=1000)
        n, t_end, reps = big.n_agents, 4.0, 150
        steps = int(t_end * n)
        acc = np.zeros(steps)
        scheme = UpdateScheme(IM)
        cfg = SimConfig(total_steps=steps, burn_in_steps=0, eps0=0.0)
        for r in range(reps):
            rng = rng_stream(big.master_seed, "hierarchy-ensemble", r)
            strategies = rng.uniform(big.c_min, big.c_max, n)
            acc += run(big, scheme, cfg, strategies, rng).epsilon
        acc /= reps
        sysk = moment_hierarchy(big, [1 / (k + 1) for k in range(1, 5)])
        res = integrate(sysk, np.zeros(4), t_end, 1e-3)
        # compare at whole time units (N micro steps per unit)
        for t_unit in range(1, int(t_end) + 1):
            ode_eps = res.y[int(round(t_unit / 1e-3)), 0]
            sim_eps = acc[t_unit * n - 1]
            assert abs(ode_eps - sim_eps) < 0.01
