import math

import numpy as np
import pytest

import mediator_bai._kernels as kernels
from mediator_bai import (
    BanditModel,
    EngineConfig,
    MediatorSet,
    Mode,
    RngStream,
    StoppingConfig,
    TrackingState,
    beta_threshold,
    dirac_mediators,
    epsilon_t,
    g_value,
    glr_statistic,
    project_weights,
    prune_duplicate_policies,
    run_trial,
    select_mediator,
    update_policy_estimates,
)
from mediator_bai.engine import STEPS_PER_CHUNK


def fresh_state(E, K):
    return TrackingState(
        t=0,
        N_e=np.zeros(E, dtype=np.int64),
        N_a=np.zeros(K, dtype=np.int64),
        N_ea=np.zeros((E, K), dtype=np.int64),
        reward_sums=np.zeros(K),
        cum_weights=np.zeros(E),
        mu_hat=np.zeros(K),
    )


class TestEpsilon:
    def test_examples(self):
        assert epsilon_t(4, 0) == pytest.approx(0.125, abs=1e-15)
        assert epsilon_t(1, 0) == pytest.approx(0.5, abs=1e-15)

    def test_decreasing_and_bounded(self):
        for E in (1, 2, 5):
            values = [epsilon_t(E, t) for t in range(0, 2000, 7)]
            assert all(a > b for a, b in zip(values, values[1:]))
            assert values[0] <= 0.5 / E + 1e-15
        assert epsilon_t(3, 10**12) < 1e-5

    def test_domain(self):
        with pytest.raises(ValueError):
            epsilon_t(0, 5)
        with pytest.raises(ValueError):
            epsilon_t(3, -1)


class TestSelectMediator:
    def test_first_step_tie_breaks_low(self):
        state = fresh_state(3, 2)
        assert select_mediator(state, np.full(3, 1.0 / 3)) == 0

    def test_tracks_cumulative_deficit(self):
        state = fresh_state(2, 2)
        om = np.array([0.8, 0.2])
        e = select_mediator(state, om)
        assert e == 0
        state.N_e[0] += 1
        e = select_mediator(state, om)  # cum = (1.6, .4), N = (1, 0)
        assert e == 0
        state.N_e[0] += 1
        e = select_mediator(state, om)  # cum = (2.4, .6), N = (2, 0)
        assert e == 1

    def run_constant_omega(self, omega, steps=100_000):
        E = len(omega)
        state = fresh_state(E, E)
        floor_ok = True
        dev_ok = True
        for t in range(steps):
            ob = project_weights(omega, epsilon_t(E, t))
            e = select_mediator(state, ob)
            state.N_e[e] += 1
            state.t = t + 1
            n = t + 1
            floor = math.sqrt(n + E * E) - 2 * E
            floor_ok &= state.N_e.min() >= floor
            dev_ok &= np.abs(state.N_e - state.cum_weights).max() <= E * (1 + math.sqrt(n))
        return state, floor_ok, dev_ok

    def test_degenerate_omega_keeps_forced_exploration(self):
        omega = np.array([1.0, 0.0, 0.0])
        state, floor_ok, dev_ok = self.run_constant_omega(omega, steps=100_000)
        assert floor_ok and dev_ok
        # floor mediators are sampled unboundedly but sublinearly
        assert state.N_e[1] > 100
        assert state.N_e[1] / state.t < 0.01

    def test_tracks_constant_target(self):
        omega = np.array([0.3, 0.2, 0.5])
        state, floor_ok, dev_ok = self.run_constant_omega(omega, steps=20_000)
        assert floor_ok and dev_ok
        t = state.t
        assert np.abs(state.N_e / t - omega).max() <= 3 * (1 + math.sqrt(t)) / t


class TestGlrStatistic:
    def test_two_arm_example(self):
        state = fresh_state(2, 2)
        state.t = 200
        state.N_a[:] = (100, 100)
        state.mu_hat[:] = (1.0, 0.0)
        z = glr_statistic(state, BanditModel("gaussian", [1.0, 0.0]).family)
        assert z == pytest.approx(25.0, abs=1e-12)

    def test_tie_gives_zero(self):
        state = fresh_state(2, 3)
        state.t = 30
        state.N_a[:] = (10, 10, 10)
        state.mu_hat[:] = (0.7, 0.7, 0.1)
        assert glr_statistic(state, BanditModel("gaussian", [1.0, 0.0]).family) == 0.0

    def test_requires_full_coverage(self):
        state = fresh_state(2, 2)
        state.t = 5
        state.N_a[:] = (5, 0)
        with pytest.raises(ValueError):
            glr_statistic(state, BanditModel("gaussian", [1.0, 0.0]).family)

    def test_gaussian_pairwise_form(self):
        rng = np.random.default_rng(21)
        fam = BanditModel("gaussian", [1.0, 0.0]).family
        for _ in range(30):
            K = int(rng.integers(2, 6))
            state = fresh_state(2, K)
            counts = rng.integers(1, 500, K)
            state.N_a[:] = counts
            state.t = int(counts.sum())
            state.mu_hat[:] = rng.normal(0, 1, K)
            if len(np.unique(state.mu_hat)) < K:
                continue
            a_hat = int(np.argmax(state.mu_hat))
            pairwise = min(
                (counts[a_hat] * counts[a])
                / (2.0 * (counts[a_hat] + counts[a]))
                * (state.mu_hat[a_hat] - state.mu_hat[a]) ** 2
                for a in range(K)
                if a != a_hat
            )
            assert glr_statistic(state, fam) == pytest.approx(pairwise, rel=1e-12)

    def test_matches_g_value_cross_module(self, table1_model, table1_mediators):
        rec, state = run_trial(
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.KNOWN_POLICIES),
            StoppingConfig(delta=0.05),
            RngStream(31, 3),
            return_state=True,
        )
        z = glr_statistic(state, table1_model.family)
        emp_model = BanditModel("gaussian", state.mu_hat)
        expected = state.t * g_value(emp_model, state.N_a / state.t)
        assert z == pytest.approx(expected, abs=1e-9)
        # the engine stopped exactly when the statistic cleared the threshold
        cfg = StoppingConfig(delta=0.05).resolve(table1_model.n_arms)
        assert z >= beta_threshold(cfg, state.t)


class TestBetaThreshold:
    def test_values(self):
        cfg = StoppingConfig(delta=0.1, beta_alpha=2.0, beta_c=3.0)
        assert beta_threshold(cfg, 100) == pytest.approx(math.log(3e4 / 0.1), rel=1e-12)
        assert beta_threshold(cfg, 100) == pytest.approx(12.6115, abs=5e-5)
        unit = StoppingConfig(delta=0.5, beta_alpha=2.0, beta_c=1.0)
        assert beta_threshold(unit, 1) == pytest.approx(math.log(2.0), rel=1e-12)

    def test_monotonicity_and_delta_halving(self):
        cfg1 = StoppingConfig(delta=0.2, beta_alpha=1.5, beta_c=2.0)
        cfg2 = StoppingConfig(delta=0.1, beta_alpha=1.5, beta_c=2.0)
        ts = [1, 5, 50, 1000]
        b1 = [beta_threshold(cfg1, t) for t in ts]
        assert all(x < y for x, y in zip(b1, b1[1:]))
        for t in ts:
            assert beta_threshold(cfg2, t) - beta_threshold(cfg1, t) == pytest.approx(
                math.log(2.0), rel=1e-12
            )

    def test_domain_and_resolution(self):
        cfg = StoppingConfig(delta=0.1)
        assert cfg.beta_c is None
        with pytest.raises(ValueError):
            beta_threshold(cfg, 10)
        resolved = cfg.resolve(4)
        assert resolved.beta_c == 3.0
        with pytest.raises(ValueError):
            beta_threshold(resolved, 0)

    def test_stopping_config_validation(self):
        with pytest.raises(ValueError):
            StoppingConfig(delta=0.0)
        with pytest.raises(ValueError):
            StoppingConfig(delta=0.1, beta_alpha=1.0)
        with pytest.raises(ValueError):
            StoppingConfig(delta=0.1, beta_c=0.0)


class TestPolicyEstimates:
    def test_frequency_rows(self):
        state = fresh_state(2, 4)
        state.N_ea[0] = (3, 1, 0, 0)
        state.N_e[0] = 4
        est = update_policy_estimates(state)
        assert np.allclose(est[0], [0.75, 0.25, 0.0, 0.0])
        assert np.allclose(est[1], [0.25, 0.25, 0.25, 0.25])
        assert np.allclose(est.sum(axis=1), 1.0)

    def test_strong_law_convergence(self, table1_model, table1_mediators):
        # uniform querying gives every mediator ~t/E visits
        rec, state = run_trial(
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.UNIFORM_BASELINE),
            StoppingConfig(delta=0.1),
            RngStream(456, 0),
            return_state=True,
            horizon=100_000,
        )
        est = update_policy_estimates(state)
        assert np.abs(est - table1_mediators.policies).max() <= 0.02

    def test_tracking_mode_convergence(self, table1_model, table1_mediators):
        # floor mediators only get ~sqrt(t) visits, so allow a looser band
        rec, state = run_trial(
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.UNKNOWN_POLICIES),
            StoppingConfig(delta=0.1),
            RngStream(456, 1),
            return_state=True,
            horizon=100_000,
        )
        assert state.pi_hat is not None
        assert np.abs(state.pi_hat - table1_mediators.policies).max() <= 0.08


class TestPruneDuplicates:
    def test_experiment2_shape(self):
        rows = [[0.01, 0.99]] + [[0.0, 1.0]] * 9
        med = MediatorSet(rows)
        pruned, index_map = prune_duplicate_policies(med)
        assert pruned.n_mediators == 2
        assert np.array_equal(index_map, [0, 1])
        assert np.allclose(pruned.policies, [[0.01, 0.99], [0.0, 1.0]])

    def test_distinct_rows_untouched(self, table1_mediators):
        pruned, index_map = prune_duplicate_policies(table1_mediators)
        assert pruned.n_mediators == 4
        assert np.array_equal(index_map, np.arange(4))
        assert np.array_equal(pruned.policies, table1_mediators.policies)

    def test_tiny_difference_merged(self):
        base = np.array([0.3, 0.7])
        rows = np.vstack([base, base + np.array([1e-15, -1e-15]), [0.5, 0.5]])
        pruned, index_map = prune_duplicate_policies(MediatorSet(rows))
        assert pruned.n_mediators == 2
        assert np.array_equal(index_map, [0, 2])


class TestRunTrial:
    def test_deterministic_replay(self, table1_model, table1_mediators):
        args = (
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.KNOWN_POLICIES),
            StoppingConfig(delta=0.2),
        )
        a = run_trial(*args, RngStream(5, 11))
        b = run_trial(*args, RngStream(5, 11))
        assert a == b
        c = run_trial(*args, RngStream(5, 12))
        assert a != c

    def test_count_identities(self, table1_model, table1_mediators):
        for mode in (Mode.KNOWN_POLICIES, Mode.UNKNOWN_POLICIES, Mode.UNIFORM_BASELINE):
            rec, state = run_trial(
                table1_model,
                table1_mediators,
                EngineConfig(mode=mode),
                StoppingConfig(delta=0.3),
                RngStream(64, 2),
                return_state=True,
            )
            assert rec.stopped and not rec.aborted
            assert state.t == rec.tau
            assert state.N_e.sum() == state.t
            assert state.N_a.sum() == state.t
            assert np.array_equal(state.N_ea.sum(axis=1), state.N_e)
            assert np.array_equal(state.N_ea.sum(axis=0), state.N_a)
            assert abs(state.cum_weights.sum() - state.t) <= 1e-6
            seen = state.N_a > 0
            assert np.allclose(
                state.mu_hat[seen], state.reward_sums[seen] / state.N_a[seen]
            )

    def test_stopping_monotone_in_delta(self, table1_model, table1_mediators):
        taus = []
        for delta in (0.4, 0.1, 0.01, 0.001):
            rec = run_trial(
                table1_model,
                table1_mediators,
                EngineConfig(mode=Mode.KNOWN_POLICIES),
                StoppingConfig(delta=delta),
                RngStream(77, 3),
            )
            taus.append(rec.tau)
        assert all(a <= b for a, b in zip(taus, taus[1:]))

    def test_known_equals_pinned_unknown(self, table1_model, table1_mediators):
        known = run_trial(
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.KNOWN_POLICIES),
            StoppingConfig(delta=0.1),
            RngStream(88, 4),
            return_state=True,
        )
        pinned = run_trial(
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.UNKNOWN_POLICIES, pin_policy_estimates=True),
            StoppingConfig(delta=0.1),
            RngStream(88, 4),
            return_state=True,
        )
        rec_k, st_k = known
        rec_p, st_p = pinned
        assert rec_k.tau == rec_p.tau
        assert rec_k.recommended_arm == rec_p.recommended_arm
        assert np.array_equal(st_k.N_ea, st_p.N_ea)
        assert np.array_equal(st_k.mu_hat, st_p.mu_hat)
        assert np.array_equal(st_k.cum_weights, st_p.cum_weights)

    def test_trial_cap_aborts(self, table1_model, table1_mediators):
        rec = run_trial(
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.KNOWN_POLICIES, trial_cap=50),
            StoppingConfig(delta=0.001),
            RngStream(3, 0),
        )
        assert rec.aborted and not rec.stopped
        assert rec.tau == 50

    def test_horizon_run(self, table1_model, table1_mediators):
        rec, state = run_trial(
            table1_model,
            table1_mediators,
            EngineConfig(mode=Mode.KNOWN_POLICIES),
            StoppingConfig(delta=0.1),
            RngStream(3, 1),
            return_state=True,
            horizon=3000,
        )
        assert rec.tau == 3000 and state.t == 3000
        assert not rec.stopped and not rec.aborted

    def test_tracking_bounds_on_real_runs(self, table1_model, table1_mediators):
        for mode in (Mode.KNOWN_POLICIES, Mode.UNKNOWN_POLICIES):
            rec, state = run_trial(
                table1_model,
                table1_mediators,
                EngineConfig(mode=mode, check_tracking_bounds=True),
                StoppingConfig(delta=0.1),
                RngStream(14, 5),
                return_state=True,
                horizon=20_000,
            )
            assert state.floor_slack_min is not None
            assert state.floor_slack_min >= 0.0
            assert state.deviation_excess_max <= 0.0

    def test_engine_config_validation(self):
        with pytest.raises(ValueError):
            EngineConfig(mode=Mode.UNKNOWN_POLICIES, prune_duplicates=True)

    def test_prune_inside_engine(self):
        model = BanditModel("gaussian", [5.0, 1.0])
        rows = [[0.01, 0.99]] + [[0.0, 1.0]] * 9
        med = MediatorSet(rows)
        rec, state = run_trial(
            model,
            med,
            EngineConfig(mode=Mode.KNOWN_POLICIES, prune_duplicates=True),
            StoppingConfig(delta=0.1),
            RngStream(101, 0),
            return_state=True,
        )
        assert state.n_mediators == 2

    def test_bernoulli_trials(self):
        model = BanditModel("bernoulli", [0.8, 0.3, 0.5])
        med = MediatorSet([[0.6, 0.2, 0.2], [0.1, 0.5, 0.4]])
        records = []
        for mode in (Mode.KNOWN_POLICIES, Mode.UNKNOWN_POLICIES, Mode.UNIFORM_BASELINE):
            for i in range(10):
                rec, state = run_trial(
                    model,
                    med,
                    EngineConfig(mode=mode),
                    StoppingConfig(delta=0.1),
                    RngStream(2025, i),
                    return_state=True,
                )
                assert rec.stopped
                assert set(np.unique(state.reward_sums % 1.0)) == {0.0}
                z = glr_statistic(state, model.family)
                cfg = StoppingConfig(delta=0.1).resolve(3)
                assert z >= beta_threshold(cfg, state.t)
                records.append(rec)
        correct = sum(r.correct for r in records)
        assert correct >= 27  # delta = 0.1; 30 trials

    def test_bernoulli_replay(self):
        model = BanditModel("bernoulli", [0.8, 0.3])
        med = MediatorSet([[0.7, 0.3], [0.2, 0.8]])
        args = (model, med, EngineConfig(), StoppingConfig(delta=0.2))
        assert run_trial(*args, RngStream(7, 7)) == run_trial(*args, RngStream(7, 7))

    def test_bernoulli_glr_boundary_means(self):
        # empirical Bernoulli means of 0 or 1 keep the statistic finite
        state = fresh_state(2, 2)
        state.t = 6
        state.N_a[:] = (3, 3)
        state.mu_hat[:] = (1.0, 0.0)
        z = glr_statistic(state, BanditModel("bernoulli", [0.6, 0.4]).family)
        # t * (0.5*kl(1, 0.5) + 0.5*kl(0, 0.5)) = 6 * log(2)
        assert z == pytest.approx(6 * math.log(2.0), rel=1e-12)
        assert math.isfinite(z)


class TestKernelMatchesPublicOps:
    """Replay the compiled stepper with the step-level public operations."""

    def test_step_for_step_equivalence(self, table1_model, table1_mediators):
        seed, stream = 2024, 6
        horizon = 300
        cfg = EngineConfig(mode=Mode.KNOWN_POLICIES, solver_budget=600, warm_budget=25)
        rec, st = run_trial(
            table1_model,
            table1_mediators,
            cfg,
            StoppingConfig(delta=0.1),
            RngStream(seed, stream),
            return_state=True,
            horizon=horizon,
        )

        # independent replica from the published draw discipline
        E, K = 4, 4
        pi = table1_mediators.policies
        pi_cdf = np.cumsum(pi, axis=1)
        rng = RngStream(seed, stream)
        u_buf = rng.substream(0).random(3 * STEPS_PER_CHUNK)
        z_buf = rng.substream(1).standard_normal(STEPS_PER_CHUNK)
        upos = zpos = 0
        state = fresh_state(E, K)
        omega = np.full(E, 1.0 / E)
        fam = 0
        solved = False
        tl = np.empty(K)
        per_arm = np.empty(K)
        grad = np.empty(E)
        scratch = np.empty(E)
        for t in range(horizon):
            if np.all(state.N_a > 0):
                if not solved:
                    kernels._solve_omega(fam, state.mu_hat, pi, omega, cfg.solver_budget, cfg.solver_tol)
                    solved = True
                else:
                    lo = 1e-12 / E
                    omega = np.maximum(omega, lo)
                    omega = omega / omega.sum()
                    kernels._mirror_ascent(
                        fam, state.mu_hat, pi, omega, cfg.warm_budget, tl, per_arm, grad, scratch
                    )
            else:
                omega = np.full(E, 1.0 / E)
            ob = project_weights(omega, epsilon_t(E, t))
            e = select_mediator(state, ob)
            u = u_buf[upos]
            upos += 1
            arm = K - 1
            for j in range(K):
                if u < pi_cdf[e, j]:
                    arm = j
                    break
            x = table1_model.means[arm] + z_buf[zpos]
            zpos += 1
            state.N_e[e] += 1
            state.N_a[arm] += 1
            state.N_ea[e, arm] += 1
            state.reward_sums[arm] += x
            state.mu_hat[arm] = state.reward_sums[arm] / state.N_a[arm]
            state.t = t + 1

        assert np.array_equal(state.N_e, st.N_e)
        assert np.array_equal(state.N_a, st.N_a)
        assert np.array_equal(state.N_ea, st.N_ea)
        assert np.allclose(state.mu_hat, st.mu_hat, rtol=0, atol=0)
        assert np.allclose(state.cum_weights, st.cum_weights, rtol=0, atol=1e-9)
