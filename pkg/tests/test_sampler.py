import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xchmc import (Budget, LegSpec, MassMatrix, PhaseState, SamplerConfig, ScriptedRng,
                   TargetModel, builtin_target, chain_rng, couple_noise,
                   ess_initial_monotone, extra_chance_step, flip, hamiltonian,
                   lahmc_from_log_ratios, lahmc_probabilities, log_rho,
                   palindromic_refresh_angle, refresh_momentum, run_chain,
                   run_palindromic_chain, sigma_sequence, slot_distribution,
                   slot_stats, verlet_leg)

log_ratio_vectors = st.lists(
    st.floats(min_value=-40.0, max_value=40.0, allow_nan=False),
    min_size=1, max_size=8)


def free_model(dim=1):
    return TargetModel(dim=dim, potential=lambda x: 0.0,
                       gradient=lambda x: np.zeros_like(x))


class TestRefreshMomentum:
    def test_position_untouched_bit_for_bit(self, gauss2d, rng):
        z = PhaseState(rng.standard_normal(2), rng.standard_normal(2))
        out = refresh_momentum(gauss2d, z, 0.3, np.random.default_rng(0))
        assert out.x is z.x or np.array_equal(out.x, z.x)

    def test_full_refresh_returns_noise_exactly(self, gauss2d):
        z = PhaseState([1.0, 2.0], [5.0, -7.0])
        zeta = [0.25, -1.5]
        out = refresh_momentum(gauss2d, z, math.pi / 2, ScriptedRng(normals=zeta))
        assert np.array_equal(out.y, zeta)

    def test_partial_refresh_example(self, gauss1d):
        # cos(psi) = 0.8: new momentum 0.8*1 + 0.6*0.5 = 1.1
        out = refresh_momentum(gauss1d, PhaseState([0.0], [1.0]), math.acos(0.8),
                               ScriptedRng(normals=[0.5]))
        assert out.y[0] == pytest.approx(1.1, abs=1e-12)

    def test_mass_scales_noise(self):
        model = builtin_target("gaussian", 1, mass=MassMatrix.diagonal([4.0]))
        out = refresh_momentum(model, PhaseState([0.0], [0.0]), math.pi / 2,
                               ScriptedRng(normals=[1.0]))
        assert out.y[0] == pytest.approx(2.0)

    def test_angle_range_enforced(self, gauss1d, rng):
        z = PhaseState([0.0], [0.0])
        with pytest.raises(ValueError):
            refresh_momentum(gauss1d, z, 0.0, rng)
        with pytest.raises(ValueError):
            refresh_momentum(gauss1d, z, 2.0, rng)

    def test_marginal_preserved_statistically(self, gauss1d):
        # y ~ N(0,1) in, y ~ N(0,1) out for any psi
        rng = np.random.default_rng(21)
        ys = rng.standard_normal(40_000)
        out = np.array([
            refresh_momentum(gauss1d, PhaseState([0.0], [y]), 0.7, rng).y[0]
            for y in ys])
        assert abs(out.mean()) <= 3 * out.std() / math.sqrt(out.size)
        assert abs(out.var() - 1.0) <= 0.03


class TestSlotDistribution:
    def test_two_candidate_example(self):
        sd = slot_distribution(np.log([0.6, 1.2]))
        assert np.allclose(sd.sigma, [0.6, 1.0], atol=1e-12)
        assert np.allclose(sd.p, [0.6, 0.4, 0.0], atol=1e-12)

    def test_non_monotone_ratio_example(self):
        sd = slot_distribution(np.log([0.6, 0.3, 0.5]))
        assert np.allclose(sd.sigma, [0.6, 0.6, 0.6], atol=1e-12)
        assert np.allclose(sd.p, [0.6, 0.0, 0.0, 0.4], atol=1e-12)
        # candidates dominated by an earlier one get exactly zero probability
        assert sd.p[1] == 0.0
        assert sd.p[2] == 0.0

    def test_uphill_ratio_kills_flip(self):
        sd = slot_distribution(np.log([0.2, 3.0]))
        assert sd.sigma[-1] == 1.0
        assert sd.p[-1] == 0.0

    @given(log_ratio_vectors)
    def test_partition_properties(self, lrs):
        sd = slot_distribution(lrs)
        assert np.all(np.diff(sd.sigma) >= 0)
        assert np.all(sd.sigma <= 1.0)
        assert np.all(sd.p >= 0.0)
        assert abs(sd.p.sum() - 1.0) <= 1e-15
        assert np.allclose(sd.sigma, np.exp(sd.log_sigma))

    @given(log_ratio_vectors)
    def test_dominated_candidates_get_zero(self, lrs):
        sd = slot_distribution(lrs)
        running = -math.inf
        for k, lr in enumerate(lrs):
            if lr <= running and k > 0:
                assert sd.p[k] == 0.0
            running = max(running, lr)

    @given(log_ratio_vectors)
    def test_any_uphill_candidate_removes_flip(self, lrs):
        sd = slot_distribution(lrs)
        if max(lrs) >= 0.0:
            assert sd.sigma[-1] == 1.0
            assert sd.p[-1] == 0.0


class TestSigmaSequence:
    def test_exact_flow_accepts_first_candidate(self):
        model = free_model()
        sd = sigma_sequence(model, LegSpec(0.5, 3), PhaseState([0.2], [1.3]), 3)
        assert np.array_equal(sd.sigma, np.ones(4))
        assert np.array_equal(sd.p, [1.0, 0.0, 0.0, 0.0, 0.0])

    def test_single_candidate_matches_energy_change(self, gauss1d):
        z = PhaseState([1.5], [1.7])
        leg = LegSpec(1.5, 1)
        out, _ = verlet_leg(gauss1d, leg, z)
        delta_h = hamiltonian(gauss1d, out) - hamiltonian(gauss1d, z)
        sd = sigma_sequence(gauss1d, leg, z, 0)
        assert sd.sigma[0] == pytest.approx(min(1.0, math.exp(-delta_h)), rel=1e-13)

    def test_diverged_candidates_contribute_zero(self, dwell1d):
        # dt way beyond stability: all candidates diverge, mass goes to the flip
        sd = sigma_sequence(dwell1d, LegSpec(2.0, 50), PhaseState([3.0], [0.0]), 2)
        assert np.array_equal(sd.sigma, np.zeros(3))
        assert sd.p[-1] == 1.0


def _interesting_state(model, extra_chances):
    """Deterministically find a state whose slot distribution is spread out."""
    rng = np.random.default_rng(99)
    for _ in range(500):
        z = PhaseState(rng.standard_normal(model.dim) * 1.3,
                       rng.standard_normal(model.dim) * 1.3)
        for dt in (0.6, 0.9, 1.2, 1.5):
            leg = LegSpec(dt, 1)
            sd = sigma_sequence(model, leg, z, extra_chances)
            if 0.15 <= sd.p[0] <= 0.85 and sd.p[1] >= 0.05:
                return z, leg, sd
    raise AssertionError("no spread-out slot distribution found")


class TestExtraChanceStep:
    def test_forced_u_zero_accepts_first_candidate(self, gauss2d, rng):
        z = PhaseState(rng.standard_normal(2), rng.standard_normal(2))
        config = SamplerConfig(leg=LegSpec(0.3, 4), psi=math.pi / 2, extra_chances=3)
        out = extra_chance_step(gauss2d, config, z, ScriptedRng(uniforms=[0.0]))
        assert out.slot == 1
        assert out.candidates_computed == 1
        assert out.force_evals == 5
        expected, _ = verlet_leg(gauss2d, LegSpec(0.3, 4), z)
        assert np.array_equal(out.next_state.x, expected.x)
        assert np.array_equal(out.next_state.y, expected.y)

    def test_forced_rejection_flips_input_momentum(self, gauss1d):
        # K = 0 with u just above the single acceptance threshold
        z = PhaseState([1.5], [1.7])
        leg = LegSpec(1.5, 1)
        sigma = sigma_sequence(gauss1d, leg, z, 0).sigma[0]
        assert sigma < 0.999  # precondition: rejection is reachable
        config = SamplerConfig(leg=leg, psi=math.pi / 2, extra_chances=0)
        out = extra_chance_step(gauss1d, config, z,
                                ScriptedRng(uniforms=[(1.0 + sigma) / 2]))
        assert out.slot == 2
        assert out.candidates_computed == 1
        assert np.array_equal(out.next_state.x, z.x)
        assert np.array_equal(out.next_state.y, -z.y)

    def test_ghmc_reduction_monte_carlo(self, gauss1d):
        # K = 0: acceptance frequency must match min(1, density ratio)
        z = PhaseState([1.5], [1.7])
        leg = LegSpec(1.5, 1)
        sigma = sigma_sequence(gauss1d, leg, z, 0).sigma[0]
        config = SamplerConfig(leg=leg, psi=math.pi / 2, extra_chances=0)
        rng = np.random.default_rng(8)
        n = 20_000
        accepted = sum(
            extra_chance_step(gauss1d, config, z, rng).slot == 1 for _ in range(n))
        se = math.sqrt(sigma * (1 - sigma) / n)
        assert abs(accepted / n - sigma) <= 3 * se

    def test_slot_frequencies_match_slot_distribution(self, dwell1d):
        z, leg, sd = _interesting_state(dwell1d, 2)
        config = SamplerConfig(leg=leg, psi=math.pi / 2, extra_chances=2)
        rng = np.random.default_rng(17)
        n = 100_000
        counts = np.zeros(4, dtype=int)
        for _ in range(n):
            counts[extra_chance_step(dwell1d, config, z, rng).slot - 1] += 1
        for k, p in enumerate(sd.p):
            if p == 0.0:
                assert counts[k] == 0
            else:
                se = math.sqrt(p * (1 - p) / n)
                assert abs(counts[k] / n - p) <= 3 * se, f"slot {k + 1}"

    def test_lazy_matches_eager_for_scripted_u(self, dwell1d):
        z, leg, sd = _interesting_state(dwell1d, 2)
        config = SamplerConfig(leg=leg, psi=math.pi / 2, extra_chances=2)
        us = np.random.default_rng(23).uniform(size=10_000)
        for u in us:
            out = extra_chance_step(dwell1d, config, z, ScriptedRng(uniforms=[u]))
            idx = int(np.searchsorted(sd.log_sigma, math.log(u), side="left"))
            expected_slot = idx + 1 if idx < sd.sigma.size else sd.sigma.size + 1
            assert out.slot == expected_slot
            # linear-space description of the same partition
            if out.slot <= sd.sigma.size:
                assert u <= sd.sigma[out.slot - 1]
                if out.slot > 1:
                    assert u > sd.sigma[out.slot - 2]
            else:
                assert u > sd.sigma[-1]
            # work accounting: a slot-k acceptance costs exactly k legs
            assert out.candidates_computed == min(out.slot, 3)
            assert out.force_evals == out.candidates_computed * (leg.steps + 1)

    def test_single_jitter_shared_by_all_legs(self, gauss1d):
        # all candidate legs of one transition must use the same jittered dt
        config = SamplerConfig(leg=LegSpec(0.4, 2), psi=math.pi / 2, extra_chances=2,
                               jitter_fraction=0.2)
        z = PhaseState([1.5], [1.7])
        perturbation = 0.1
        out = extra_chance_step(gauss1d, config, z,
                                ScriptedRng(uniforms=[0.0], jitters=[perturbation]))
        assert out.dt == pytest.approx(0.4 * 1.1, rel=1e-15)
        expected, _ = verlet_leg(gauss1d, LegSpec(out.dt, 2), z)
        assert np.array_equal(out.next_state.x, expected.x)

    def test_diverged_candidate_never_accepted(self, dwell1d):
        # u = 0 would accept anything acceptable; divergence must force the flip
        z = PhaseState([3.0], [0.0])
        config = SamplerConfig(leg=LegSpec(2.0, 50), psi=math.pi / 2, extra_chances=1)
        out = extra_chance_step(dwell1d, config, z, ScriptedRng(uniforms=[0.0]))
        assert out.slot == 3
        assert np.array_equal(out.next_state.x, z.x)
        assert np.array_equal(out.next_state.y, -z.y)
        assert out.force_evals < 2 * 51  # legs were abandoned early


class TestRunChain:
    def test_zero_transitions_records_start_only(self, gauss1d):
        z0 = PhaseState([0.3], [-0.2])
        rec = run_chain(gauss1d, SamplerConfig(leg=LegSpec(0.1, 2), psi=1.0), z0,
                        Budget(transitions=0))
        assert rec.transitions == 0
        assert rec.positions.shape == (1, 1)
        assert np.array_equal(rec.positions[0], z0.x)
        assert np.array_equal(rec.momenta[0], z0.y)

    def test_forced_rejection_keeps_position_and_flips_refreshed_momentum(self, gauss1d):
        # script the refresh noise and a u above the acceptance threshold
        zeta = 1.7
        leg = LegSpec(1.5, 1)
        zbar = PhaseState([1.5], [zeta])
        sigma = sigma_sequence(gauss1d, leg, zbar, 0).sigma[0]
        assert sigma < 0.999
        config = SamplerConfig(leg=leg, psi=math.pi / 2, extra_chances=0)
        rec = run_chain(gauss1d, config, PhaseState([1.5], [-5.0]),
                        Budget(transitions=1),
                        rng=ScriptedRng(normals=[zeta], uniforms=[(1 + sigma) / 2]))
        assert rec.slots[0] == 2
        assert np.array_equal(rec.positions[1], rec.positions[0])
        assert rec.momenta[1][0] == -zeta

    def test_force_eval_budget_stops_at_cap(self, gauss1d):
        config = SamplerConfig(leg=LegSpec(0.1, 4), psi=math.pi / 2, extra_chances=0,
                               seed=5)
        rec = run_chain(gauss1d, config, PhaseState([0.0], [1.0]),
                        Budget(force_evals=1000))
        assert rec.total_force_evals >= 1000
        assert rec.total_force_evals - rec.force_evals[-1] < 1000
        assert abs(rec.transitions - 200) <= 1  # 1000 / (L+1)

    def test_total_force_evals_counts_every_gradient_call(self, dwell2d):
        calls = {"n": 0}

        def gradient(x):
            calls["n"] += 1
            return dwell2d.gradient(x)

        counting = TargetModel(dim=2, potential=dwell2d.potential, gradient=gradient)
        config = SamplerConfig(leg=LegSpec(0.45, 3), psi=math.asin(0.8),
                               extra_chances=2, jitter_fraction=0.05, seed=11)
        rec = run_chain(counting, config, PhaseState([1.0, -1.0], [0.0, 0.0]),
                        Budget(transitions=400))
        assert rec.total_force_evals == calls["n"]

    def test_deterministic_given_seed_and_config(self, dwell2d):
        config = SamplerConfig(leg=LegSpec(0.4, 3), psi=math.asin(0.8),
                               extra_chances=3, jitter_fraction=0.05, seed=123)
        z0 = PhaseState([1.0, -1.0], [0.5, 0.5])
        a = run_chain(dwell2d, config, z0, Budget(transitions=300))
        b = run_chain(dwell2d, config, z0, Budget(transitions=300))
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.momenta, b.momenta)
        assert np.array_equal(a.slots, b.slots)
        assert np.array_equal(a.dt_used, b.dt_used)
        c = run_chain(dwell2d, config, z0, Budget(transitions=300), chain_index=1)
        assert not np.array_equal(a.positions, c.positions)

    def test_burn_in_shifts_the_recorded_stream(self, gauss1d):
        config = SamplerConfig(leg=LegSpec(0.5, 3), psi=math.asin(0.9),
                               extra_chances=1, seed=77)
        z0 = PhaseState([0.2], [0.1])
        with_burn = run_chain(gauss1d, config, z0, Budget(transitions=3, burn_in=5))
        plain = run_chain(gauss1d, config, z0, Budget(transitions=8))
        assert np.array_equal(with_burn.positions, plain.positions[5:])
        assert np.array_equal(with_burn.slots, plain.slots[5:])
        assert with_burn.burn_in == 5

    def test_budget_validation(self):
        with pytest.raises(ValueError):
            Budget()
        with pytest.raises(ValueError):
            Budget(transitions=10, force_evals=10)
        with pytest.raises(ValueError):
            Budget(transitions=-1)

    def test_stationary_moments_preserved(self, gauss1d):
        # start in equilibrium; long-run mean and variance must stay there
        config = SamplerConfig(leg=LegSpec(0.6, 3), psi=math.asin(0.9),
                               extra_chances=2, jitter_fraction=0.05, seed=314)
        rng = chain_rng(314, 0)
        z0 = PhaseState(rng.standard_normal(1), rng.standard_normal(1))
        rec = run_chain(gauss1d, config, z0, Budget(transitions=100_000), rng=rng)
        xs = rec.positions[:, 0]
        ess = ess_initial_monotone(xs)
        assert abs(xs.mean()) <= 4 * xs.std() / math.sqrt(ess)
        assert abs(xs.var() - 1.0) <= 0.05

    def test_first_slot_rate_matches_plain_acceptance_rate(self, gauss1d):
        # a0 of an extra-chance chain equals the acceptance rate of the K=0 chain
        leg = LegSpec(0.9, 3)
        n = 30_000

        def first_slot_series(extra, seed):
            config = SamplerConfig(leg=leg, psi=math.pi / 2, extra_chances=extra,
                                   seed=seed)
            rng = chain_rng(seed, 0)
            z0 = PhaseState(rng.standard_normal(1), rng.standard_normal(1))
            rec = run_chain(gauss1d, config, z0, Budget(transitions=n), rng=rng)
            return (rec.slots == 1).astype(float)

        plain = first_slot_series(0, 1001)
        extra = first_slot_series(3, 2002)
        se_plain = plain.std() / math.sqrt(ess_initial_monotone(plain))
        se_extra = extra.std() / math.sqrt(ess_initial_monotone(extra))
        combined = math.hypot(se_plain, se_extra)
        assert abs(plain.mean() - extra.mean()) <= 3 * combined


class TestLookAhead:
    def test_single_candidate_is_metropolis(self, gauss2d, rng):
        for _ in range(20):
            z = PhaseState(rng.standard_normal(2), rng.standard_normal(2))
            leg = LegSpec(0.3, 4)
            pi, cum = lahmc_probabilities(gauss2d, leg, z, 0)
            out, _ = verlet_leg(gauss2d, leg, z)
            ratio = math.exp(log_rho(gauss2d, out) - log_rho(gauss2d, z))
            assert pi[0] == pytest.approx(min(1.0, ratio), rel=1e-13)
            assert cum[-1] == pytest.approx(pi[0])

    def test_hand_worked_ratio_examples(self):
        pi, cum = lahmc_from_log_ratios(np.log([0.6, 1.2]))
        assert np.allclose(pi, [0.6, 0.4], atol=1e-12)
        assert np.allclose(cum, [0.6, 1.0], atol=1e-12)
        pi, cum = lahmc_from_log_ratios(np.log([0.6, 0.3, 0.5]))
        assert np.allclose(cum, [0.6, 0.6, 0.6], atol=1e-12)

    @given(log_ratio_vectors)
    def test_probabilities_well_formed(self, lrs):
        pi, cum = lahmc_from_log_ratios(lrs)
        assert np.all(pi >= 0.0)
        assert cum[-1] <= 1.0 + 1e-12

    @given(log_ratio_vectors)
    def test_cumulative_equals_slot_thresholds(self, lrs):
        sd = slot_distribution(lrs)
        _, cum = lahmc_from_log_ratios(lrs)
        assert np.max(np.abs(sd.sigma - cum)) <= 1e-12

    @pytest.mark.parametrize("name,dims,dt", [
        ("gaussian", 2, 0.3),
        ("double_well", 2, 0.3),
        ("banana", 2, 0.25),
    ])
    def test_equivalence_on_model_orbits(self, name, dims, dt, rng):
        model = builtin_target(name, dims)
        leg = LegSpec(dt, 3)
        for i in range(60):
            extra = (1, 2, 3, 5)[i % 4]
            z = PhaseState(rng.standard_normal(dims), rng.standard_normal(dims))
            sigma = sigma_sequence(model, leg, z, extra).sigma
            _, cum = lahmc_probabilities(model, leg, z, extra)
            assert np.max(np.abs(sigma - cum)) <= 1e-12


class TestPalindromicChain:
    def test_half_angle_relation(self):
        for psi in np.linspace(0.05, math.pi / 2, 25):
            half = palindromic_refresh_angle(float(psi))
            assert math.cos(half) ** 2 == pytest.approx(math.cos(psi), abs=1e-14)
            assert 0.0 < half <= math.pi / 2

    def test_full_refresh_maps_to_full_refresh(self):
        assert palindromic_refresh_angle(math.pi / 2) == math.pi / 2

    def test_consumes_two_refreshes_per_transition(self, gauss2d):
        config = SamplerConfig(leg=LegSpec(0.2, 2), psi=math.asin(0.5))
        normals = np.random.default_rng(4).standard_normal(3 * 4)  # 2d per transition
        rec = run_palindromic_chain(gauss2d, config, PhaseState([0.1, 0.2], [0.3, 0.4]),
                                    3, rng=ScriptedRng(normals=normals,
                                                       uniforms=[0.5, 0.5, 0.5]))
        assert rec.transitions == 3
        with pytest.raises(IndexError):
            run_palindromic_chain(gauss2d, config, PhaseState([0.1, 0.2], [0.3, 0.4]),
                                  3, rng=ScriptedRng(normals=normals[:-1],
                                                     uniforms=[0.5, 0.5, 0.5]))


class TestCoupleNoise:
    def test_rotation_preserves_norms(self, rng):
        for psi in rng.uniform(0.1, math.pi / 2, size=10):
            y_init = rng.standard_normal(3)
            pre = rng.standard_normal((1, 3))
            y0, zetas = couple_noise(float(psi), y_init, pre, np.zeros((0, 3)))
            before = np.sum(y_init**2) + np.sum(pre[0] ** 2)
            after = np.sum(y0**2) + np.sum(zetas[0] ** 2)
            assert after == pytest.approx(before, rel=1e-12)

    def test_variance_identity(self, rng):
        # cos^2(HALF) sin^2(HALF) + sin^2(HALF) = sin^2(psi), so recombined
        # noise keeps unit variance
        for psi in rng.uniform(0.1, math.pi / 2, size=10):
            half = palindromic_refresh_angle(float(psi))
            lhs = (math.cos(half) * math.sin(half)) ** 2 + math.sin(half) ** 2
            assert abs(lhs - math.sin(psi) ** 2) <= 1e-12

    def test_full_refresh_coupling_is_identity(self, rng):
        y_init = rng.standard_normal(2)
        pre = rng.standard_normal((5, 2))
        post = rng.standard_normal((5, 2))
        y0, zetas = couple_noise(math.pi / 2, y_init, pre, post)
        assert np.array_equal(y0, y_init)
        assert np.array_equal(zetas, pre)

    @pytest.mark.parametrize("sin_psi", [0.25, 0.5, 1.0])
    def test_coupled_chains_share_positions(self, gauss2d, sin_psi):
        psi = math.asin(sin_psi)
        config = SamplerConfig(leg=LegSpec(0.25, 5), psi=psi, extra_chances=2)
        rng = np.random.default_rng(42)
        n, d = 100, 2
        pre = rng.standard_normal((n, d))
        post = rng.standard_normal((n, d))
        us = rng.uniform(size=n)
        x0 = rng.standard_normal(d)
        y_init = rng.standard_normal(d)

        interleaved = np.empty((n, 2 * d))
        interleaved[:, :d] = pre
        interleaved[:, d:] = post
        palindromic = run_palindromic_chain(
            gauss2d, config, PhaseState(x0, y_init), n,
            rng=ScriptedRng(normals=interleaved.ravel(), uniforms=us))

        y0, zetas = couple_noise(psi, y_init, pre, post)
        single = run_chain(gauss2d, config, PhaseState(x0, y0),
                           Budget(transitions=n),
                           rng=ScriptedRng(normals=zetas.ravel(), uniforms=us))

        scale = max(1.0, float(np.abs(palindromic.positions).max()))
        gap = float(np.abs(palindromic.positions - single.positions).max()) / scale
        assert gap <= 1e-12
        # outcome metadata agrees as well: same u draws, same candidates
        assert np.array_equal(palindromic.slots, single.slots)

    def test_double_well_coupling_short_horizon(self, dwell1d):
        psi = math.asin(0.5)
        config = SamplerConfig(leg=LegSpec(0.3, 3), psi=psi, extra_chances=1)
        rng = np.random.default_rng(9)
        n = 30
        pre = rng.standard_normal((n, 1))
        post = rng.standard_normal((n, 1))
        us = rng.uniform(size=n)
        x0 = rng.standard_normal(1)
        y_init = rng.standard_normal(1)
        interleaved = np.column_stack([pre, post])
        palindromic = run_palindromic_chain(
            dwell1d, config, PhaseState(x0, y_init), n,
            rng=ScriptedRng(normals=interleaved.ravel(), uniforms=us))
        y0, zetas = couple_noise(psi, y_init, pre, post)
        single = run_chain(dwell1d, config, PhaseState(x0, y0),
                           Budget(transitions=n),
                           rng=ScriptedRng(normals=zetas.ravel(), uniforms=us))
        assert np.allclose(palindromic.positions, single.positions, atol=1e-10)


class TestSlotStatsIntegration:
    def test_extra_chances_raise_total_acceptance_at_large_dt(self, dwell2d):
        # same step size, more chances: less probability left for the flip
        def chain(extra, seed):
            config = SamplerConfig(leg=LegSpec(0.45, 5), psi=math.pi / 2,
                                   extra_chances=extra, seed=seed)
            rng = chain_rng(seed, 0)
            z0 = PhaseState([1.0, -1.0], [0.0, 0.0])
            rec = run_chain(dwell2d, config, z0,
                            Budget(transitions=4000, burn_in=200), rng=rng)
            return slot_stats(rec)

        plain = chain(0, 51)
        ahead = chain(3, 52)
        assert ahead.total_acceptance > plain.total_acceptance
        assert ahead.flip_fraction < plain.flip_fraction
