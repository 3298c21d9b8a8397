import numpy as np
import pytest

from dregsim import (Dataset, DivergenceError, ProblemInstance, SgdConfig,
                     Spectrum, build_polynomial_spectrum, power_law_instance,
                     run_dsgd, run_local_sgd, sample_dataset,
                     simulate_bias_paths, simulate_decomposition,
                     simulate_variance_paths)
from dregsim.rng import child_sequence


def _scalar_data(pairs):
    x = np.array([[p[0]] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    return Dataset(x, y)


class TestSgdConfig:
    def test_rejects_zero_stepsize(self):
        with pytest.raises(ValueError):
            SgdConfig(stepsize=0.0)

    def test_rejects_bad_tail_fraction(self):
        for f in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                SgdConfig(stepsize=0.1, averaging="tail", tail_fraction=f)

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            SgdConfig(stepsize=0.1, averaging="median")


class TestLocalSgd:
    # Hand recursion for two samples (x=1, y=1), stepsize 0.5, start at 0:
    # iterates 0, 0.5, 0.75.
    def test_full_average(self):
        out = run_local_sgd(_scalar_data([(1, 1), (1, 1)]), SgdConfig(stepsize=0.5))
        assert out.coefficients[0] == pytest.approx(0.25, abs=1e-12)
        assert out.last_iterate[0] == pytest.approx(0.75, abs=1e-12)

    def test_tail_average(self):
        cfg = SgdConfig(stepsize=0.5, averaging="tail", tail_fraction=0.5)
        out = run_local_sgd(_scalar_data([(1, 1), (1, 1)]), cfg)
        assert out.coefficients[0] == pytest.approx(0.5, abs=1e-12)

    def test_last_iterate(self):
        cfg = SgdConfig(stepsize=0.5, averaging="last_iterate")
        out = run_local_sgd(_scalar_data([(1, 1), (1, 1)]), cfg)
        assert out.coefficients[0] == pytest.approx(0.75, abs=1e-12)

    def test_zero_covariates_keep_initial(self):
        data = _scalar_data([(0, 1), (0, -2), (0, 3)])
        cfg = SgdConfig(stepsize=2.0, initial_point=np.array([1.5]))
        out = run_local_sgd(data, cfg)
        assert out.coefficients[0] == 1.5
        assert out.last_iterate[0] == 1.5

    def test_optimum_is_fixed_point(self):
        inst = power_law_instance(build_polynomial_spectrum(4, 1.0), 1.0, 0.0)
        data = sample_dataset(inst, 30, 5)
        cfg = SgdConfig(stepsize=0.3, initial_point=inst.target)
        out = run_local_sgd(data, cfg)
        np.testing.assert_array_equal(out.coefficients, inst.target)
        np.testing.assert_array_equal(out.last_iterate, inst.target)

    def test_empty_shard_rejected(self):
        data = Dataset(np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ValueError):
            run_local_sgd(data, SgdConfig(stepsize=0.1))

    def test_divergence_carries_step(self):
        data = _scalar_data([(10, 0)] * 400)
        with pytest.raises(DivergenceError) as exc:
            run_local_sgd(data, SgdConfig(stepsize=1.0,
                                          initial_point=np.array([1.0])))
        assert exc.value.step >= 1


class TestDsgd:
    def test_single_node_matches_local(self):
        inst = power_law_instance(build_polynomial_spectrum(3, 1.0), 1.0, 1.0)
        data = sample_dataset(inst, 40, 9)
        cfg = SgdConfig(stepsize=0.2)
        agg = run_dsgd(data, 1, cfg)
        loc = run_local_sgd(data, cfg)
        np.testing.assert_array_equal(agg.coefficients, loc.coefficients)
        assert agg.node_count == 1

    def test_identical_shards_average_to_local(self):
        data = _scalar_data([(1, 1), (1, 1), (1, 1), (1, 1)])
        cfg = SgdConfig(stepsize=0.5, averaging="tail", tail_fraction=0.5)
        out = run_dsgd(data, 2, cfg)
        assert out.coefficients[0] == pytest.approx(0.5, abs=1e-12)

    def test_aggregate_is_mean_of_locals(self):
        inst = power_law_instance(build_polynomial_spectrum(4, 1.0), 0.0, 1.0)
        data = sample_dataset(inst, 36, 2)
        cfg = SgdConfig(stepsize=0.2)
        agg = run_dsgd(data, 3, cfg)
        from dregsim import split_dataset
        locals_ = [run_local_sgd(s, cfg).coefficients for s in split_dataset(data, 3)]
        np.testing.assert_allclose(agg.coefficients, np.mean(locals_, axis=0),
                                   rtol=1e-12, atol=1e-15)

    def test_node_permutation_invariance(self):
        inst = power_law_instance(build_polynomial_spectrum(4, 1.0), 1.0, 1.0)
        data = sample_dataset(inst, 30, 4)
        cfg = SgdConfig(stepsize=0.2)
        base = run_dsgd(data, 3, cfg).coefficients
        # swap the first and last shard blocks
        x, y = data.covariates.copy(), data.responses.copy()
        x[:10], x[20:30] = data.covariates[20:30], data.covariates[:10]
        y[:10], y[20:30] = data.responses[20:30], data.responses[:10]
        permuted = run_dsgd(Dataset(x, y), 3, cfg).coefficients
        np.testing.assert_allclose(permuted, base, atol=1e-12)

    def test_noiseless_from_optimum_returns_optimum(self):
        inst = power_law_instance(build_polynomial_spectrum(5, 1.0), 2.0, 0.0)
        data = sample_dataset(inst, 40, 17)
        cfg = SgdConfig(stepsize=0.25, initial_point=inst.target)
        out = run_dsgd(data, 4, cfg)
        np.testing.assert_array_equal(out.coefficients, inst.target)

    def test_divergence_propagates(self):
        x = np.full((400, 1), 10.0)
        data = Dataset(x, np.zeros(400))
        cfg = SgdConfig(stepsize=1.0, initial_point=np.array([1.0]))
        with pytest.raises(DivergenceError):
            run_dsgd(data, 2, cfg)


def _unit_instance(noise=1.0):
    return ProblemInstance(Spectrum([1.0]), np.array([1.0]), noise_std=noise)


class TestBiasPaths:
    def test_zero_initial_error_is_absorbing(self):
        inst = _unit_instance()
        cfg = SgdConfig(stepsize=0.3, initial_point=inst.target)
        paths = simulate_bias_paths(inst, 10, 2, cfg, replicates=4, seed=1)
        assert np.all(paths == 0.0)

    def test_hand_recursion_single_step(self):
        # b_1 = -1; with one sample x = 1 and stepsize 0.5, b_2 = -0.5.
        inst = ProblemInstance(Spectrum([1.0]), np.array([1.0]), noise_std=0.0,
                               covariates="rademacher")
        cfg = SgdConfig(stepsize=0.5, averaging="last_iterate")
        paths = simulate_bias_paths(inst, 1, 1, cfg, replicates=3, seed=2)
        # Rademacher draws give x^2 = 1 deterministically.
        np.testing.assert_allclose(paths, -0.5, atol=1e-15)

    def test_mean_tracks_geometric_decay(self):
        # E[b_t] = (1 - stepsize * lam)^(t-1) * b_1 in one dimension.
        inst = _unit_instance()
        cfg = SgdConfig(stepsize=0.1, averaging="last_iterate")
        reps = 4000
        for t in (2, 5, 8):
            paths = simulate_bias_paths(inst, t - 1, 1, cfg, replicates=reps, seed=t)
            mean = float(np.mean(paths))
            stderr = float(np.std(paths, ddof=1) / np.sqrt(reps))
            expected = -((1.0 - 0.1) ** (t - 1))
            assert abs(mean - expected) <= 5.0 * stderr


class TestVariancePaths:
    def test_zero_noise_paths_are_zero(self):
        inst = _unit_instance(noise=0.0)
        cfg = SgdConfig(stepsize=0.3)
        paths = simulate_variance_paths(inst, 12, 3, cfg, replicates=4, seed=3)
        assert np.all(paths == 0.0)

    def test_hand_recursion_single_step(self):
        # v_1 = 0; v_2 = stepsize * eps_1 * x_1, and with rademacher draws the
        # update magnitude is |eps_1| which we can recover from the draw.
        inst = ProblemInstance(Spectrum([1.0]), np.array([0.0]), noise_std=1.0,
                               covariates="rademacher")
        cfg = SgdConfig(stepsize=0.5, averaging="last_iterate")
        paths = simulate_variance_paths(inst, 1, 1, cfg, replicates=5, seed=4)
        from dregsim.spectra import draw_covariates, draw_noise
        from dregsim.rng import generator
        for rep in range(5):
            x = draw_covariates(inst, 1, generator(4, rep, 0))[0, 0]
            eps = draw_noise(inst, 1, generator(4, rep, 1))[0]
            assert paths[rep, 0] == pytest.approx(0.5 * eps * x, abs=1e-15)

    def test_mean_is_zero(self):
        inst = _unit_instance()
        cfg = SgdConfig(stepsize=0.1, averaging="last_iterate")
        reps = 4000
        paths = simulate_variance_paths(inst, 4, 1, cfg, replicates=reps, seed=6)
        mean = float(np.mean(paths))
        stderr = float(np.std(paths, ddof=1) / np.sqrt(reps))
        assert abs(mean) <= 5.0 * stderr


class TestDecompositionIdentity:
    @pytest.mark.parametrize("mode", ["full", "tail", "last_iterate"])
    def test_centered_estimate_equals_path_sum(self, mode):
        # The estimate, drift and noise recursions share streams, so the
        # centered aggregated estimate must equal drift + noise pointwise.
        inst = power_law_instance(build_polynomial_spectrum(6, 1.0), 1.0, 0.7)
        cfg = SgdConfig(stepsize=0.2, averaging=mode)
        n, nodes, reps, seed = 48, 4, 5, 123
        paths = simulate_decomposition(inst, n, nodes, cfg, reps, seed)
        for rep in range(reps):
            data = sample_dataset(inst, n, child_sequence(seed, rep))
            out = run_dsgd(data, nodes, cfg)
            centered = out.coefficients - inst.target
            np.testing.assert_allclose(
                centered, paths.bias[rep] + paths.variance[rep], atol=1e-10)

    def test_bias_and_variance_sims_share_covariates(self):
        inst = power_law_instance(build_polynomial_spectrum(4, 1.0), 1.0, 1.0)
        cfg = SgdConfig(stepsize=0.2)
        joint = simulate_decomposition(inst, 24, 2, cfg, 3, seed=9)
        bias_only = simulate_bias_paths(inst, 24, 2, cfg, 3, seed=9)
        var_only = simulate_variance_paths(inst, 24, 2, cfg, 3, seed=9)
        np.testing.assert_array_equal(joint.bias, bias_only)
        np.testing.assert_array_equal(joint.variance, var_only)
