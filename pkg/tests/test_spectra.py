import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dregsim import (Dataset, ProblemInstance, Spectrum,
                     build_polynomial_spectrum, build_spiked_spectrum,
                     power_law_instance, sample_dataset, split_dataset,
                     split_discard_count)
from dregsim.rng import child_sequence


class TestSpectrumType:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            Spectrum([1.0, 0.0])

    def test_rejects_increasing(self):
        with pytest.raises(ValueError):
            Spectrum([0.5, 1.0])

    def test_tail_sums(self):
        s = Spectrum([1.0, 0.5, 0.25])
        assert s.trace == pytest.approx(1.75)
        assert s.tail_sum(1) == pytest.approx(0.75)
        assert s.tail_sq_sum(1) == pytest.approx(0.3125)
        assert s.tail_sum(3) == 0.0


class TestPolynomialSpectrum:
    def test_single_eigenvalue(self):
        assert build_polynomial_spectrum(1, 1.0).eigenvalues.tolist() == [1.0]

    def test_inverse_square(self):
        got = build_polynomial_spectrum(3, 1.0).eigenvalues
        np.testing.assert_allclose(got, [1.0, 0.25, 1.0 / 9.0], rtol=1e-15)

    def test_fractional_exponent(self):
        got = build_polynomial_spectrum(2, 0.5).eigenvalues
        np.testing.assert_allclose(got, [1.0, 2.0**-1.5], rtol=1e-15)

    @pytest.mark.parametrize("d,r", [(0, 1.0), (3, 0.0), (3, -1.0)])
    def test_invalid_arguments(self, d, r):
        with pytest.raises(ValueError):
            build_polynomial_spectrum(d, r)

    @given(d=st.integers(1, 200), r=st.floats(0.05, 4.0))
    @settings(max_examples=50, deadline=None)
    def test_positive_nonincreasing(self, d, r):
        lam = build_polynomial_spectrum(d, r).eigenvalues
        assert np.all(lam > 0)
        assert np.all(np.diff(lam) <= 0)


class TestSpikedSpectrum:
    def test_two_level_blocks(self):
        s = build_spiked_spectrum(4, 2.0, 1.0)
        assert s.d == 16
        np.testing.assert_allclose(s.eigenvalues[:4], 0.25)
        np.testing.assert_allclose(s.eigenvalues[4:], 1.0 / 12.0)
        assert abs(s.trace - 2.0) <= 1e-12

    def test_equal_blocks(self):
        s = build_spiked_spectrum(2, 2.0, 1.0)
        assert s.d == 4
        np.testing.assert_allclose(s.eigenvalues, 0.5)

    def test_degenerate_blocks_rejected(self):
        with pytest.raises(ValueError):
            build_spiked_spectrum(4, 1.01, 1.0)

    @pytest.mark.parametrize("n,q,r", [(4, 1.0, 1.0), (4, 2.0, 0.0), (4, 2.0, 1.5), (0, 2.0, 1.0)])
    def test_invalid_parameters(self, n, q, r):
        with pytest.raises(ValueError):
            build_spiked_spectrum(n, q, r)

    @given(n=st.integers(2, 40), q=st.floats(1.1, 3.0), r=st.floats(0.05, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_trace_two_whenever_valid(self, n, q, r):
        try:
            s = build_spiked_spectrum(n, q, r)
        except ValueError:
            return
        assert abs(s.trace - 2.0) <= 1e-12
        assert np.all(np.diff(s.eigenvalues) <= 0)
        assert np.all(s.eigenvalues > 0)


def _toy_instance(d=2, noise=0.0, covariates="gaussian"):
    lam = [1.0, 0.25][:d]
    return ProblemInstance(Spectrum(lam), np.ones(d), noise_std=noise,
                           covariates=covariates)


class TestSampleDataset:
    def test_noiseless_responses_exact(self):
        inst = _toy_instance()
        data = sample_dataset(inst, 50, 3)
        np.testing.assert_array_equal(data.responses,
                                      data.covariates @ inst.target)

    def test_zero_target_zero_responses(self):
        inst = ProblemInstance(Spectrum([1.0, 0.25]), np.zeros(2), noise_std=0.0)
        data = sample_dataset(inst, 20, 3)
        assert np.all(data.responses == 0.0)

    def test_deterministic_given_seed(self):
        inst = _toy_instance(noise=1.0)
        a = sample_dataset(inst, 25, 11)
        b = sample_dataset(inst, 25, 11)
        np.testing.assert_array_equal(a.covariates, b.covariates)
        np.testing.assert_array_equal(a.responses, b.responses)
        c = sample_dataset(inst, 25, 12)
        assert not np.array_equal(a.covariates, c.covariates)

    def test_second_moments_match_spectrum(self):
        # Diagonal within 5 * sqrt(3 lam_j^2 / n), off-diagonal within
        # 5 * sqrt(lam_i lam_j / n), per the Gaussian fourth moment.
        inst = _toy_instance()
        n = 100_000
        x = sample_dataset(inst, n, 123).covariates
        lam = inst.spectrum.eigenvalues
        second = x.T @ x / n
        for j in range(2):
            tol = 5.0 * np.sqrt(3.0 * lam[j] ** 2 / n)
            assert abs(second[j, j] - lam[j]) <= tol
        tol_off = 5.0 * np.sqrt(lam[0] * lam[1] / n)
        assert abs(second[0, 1]) <= tol_off

    def test_rademacher_moments(self):
        inst = _toy_instance(covariates="rademacher")
        n = 50_000
        x = sample_dataset(inst, n, 5).covariates
        lam = inst.spectrum.eigenvalues
        # Rademacher coordinates have zero fourth-moment excess: x_j^2 is
        # exactly lam_j sample by sample.
        np.testing.assert_allclose(np.mean(x**2, axis=0), lam, rtol=1e-12)

    def test_noise_level(self):
        inst = power_law_instance(build_polynomial_spectrum(3, 1.0), 1.0, 2.0)
        n = 100_000
        data = sample_dataset(inst, n, 77)
        resid = data.responses - data.covariates @ inst.target
        assert abs(np.std(resid) - 2.0) <= 5.0 * 2.0 / np.sqrt(2 * n)

    def test_invalid_n(self):
        with pytest.raises(ValueError):
            sample_dataset(_toy_instance(), 0, 1)


class TestSplitDataset:
    def _data(self, n):
        x = np.arange(n, dtype=float).reshape(n, 1)
        return Dataset(x, np.arange(n, dtype=float))

    def test_even_split(self):
        shards = split_dataset(self._data(10), 2)
        assert [s.n for s in shards] == [5, 5]
        assert split_discard_count(10, 2) == 0

    def test_floor_division_discards(self):
        shards = split_dataset(self._data(10), 3)
        assert [s.n for s in shards] == [3, 3, 3]
        assert split_discard_count(10, 3) == 1

    def test_single_shard_is_whole_dataset(self):
        data = self._data(5)
        (shard,) = split_dataset(data, 1)
        np.testing.assert_array_equal(shard.covariates, data.covariates)
        np.testing.assert_array_equal(shard.responses, data.responses)

    def test_shards_are_prefix_in_order(self):
        data = self._data(11)
        shards = split_dataset(data, 4)
        merged = np.concatenate([s.covariates for s in shards])
        np.testing.assert_array_equal(merged, data.covariates[: 4 * 2])
        flat = merged.ravel()
        assert len(set(flat.tolist())) == flat.size  # disjoint samples

    def test_too_many_nodes(self):
        with pytest.raises(ValueError):
            split_dataset(self._data(3), 4)


class TestStreamDerivation:
    def test_child_sequences_are_stable(self):
        a = child_sequence(42, 3, 1)
        b = child_sequence(42, 3, 1)
        assert a.entropy == b.entropy and a.spawn_key == b.spawn_key
        c = child_sequence(42, 3, 2)
        assert c.spawn_key != a.spawn_key
