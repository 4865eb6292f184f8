import math

import numpy as np
import pytest

from microdoppler.features import (
    EmbeddingConfig,
    MseConfig,
    TIME_DOMAIN_NAMES,
    approximate_entropy,
    build_feature_vector,
    coarse_grain,
    feature_schema,
    multiscale_entropy,
    permutation_entropy,
    spectral_features,
    time_domain_features,
    write_feature_csv,
)
from microdoppler.signals import ComplexSignal


def brute_force_apen(x, m, r):
    """Naive O(N^2) reference with self-matches included."""
    x = np.asarray(x, dtype=float)
    n = x.size

    def phi(mm):
        nm = n - mm + 1
        templates = np.array([x[i : i + mm] for i in range(nm)])
        total = 0.0
        for i in range(nm):
            dist = np.max(np.abs(templates - templates[i]), axis=1)
            total += math.log(np.count_nonzero(dist <= r) / nm)
        return total / nm

    return phi(m) - phi(m + 1)


class TestTimeDomain:
    def test_constant_series_has_zero_dispersion(self):
        with pytest.raises(ValueError, match="zero dispersion"):
            time_domain_features(np.ones(16))

    def test_symmetric_two_level(self):
        feats = time_domain_features([3.0, -3.0, 3.0, -3.0])
        assert feats["td_mean"] == 0.0
        assert feats["td_rms"] == pytest.approx(3.0)
        assert feats["td_abs_mean"] == pytest.approx(3.0)
        assert feats["td_shape_factor"] == pytest.approx(1.0)
        assert feats["td_peak"] == pytest.approx(3.0)
        assert feats["td_impulse_factor"] == pytest.approx(1.0)

    def test_ramp_values(self):
        feats = time_domain_features([0.0, 1.0, 2.0, 3.0])
        assert feats["td_mean"] == pytest.approx(1.5)
        assert feats["td_variance"] == pytest.approx(1.25)
        assert feats["td_peak_to_peak"] == pytest.approx(3.0)
        assert feats["td_rms"] == pytest.approx(math.sqrt(3.5))

    def test_full_name_order(self):
        feats = time_domain_features(np.arange(10.0))
        assert tuple(feats.keys()) == TIME_DOMAIN_NAMES


class TestSpectral:
    def test_pure_tone_centroid(self):
        fs = 2000.0
        t = np.arange(2000) / fs
        feats = spectral_features(np.sin(2 * np.pi * 200 * t), fs)
        bin_width = fs / 2000
        assert abs(feats["fd_centroid_hz"] - 200.0) <= bin_width
        assert feats["fd_freq_std_hz"] <= bin_width
        assert abs(feats["fd_peak_freq_hz"] - 200.0) <= bin_width

    def test_white_noise_entropy_is_near_maximal(self):
        # raw periodogram entropy has an asymptotic 1-gamma bias, so the
        # 5% band needs a long series
        rng = np.random.default_rng(2)
        x = rng.standard_normal(16384)
        feats = spectral_features(x, 1000.0)
        n_bins = 16384 // 2 + 1
        assert feats["fd_spectral_entropy"] >= 0.95 * math.log(n_bins)

    def test_dc_series(self):
        feats = spectral_features(np.full(64, 2.0), 100.0)
        assert feats["fd_centroid_hz"] == 0.0
        assert feats["fd_peak_freq_hz"] == 0.0

    def test_zero_energy_rejected(self):
        with pytest.raises(ValueError, match="zero-energy signal"):
            spectral_features(np.zeros(64), 100.0)


class TestApproximateEntropy:
    def test_near_constant_is_perfectly_regular(self):
        x = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0 + 1e-15])
        assert abs(approximate_entropy(x, EmbeddingConfig(m=2))) <= 1e-9

    def test_alternating_hand_value(self):
        # +-1 with m=2 and absolute r=0.5 (std is exactly 1)
        x = np.array([1.0, -1.0, 1.0, -1.0, 1.0, -1.0])
        got = approximate_entropy(x, EmbeddingConfig(m=2, r_rel=0.5))
        expected = (3 * math.log(3 / 5) + 2 * math.log(2 / 5)) / 5 - math.log(1 / 2)
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.0201, abs=1e-4)

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(30, 200))
        x = rng.standard_normal(n)
        cfg = EmbeddingConfig(m=2, r_rel=0.2)
        r = cfg.r_rel * np.std(x)
        assert approximate_entropy(x, cfg) == pytest.approx(brute_force_apen(x, 2, r), abs=1e-12)

    def test_offset_invariance(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal(128)
        a = approximate_entropy(x)
        b = approximate_entropy(x + 100.0)
        assert a == pytest.approx(b, abs=1e-9)

    def test_too_short(self):
        with pytest.raises(ValueError, match="series too short"):
            approximate_entropy(np.array([1.0, 2.0, 3.0]), EmbeddingConfig(m=2))


class TestPermutationEntropy:
    def test_monotone_has_single_pattern(self):
        assert permutation_entropy([1.0, 2.0, 3.0, 4.0, 5.0], EmbeddingConfig(m=2)) == 0.0

    def test_two_pattern_split(self):
        got = permutation_entropy([3.0, 1.0, 2.0], EmbeddingConfig(m=2))
        assert got == pytest.approx(math.log(2))

    def test_bounds(self):
        rng = np.random.default_rng(5)
        for m in (2, 3, 4):
            x = rng.standard_normal(500)
            pe = permutation_entropy(x, EmbeddingConfig(m=m))
            assert 0.0 <= pe <= math.log(math.factorial(m)) + 1e-12

    def test_iid_noise_approaches_maximal(self):
        rng = np.random.default_rng(10)
        x = rng.standard_normal(100_000)
        pe = permutation_entropy(x, EmbeddingConfig(m=3))
        assert pe == pytest.approx(math.log(6), rel=0.02)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal(256)
        a = permutation_entropy(x, EmbeddingConfig(m=3))
        b = permutation_entropy(np.exp(x) + 5.0, EmbeddingConfig(m=3))
        assert a == pytest.approx(b, abs=1e-12)

    def test_tie_breaking_prefers_earlier_index(self):
        # (2, 2) ranks as "up" because the earlier index takes the lower rank
        up_only = permutation_entropy([2.0, 2.0, 2.0], EmbeddingConfig(m=2))
        assert up_only == 0.0


class TestCoarseGrain:
    def test_pairs(self):
        assert coarse_grain([1.0, 2.0, 3.0, 4.0], 2).tolist() == [1.5, 3.5]

    def test_identity_scale(self):
        x = np.arange(7.0)
        assert np.array_equal(coarse_grain(x, 1), x)

    def test_trailing_block_dropped(self):
        assert coarse_grain([1.0, 2.0, 3.0, 4.0, 5.0], 2).tolist() == [1.5, 3.5]

    def test_scale_too_large(self):
        with pytest.raises(ValueError):
            coarse_grain([1.0, 2.0], 3)

    def test_mean_preserved_over_retained_samples(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(100)
        for eps in (1, 2, 3, 7):
            kept = x[: (len(x) // eps) * eps]
            assert np.mean(coarse_grain(x, eps)) == pytest.approx(np.mean(kept), abs=1e-12)


class TestMultiscaleEntropy:
    def test_constant_series_is_zero_at_all_scales(self):
        mse = multiscale_entropy(np.ones(100), MseConfig(max_scale=5))
        assert np.all(mse == 0.0)

    def test_first_element_is_plain_apen(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal(300)
        cfg = MseConfig(max_scale=3)
        mse = multiscale_entropy(x, cfg)
        assert mse[0] == approximate_entropy(x, cfg.base)

    def test_composition_oracle(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal(400)
        cfg = MseConfig(max_scale=4)
        mse = multiscale_entropy(x, cfg)
        for eps in range(1, 5):
            expected = approximate_entropy(coarse_grain(x, eps), cfg.base)
            assert mse[eps - 1] == pytest.approx(expected, abs=1e-12)


class TestFeatureVector:
    def make_signal(self, seed=0, n=1200):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        return ComplexSignal(x, 2000.0)

    def test_default_schema_is_34_features(self):
        vec = build_feature_vector(self.make_signal())
        assert vec.valid
        assert len(vec.values) == 34
        assert vec.schema == feature_schema()
        assert vec.schema[:14] == TIME_DOMAIN_NAMES

    def test_deterministic(self):
        a = build_feature_vector(self.make_signal(3))
        b = build_feature_vector(self.make_signal(3))
        assert np.array_equal(a.values, b.values)

    def test_scaling_homogeneity(self):
        sig = self.make_signal(4)
        doubled = ComplexSignal(2.0 * sig.samples, sig.sample_rate_hz)
        a = dict(zip(*(build_feature_vector(sig).schema, build_feature_vector(sig).values)))
        b = dict(zip(*(build_feature_vector(doubled).schema, build_feature_vector(doubled).values)))
        # degree-1 statistics double, degree-2 quadruple, dimensionless hold
        for name in ("td_mean", "td_rms", "td_abs_mean", "td_peak", "td_peak_to_peak"):
            assert b[name] == pytest.approx(2.0 * a[name], rel=1e-9)
        assert b["td_variance"] == pytest.approx(4.0 * a["td_variance"], rel=1e-9)
        for name in ("td_shape_factor", "td_impulse_factor", "td_skewness", "td_kurtosis"):
            assert b[name] == pytest.approx(a[name], rel=1e-9)
        # rank patterns are scale-invariant
        assert b["perm_entropy"] == pytest.approx(a["perm_entropy"], abs=1e-12)

    def test_group_subsets(self):
        sig = self.make_signal(5)
        td_only = build_feature_vector(sig, groups=("time_domain",))
        assert len(td_only.values) == 14
        ent_only = build_feature_vector(sig, groups=("entropy",))
        assert len(ent_only.values) == 7

    def test_invalid_vector_names_failing_group(self):
        sig = ComplexSignal(np.ones(64, dtype=complex), 100.0)  # |x| constant
        vec = build_feature_vector(sig)
        assert not vec.valid
        assert vec.error.startswith("time_domain:")

    def test_csv_round_trip(self, tmp_path):
        vectors = [build_feature_vector(self.make_signal(s), source_id=f"sig{s}") for s in (0, 1)]
        path = tmp_path / "features.csv"
        write_feature_csv(vectors, path, labels=["a", "b"])
        lines = path.read_text().strip().split("\n")
        assert lines[0].split(",")[:2] == ["source_id", "label"]
        assert len(lines) == 3
        row = lines[1].split(",")
        assert row[0] == "sig0" and row[1] == "a"
        assert np.allclose([float(v) for v in row[2:]], vectors[0].values)
