import math

import numpy as np
import pytest
from scipy import stats

from hybridrelay.pointprocess import (
    NetworkGeometry,
    distance_to_source,
    sample_ppp,
    trial_seed,
)
from hybridrelay.simulation import _realize


class TestNetworkGeometry:
    def test_invariants(self):
        with pytest.raises(ValueError):
            NetworkGeometry(r_sd_m=10.0, r_c_m=0.0, density_rf_per_m2=1e-4, density_thz_per_m2=1e-4)
        with pytest.raises(ValueError):
            NetworkGeometry(r_sd_m=-1.0, r_c_m=100.0, density_rf_per_m2=1e-4, density_thz_per_m2=1e-4)
        with pytest.raises(ValueError):
            NetworkGeometry(r_sd_m=0.0, r_c_m=100.0, density_rf_per_m2=-1e-4, density_thz_per_m2=1e-4)


class TestSamplePpp:
    def test_zero_density_empty(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            rho, theta = sample_ppp(0.0, 200.0, rng)
            assert len(rho) == 0 and len(theta) == 0

    def test_mean_count(self):
        rng = np.random.default_rng(1)
        counts = [len(sample_ppp(4e-3, 200.0, rng)[0]) for _ in range(10_000)]
        expected = 4e-3 * math.pi * 200.0**2
        assert np.mean(counts) == pytest.approx(expected, rel=1e-2)

    def test_radial_uniformity(self):
        rng = np.random.default_rng(2)
        rho, _ = sample_ppp(4e-3, 200.0, rng)
        while len(rho) < 100_000:
            rho = np.concatenate([rho, sample_ppp(4e-3, 200.0, rng)[0]])
        assert np.mean(rho**2) == pytest.approx(200.0**2 / 2.0, rel=1e-2)

    def test_angular_uniformity(self):
        rng = np.random.default_rng(3)
        _, theta = sample_ppp(2e-3, 200.0, rng)
        assert stats.kstest(theta / (2.0 * math.pi), "uniform").pvalue > 0.01


class TestDistanceToSource:
    def test_relay_at_source(self):
        assert distance_to_source(40.0, 0.0, 40.0) == pytest.approx(0.0, abs=1e-9)

    def test_collinear_opposite(self):
        assert distance_to_source(25.0, math.pi, 40.0) == pytest.approx(65.0, rel=1e-12)

    def test_right_triangle(self):
        assert distance_to_source(3.0, math.pi / 2.0, 4.0) == pytest.approx(5.0, rel=1e-12)

    def test_rounding_clamped(self):
        # radicand can round slightly negative when the relay sits on the source
        d = distance_to_source(1e8, 0.0, 1e8)
        assert d >= 0.0

    def test_negative_rho_rejected(self):
        with pytest.raises(ValueError):
            distance_to_source(-1.0, 0.0, 10.0)


def test_band_fields_independent(toy_ctx):
    rng = np.random.default_rng(4)
    counts = np.array([
        (len(_realize(toy_ctx, rng).rf), len(_realize(toy_ctx, rng).thz))
        for _ in range(10_000)
    ], dtype=float)
    corr = np.corrcoef(counts[:, 0], counts[:, 1])[0, 1]
    assert abs(corr) < 0.02


def test_trial_seed_deterministic_and_distinct():
    a = np.random.default_rng(trial_seed(123, 7)).random(4)
    b = np.random.default_rng(trial_seed(123, 7)).random(4)
    c = np.random.default_rng(trial_seed(123, 8)).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
