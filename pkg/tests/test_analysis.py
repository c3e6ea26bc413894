import math

import numpy as np
import pytest

from hybridrelay.analysis import (
    AnalysisContext,
    assoc_prob_rf,
    assoc_prob_thz,
    boundary_r2t,
    boundary_t2r,
    coverage_direct,
    coverage_hrs,
    coverage_single_band,
    nearest_ccdf,
    nearest_pdf,
    thinned_density_rf,
    thinned_density_thz,
)
from hybridrelay.channel import Band, rate_to_threshold, rf_mean_snr, thz_mean_snr
from hybridrelay.numerics import (
    QuadratureSpec,
    gamma_upper_regularized,
    integrate_polar,
    integrate_radial,
)
from hybridrelay.pointprocess import NetworkGeometry
from hybridrelay.simulation import _qualified_mask, _realize

from conftest import make_thz_params

TIGHT = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10, max_subdivisions=2000)


def zero_tau_ctx(cfg, density_rf=None, density_thz=None):
    geom = cfg.geometry
    if density_rf is not None or density_thz is not None:
        geom = NetworkGeometry(
            r_sd_m=geom.r_sd_m, r_c_m=geom.r_c_m,
            density_rf_per_m2=geom.density_rf_per_m2 if density_rf is None else density_rf,
            density_thz_per_m2=geom.density_thz_per_m2 if density_thz is None else density_thz,
        )
    return AnalysisContext(rf=cfg.rf, thz=cfg.thz, geom=geom, tau_rf=0.0, tau_thz=0.0)


class TestThinnedDensities:
    def test_zero_threshold_keeps_everything(self, baseline_cfg):
        ctx = zero_tau_ctx(baseline_cfg)
        assert thinned_density_rf(ctx, 120.0, 1.0) == ctx.geom.density_rf_per_m2
        assert thinned_density_thz(ctx, 120.0, 1.0) == ctx.geom.density_thz_per_m2

    def test_at_source_no_thinning(self, baseline_ctx):
        # rho = r_sd, theta = 0 puts the relay on top of the source
        r_sd = baseline_ctx.geom.r_sd_m
        assert thinned_density_rf(baseline_ctx, r_sd, 0.0) == pytest.approx(
            baseline_ctx.geom.density_rf_per_m2, rel=1e-12
        )
        assert thinned_density_thz(baseline_ctx, r_sd, 0.0) == pytest.approx(
            baseline_ctx.geom.density_thz_per_m2, rel=1e-12
        )

    def test_rf_far_point_formula(self, baseline_ctx):
        # independent arithmetic: R_S = 100 at (rho=50, theta=pi), r_sd=50
        ctx = baseline_ctx
        p = ctx.rf
        expected = ctx.geom.density_rf_per_m2 * math.exp(
            -ctx.tau_rf * 100.0**2.5 * p.noise_power_w
            / (p.tx_power_w * p.antenna_gain * p.free_space_factor)
        )
        got = thinned_density_rf(ctx, 50.0, math.pi)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got < thinned_density_rf(ctx, 50.0, 0.0)

    def test_thz_matches_public_gamma(self, baseline_ctx):
        # the fast integer-mu path must agree with the general special function
        ctx = baseline_ctx
        p = ctx.thz
        for rho, theta in ((10.0, 0.3), (35.0, 2.0), (60.0, 1.0)):
            d2 = rho**2 + 50.0**2 - 2 * rho * 50.0 * math.cos(theta)
            d = math.sqrt(d2)
            arg = (
                ctx.tau_thz * d2 * math.exp(p.absorption_per_m * d) * p.noise_power_w
                / (p.tx_power_w * p.antenna_gain * p.free_space_factor)
            )
            expected = ctx.geom.density_thz_per_m2 * gamma_upper_regularized(
                p.mu, p.mu * arg ** (p.alpha / 2.0)
            )
            assert thinned_density_thz(ctx, rho, theta) == pytest.approx(expected, rel=1e-10)

    def test_thz_monotone_beyond_source(self, baseline_ctx):
        rhos = np.linspace(50.0, 190.0, 30)
        vals = [thinned_density_thz(baseline_ctx, r, 0.0) for r in rhos]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


class TestNearestDistanceLaw:
    def test_ccdf_at_zero_is_one(self, baseline_ctx):
        for band in Band:
            assert nearest_ccdf(baseline_ctx, band, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_ccdf_zero_threshold_closed_form(self, baseline_cfg):
        ctx = zero_tau_ctx(baseline_cfg)
        lam = ctx.geom.density_rf_per_m2
        for r in (0.0, 10.0, 50.0, 120.0, 200.0):
            assert nearest_ccdf(ctx, Band.RF, r) == pytest.approx(
                math.exp(-lam * math.pi * r * r), abs=1e-6
            )

    def test_ccdf_matches_direct_polar_integral(self, baseline_ctx):
        # the cached interpolant against a from-scratch double integral
        ctx = baseline_ctx
        for band, dens_fn in ((Band.RF, thinned_density_rf), (Band.THZ, thinned_density_thz)):
            for r in (15.0, 40.0, 90.0):
                direct = math.exp(
                    -integrate_polar(
                        lambda rho, th: dens_fn(ctx, rho, th), 0.0, r, TIGHT, vectorized=True
                    )
                )
                assert nearest_ccdf(ctx, band, r) == pytest.approx(direct, abs=1e-6)

    def test_ccdf_monotone(self, baseline_ctx):
        rs = np.linspace(0.0, 200.0, 80)
        for band in Band:
            vals = nearest_ccdf(baseline_ctx, band, rs)
            assert np.all(np.diff(vals) <= 1e-12)

    def test_pdf_zero_threshold_rayleigh_form(self, baseline_cfg):
        ctx = zero_tau_ctx(baseline_cfg)
        lam = ctx.geom.density_thz_per_m2
        for r in (5.0, 20.0, 60.0):
            expected = 2.0 * math.pi * lam * r * math.exp(-lam * math.pi * r * r)
            assert nearest_pdf(ctx, Band.THZ, r) == pytest.approx(expected, rel=1e-7)

    def test_total_probability(self, baseline_ctx):
        for band in Band:
            mass = integrate_radial(
                lambda r: nearest_pdf(baseline_ctx, band, r),
                0.0, 200.0, TIGHT, vectorized=True,
            )
            total = mass + nearest_ccdf(baseline_ctx, band, 200.0)
            assert total == pytest.approx(1.0, abs=1e-6)

    def test_pdf_matches_differenced_ccdf(self, baseline_ctx):
        rng = np.random.default_rng(21)
        h = 1e-3
        for band in Band:
            for r in rng.uniform(1.0, 199.0, 20):
                fd = -(
                    nearest_ccdf(baseline_ctx, band, r + h)
                    - nearest_ccdf(baseline_ctx, band, r - h)
                ) / (2.0 * h)
                assert abs(fd - nearest_pdf(baseline_ctx, band, r)) < 1e-4

    def test_radius_validation(self, baseline_ctx):
        with pytest.raises(ValueError):
            nearest_ccdf(baseline_ctx, Band.RF, 201.0)
        with pytest.raises(ValueError):
            nearest_pdf(baseline_ctx, Band.RF, 0.0)


class TestBoundaries:
    def test_r2t_defining_equation(self, baseline_ctx):
        rng = np.random.default_rng(22)
        q = baseline_ctx.rf.bandwidth_hz / baseline_ctx.thz.bandwidth_hz
        for r in rng.uniform(0.5, 200.0, 100):
            bound = boundary_r2t(baseline_ctx, float(r))
            target = (1.0 + rf_mean_snr(baseline_ctx.rf, float(r))) ** q - 1.0
            assert thz_mean_snr(baseline_ctx.thz, bound) == pytest.approx(target, rel=1e-8)

    def test_t2r_defining_equation(self, baseline_ctx):
        rng = np.random.default_rng(23)
        q = baseline_ctx.thz.bandwidth_hz / baseline_ctx.rf.bandwidth_hz
        for r in rng.uniform(5.0, 200.0, 100):
            bound = boundary_t2r(baseline_ctx, float(r))
            target = (1.0 + thz_mean_snr(baseline_ctx.thz, float(r))) ** q - 1.0
            assert rf_mean_snr(baseline_ctx.rf, bound) == pytest.approx(target, rel=1e-8)

    def test_mutual_inverse(self, baseline_ctx):
        rng = np.random.default_rng(24)
        for r in rng.uniform(1.0, 200.0, 50):
            r = float(r)
            assert boundary_t2r(baseline_ctx, boundary_r2t(baseline_ctx, r)) == pytest.approx(
                r, rel=1e-6
            )

    def test_r2t_against_bisection_oracle(self, baseline_ctx):
        ctx = baseline_ctx
        rate_rf = 0.5 * ctx.rf.bandwidth_hz * math.log2(1.0 + rf_mean_snr(ctx.rf, 50.0))

        def thz_rate(r):
            return 0.5 * ctx.thz.bandwidth_hz * math.log2(1.0 + thz_mean_snr(ctx.thz, r))

        lo, hi = 1e-9, 500.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if thz_rate(mid) > rate_rf:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-9:
                break
        assert boundary_r2t(ctx, 50.0) == pytest.approx(0.5 * (lo + hi), abs=1e-6)

    def test_t2r_monotone(self, baseline_ctx):
        rs = np.linspace(1.0, 150.0, 40)
        vals = boundary_t2r(baseline_ctx, rs)
        assert np.all(np.diff(vals) > 0)

    def test_zero_absorption_closed_form(self, baseline_cfg):
        thz0 = make_thz_params(absorption_per_m=0.0)
        ctx = AnalysisContext.from_rate(
            baseline_cfg.rf, thz0, baseline_cfg.geometry, 4.2e8
        )
        r = 40.0
        q = ctx.rf.bandwidth_hz / ctx.thz.bandwidth_hz
        target = (1.0 + rf_mean_snr(ctx.rf, r)) ** q - 1.0
        assert thz_mean_snr(thz0, boundary_r2t(ctx, r)) == pytest.approx(target, rel=1e-10)

    def test_positive_argument_required(self, baseline_ctx):
        with pytest.raises(ValueError):
            boundary_r2t(baseline_ctx, 0.0)


class TestAssociation:
    def test_no_competitor_means_certain(self, baseline_cfg):
        ctx_no_thz = zero_tau_ctx(baseline_cfg, density_thz=0.0)
        assert assoc_prob_rf(ctx_no_thz, 30.0) == pytest.approx(1.0)
        ctx_no_rf = zero_tau_ctx(baseline_cfg, density_rf=0.0)
        assert assoc_prob_thz(ctx_no_rf, 30.0) == pytest.approx(1.0)

    def test_close_relay_wins(self, baseline_ctx):
        # the boundary shrinks only like r^0.1 on the RF side, so probe deep
        assert assoc_prob_rf(baseline_ctx, 1e-100) == pytest.approx(1.0, abs=1e-9)
        assert assoc_prob_thz(baseline_ctx, 1e-6) == pytest.approx(1.0, abs=1e-9)
        rs = [1e-12, 1e-6, 1e-3, 1.0, 10.0]
        vals = [assoc_prob_rf(baseline_ctx, r) for r in rs]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    def test_ccdf_and_pdf_integral_forms_agree(self, baseline_ctx):
        # 1 - int_0^b pdf == ccdf(b) by construction of the law
        ctx = baseline_ctx
        for r in (15.0, 30.0, 60.0):
            bound = min(boundary_r2t(ctx, r), ctx.geom.r_c_m)
            via_pdf = 1.0 - integrate_radial(
                lambda x: nearest_pdf(ctx, Band.THZ, x), 0.0, bound, TIGHT, vectorized=True
            )
            assert assoc_prob_rf(ctx, r) == pytest.approx(via_pdf, abs=1e-6)

    def test_against_monte_carlo(self, baseline_cfg):
        # equal densities; nearest qualified THz relay beyond the boundary of r=30
        geom = NetworkGeometry(
            r_sd_m=50.0, r_c_m=200.0,
            density_rf_per_m2=1e-3, density_thz_per_m2=1e-3,
        )
        ctx = AnalysisContext.from_rate(baseline_cfg.rf, baseline_cfg.thz, geom, 4.2e8)
        analytic = assoc_prob_rf(ctx, 30.0)
        bound = min(boundary_r2t(ctx, 30.0), geom.r_c_m)
        rng = np.random.default_rng(25)
        n = 4000
        hits = 0
        for _ in range(n):
            rz = _realize(ctx, rng)
            idx = np.flatnonzero(_qualified_mask(ctx, rz.thz, Band.THZ))
            nearest = rz.thz.rho[idx].min() if idx.size else math.inf
            hits += nearest > bound
        p_hat = hits / n
        se = math.sqrt(max(analytic * (1 - analytic), 1e-12) / n)
        assert abs(p_hat - analytic) <= 3.0 * se + 1e-3


class TestCoverage:
    def test_no_relays_no_coverage(self, baseline_cfg):
        ctx = zero_tau_ctx(baseline_cfg, density_rf=0.0, density_thz=0.0)
        assert coverage_hrs(ctx).value == 0.0

    def test_any_relay_suffices_at_zero_threshold(self, baseline_cfg):
        lam = 5e-5
        ctx = zero_tau_ctx(baseline_cfg, density_rf=lam, density_thz=0.0)
        expected = 1.0 - math.exp(-lam * math.pi * 200.0**2)
        est = coverage_hrs(ctx)
        assert est.value == pytest.approx(expected, abs=1e-6)
        assert est.thz_term == pytest.approx(0.0, abs=1e-12)

    def test_addends_reported(self, baseline_ctx):
        est = coverage_hrs(baseline_ctx)
        assert est.value == pytest.approx(est.rf_term + est.thz_term, abs=1e-12)
        assert est.provenance == "analytical"
        assert est.trials == 0

    def test_monotone_in_rate(self, baseline_cfg):
        rates = (4.2e8, 5.0e8, 6.0e8, 7.0e8, 8.0e8)
        values = []
        for y in rates:
            ctx = AnalysisContext.from_rate(
                baseline_cfg.rf, baseline_cfg.thz, baseline_cfg.geometry, y
            )
            values.append(coverage_hrs(ctx).value)
        assert all(a >= b - 1e-9 for a, b in zip(values, values[1:]))

    def test_monotone_in_density(self, baseline_ctx):
        for kw in ("density_rf_per_m2", "density_thz_per_m2"):
            base = getattr(baseline_ctx.geom, kw)
            values = [
                coverage_hrs(baseline_ctx.with_densities(**{kw: scale * base})).value
                for scale in (0.5, 1.0, 2.0)
            ]
            assert values[0] <= values[1] + 1e-9 <= values[2] + 2e-9

    def test_with_densities_shares_caches(self, baseline_ctx):
        other = baseline_ctx.with_densities(density_rf_per_m2=1e-4)
        assert other._laws is baseline_ctx._laws
        assert other.geom.density_rf_per_m2 == 1e-4

    def test_single_band_ignores_competition(self, baseline_ctx):
        rf_only = coverage_single_band(baseline_ctx, Band.RF)
        assert rf_only.value >= coverage_hrs(baseline_ctx).rf_term - 1e-9

    def test_direct_closed_form(self, baseline_ctx):
        ctx = baseline_ctx
        expected = math.exp(-ctx.tau_rf / rf_mean_snr(ctx.rf, ctx.geom.r_sd_m))
        assert coverage_direct(ctx, Band.RF).value == pytest.approx(expected, rel=1e-10)

    def test_direct_at_zero_distance(self, baseline_cfg):
        geom = NetworkGeometry(
            r_sd_m=0.0, r_c_m=200.0, density_rf_per_m2=1e-4, density_thz_per_m2=1e-4
        )
        ctx = AnalysisContext.from_rate(baseline_cfg.rf, baseline_cfg.thz, geom, 8e8)
        assert coverage_direct(ctx, Band.THZ).value == 1.0


class TestContextValidation:
    def test_swapped_bands_rejected(self, baseline_cfg):
        with pytest.raises(ValueError):
            AnalysisContext(
                rf=baseline_cfg.thz, thz=baseline_cfg.rf,
                geom=baseline_cfg.geometry, tau_rf=1.0, tau_thz=1.0,
            )

    def test_negative_threshold_rejected(self, baseline_cfg):
        with pytest.raises(ValueError):
            AnalysisContext(
                rf=baseline_cfg.rf, thz=baseline_cfg.thz,
                geom=baseline_cfg.geometry, tau_rf=-1.0, tau_thz=1.0,
            )

    def test_from_rate_stores_consistent_thresholds(self, baseline_cfg):
        ctx = AnalysisContext.from_rate(
            baseline_cfg.rf, baseline_cfg.thz, baseline_cfg.geometry, 4.2e8
        )
        assert ctx.tau_rf == rate_to_threshold(4.2e8, baseline_cfg.rf.bandwidth_hz, 2)
        assert ctx.tau_thz == rate_to_threshold(4.2e8, baseline_cfg.thz.bandwidth_hz, 2)
        assert ctx.y_th_bps == 4.2e8
