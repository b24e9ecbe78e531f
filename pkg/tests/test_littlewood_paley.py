import math

import numpy as np
import pytest

from conftest import cos_mode
from vesiflow.littlewood_paley import (
    ConfigurationError,
    FieldStack,
    besov_diagnostics,
    besov_norm,
    block_sups,
    build_cutoffs,
    commutator_ratio,
    dyadic_block,
    embedding_ratio,
    interpolation_ratio,
    linf_norm,
    log_sobolev_ratio,
    lp_norm,
    partition_residual,
    phi_profile,
    profile_partition_residual,
    psi_profile,
    random_band_limited,
    smooth_step,
    sobolev_norm,
)
from vesiflow.spectral import GridSpec, SpectralScalar, SpectralVector, fractional_multiplier

TWO_PI = 2 * np.pi


class TestProfiles:
    def test_smooth_step_limits(self):
        t = np.array([-1.0, 0.0, 1.0, 2.0, 0.5])
        s = smooth_step(t)
        assert list(s[:4]) == [0.0, 0.0, 1.0, 1.0] and s[4] == pytest.approx(0.5)

    def test_smooth_step_monotone(self):
        t = np.linspace(0, 1, 2001)
        assert np.all(np.diff(smooth_step(t)) >= 0)

    def test_supports(self):
        assert np.all(psi_profile(np.linspace(0, 0.75, 50)) == 1.0)
        assert np.all(psi_profile(np.linspace(4 / 3, 10, 50)) == 0.0)
        inside = np.linspace(0, 0.75, 50)
        outside = np.linspace(8 / 3, 20, 50)
        assert np.all(phi_profile(inside) == 0.0) and np.all(phi_profile(outside) == 0.0)

    def test_partition_of_unity_sampled(self):
        radii = np.random.default_rng(0).uniform(1e-3, 1e3, 10_000)
        inhom, hom = profile_partition_residual(np.concatenate([[0.0], radii]))
        assert inhom < 1e-12 and hom < 1e-12


class TestCutoffs:
    @pytest.mark.parametrize("n,jmax", [(32, 7), (64, 8)])
    def test_block_range(self, n, jmax):
        cut = build_cutoffs(GridSpec.cube(n))
        assert (cut.j_min, cut.j_max) == (2, jmax)

    def test_lattice_partition(self):
        assert partition_residual(build_cutoffs(GridSpec.cube(32))) < 1e-12

    def test_out_of_range_block(self, g16):
        cut = build_cutoffs(g16)
        with pytest.raises(IndexError):
            cut.multiplier(cut.j_max + 1)

    def test_configuration_error_type(self):
        assert issubclass(ConfigurationError, ValueError)


class TestBlocks:
    def test_blocks_sum_to_mean_free_part(self, g32, rng):
        f = random_band_limited(g32, rng, 6, mean=0.7)
        cut = build_cutoffs(g32)
        total = sum(dyadic_block(f, j, cut).coeffs for j in cut.blocks)
        expect = f.coeffs.copy()
        expect[0, 0, 0] = 0
        assert np.max(np.abs(total - expect)) < 1e-12

    def test_constant_has_no_blocks(self, g16):
        cut = build_cutoffs(g16)
        c = SpectralScalar.constant(g16, 4.0)
        assert all(np.max(np.abs(dyadic_block(c, j, cut).coeffs)) == 0 for j in cut.blocks)

    def test_pure_mode_blocks(self, g32):
        cut = build_cutoffs(g32)
        c = np.zeros(g32.shape, complex)
        c[1, 0, 0] = c[-1, 0, 0] = 0.5
        f = SpectralScalar(g32, c)
        active = [j for j in cut.blocks if np.max(np.abs(dyadic_block(f, j, cut).coeffs)) > 0]
        assert active == [2, 3]
        both = dyadic_block(f, 2, cut).coeffs + dyadic_block(f, 3, cut).coeffs
        assert np.max(np.abs(both - f.coeffs)) < 1e-15


class TestNorms:
    def test_zero(self, g16):
        cut = build_cutoffs(g16)
        z = SpectralScalar.zeros(g16)
        assert besov_norm(z, 0.0, cut) == 0 and linf_norm(z) == 0
        assert sobolev_norm(z, 1.5) == 0

    def test_cos_besov(self, g32):
        cut = build_cutoffs(g32)
        b0 = besov_norm(cos_mode(g32), 0.0, cut)
        expect = max(phi_profile(TWO_PI / 4), phi_profile(TWO_PI / 8))
        assert 0.5 <= b0 <= 1.0
        assert b0 == pytest.approx(float(expect), rel=1e-12)

    def test_homogeneity(self, g16, rng):
        cut = build_cutoffs(g16)
        f = random_band_limited(g16, rng, 3)
        for s in (0.0, -1.0, 0.5):
            assert besov_norm(f * -2.5, s, cut) == pytest.approx(2.5 * besov_norm(f, s, cut), rel=1e-13)

    def test_cos_sobolev(self, g16):
        c = cos_mode(g16)
        assert sobolev_norm(c, 0.0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert abs(sobolev_norm(c, 1.0) - TWO_PI / math.sqrt(2)) < 1e-10
        assert sobolev_norm(c + 1.0, 1.0, homogeneous=False) == pytest.approx(
            TWO_PI / math.sqrt(2) + math.sqrt(1.5), rel=1e-12)

    def test_lp(self, g16):
        c = cos_mode(g16)
        assert lp_norm(c, 4) == pytest.approx((3 / 8) ** 0.25, rel=1e-12)
        assert lp_norm(c, 2) == pytest.approx(1 / math.sqrt(2), rel=1e-12)
        assert lp_norm(c, math.inf) == pytest.approx(1.0, rel=1e-12)

    def test_vector_linf_is_pointwise_magnitude(self, g16):
        x1 = g16.coordinates()[0]
        a = np.broadcast_to(np.cos(TWO_PI * x1), g16.shape)
        b = np.broadcast_to(np.sin(TWO_PI * x1), g16.shape)
        v = SpectralVector.from_samples(np.stack([a, b, np.zeros(g16.shape)]))
        assert linf_norm(v) == pytest.approx(1.0, rel=1e-12)

    def test_field_stack_matches_vector(self, g16, rng):
        v = SpectralVector(g16, np.stack([random_band_limited(g16, rng, 3).coeffs for _ in range(3)]))
        stack = FieldStack(g16, v.coeffs)
        assert linf_norm(stack) == linf_norm(v)

    def test_diagnostics_bundle(self, g32):
        d = besov_diagnostics(cos_mode(g32), build_cutoffs(g32), timestamp=1.5)
        assert d.timestamp == 1.5
        assert d.linf == pytest.approx(1.0)
        assert d.hs["Hdot^1"] == pytest.approx(TWO_PI / math.sqrt(2))
        assert d.bm1_inf <= d.b0_inf


class TestRatios:
    def test_zero_fields(self, g16):
        cut = build_cutoffs(g16)
        z = SpectralScalar.zeros(g16)
        assert log_sobolev_ratio(z, cut) == 0
        assert interpolation_ratio(z, cut) == 0
        assert embedding_ratio(z, cut) == 0

    def test_cos_values_finite(self, g32):
        cut = build_cutoffs(g32)
        c = cos_mode(g32)
        r = interpolation_ratio(c, cut)
        bm1 = besov_norm(c, -1.0, cut)
        assert r == pytest.approx((3 / 8) ** 0.25 / math.sqrt(bm1 * TWO_PI / math.sqrt(2)), rel=1e-10)
        assert math.isfinite(log_sobolev_ratio(c, cut))

    def test_interpolation_scale_invariant(self, g16, rng):
        cut = build_cutoffs(g16)
        f = random_band_limited(g16, rng, 3)
        assert interpolation_ratio(f * 3.0, cut) == pytest.approx(interpolation_ratio(f, cut), rel=1e-12)

    def test_commutator_constant_partner(self, g16, rng):
        f = random_band_limited(g16, rng, 3)
        r = commutator_ratio(f, SpectralScalar.constant(g16, 2.0), 1.5)
        # only the second right-hand term survives: |L^s f|_2 / |L^s f|_4
        lam = fractional_multiplier(f, 1.5)
        assert r == pytest.approx(lp_norm(lam, 2) / lp_norm(lam, 4), rel=1e-12)

    def test_block_sups_reused(self, g16, rng):
        cut = build_cutoffs(g16)
        f = random_band_limited(g16, rng, 3)
        sups = block_sups(f, cut)
        assert embedding_ratio(f, cut, sups) == embedding_ratio(f, cut)
