import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cos_mode, random_velocity
from vesiflow.littlewood_paley import random_band_limited
from vesiflow.spectral import (
    DealiasRule,
    GridSpec,
    SpectralScalar,
    SpectralVector,
    SymmetryError,
    curl,
    dealias,
    derivative,
    divergence,
    forward_transform,
    fractional_multiplier,
    gradient,
    inverse_transform,
    is_divergence_free,
    laplacian,
    leray_project,
    max_divergence,
    multiply,
    recover_pressure,
)

TWO_PI = 2 * np.pi


def rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


class TestGrid:
    @pytest.mark.parametrize("shape", [(2, 4, 4), (5, 8, 8), (8, 8, 7), (0, 4, 4)])
    def test_rejects_bad_sizes(self, shape):
        with pytest.raises(ValueError):
            GridSpec(*shape)

    def test_wavevectors_cover_half_open_range(self):
        w = GridSpec(4, 6, 8).wave
        assert sorted(w.m[0].ravel()) == [-1, 0, 1, 2]
        assert sorted(w.m[2].ravel()) == [-3, -2, -1, 0, 1, 2, 3, 4]


class TestTransforms:
    def test_constant(self, g16):
        f = forward_transform(np.full(g16.shape, 2.5), g16)
        assert f.coeffs[0, 0, 0] == pytest.approx(2.5)
        f.coeffs[0, 0, 0] = 0
        assert np.max(np.abs(f.coeffs)) < 1e-15

    def test_single_mode(self, g16):
        c = cos_mode(g16).coeffs
        assert abs(c[1, 0, 0] - 0.5) < 1e-12 and abs(c[-1, 0, 0] - 0.5) < 1e-12
        c = c.copy()
        c[1, 0, 0] = c[-1, 0, 0] = 0
        assert np.max(np.abs(c)) < 1e-12

    def test_round_trip_and_parseval(self, g32, rng):
        x = rng.standard_normal(g32.shape)
        f = forward_transform(x, g32)
        assert rel(inverse_transform(f), x) < 1e-12
        assert np.mean(x ** 2) == pytest.approx(np.sum(np.abs(f.coeffs) ** 2), rel=1e-12)

    def test_shape_mismatch(self, g16):
        with pytest.raises(ValueError):
            forward_transform(np.zeros((16, 16, 8)), g16)

    def test_zero_and_constant_inverse(self, g16):
        assert np.all(inverse_transform(SpectralScalar.zeros(g16)) == 0)
        assert np.allclose(inverse_transform(SpectralScalar.constant(g16, -1.5)), -1.5)

    def test_non_hermitian_rejected(self, g16):
        c = np.zeros(g16.shape, complex)
        c[1, 0, 0] = 1.0
        with pytest.raises(SymmetryError):
            inverse_transform(SpectralScalar(g16, c))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from([4, 6, 8, 10]))
    def test_round_trip_property(self, seed, n):
        grid = GridSpec(n, n + 2, 8)
        x = np.random.default_rng(seed).standard_normal(grid.shape)
        assert rel(forward_transform(x, grid).samples(), x) < 1e-12


class TestOperators:
    def test_first_derivative(self, g16):
        x1 = g16.coordinates()[0]
        d = derivative(cos_mode(g16), 1).samples()
        assert rel(d, np.broadcast_to(-TWO_PI * np.sin(TWO_PI * x1), g16.shape)) < 1e-12

    def test_derivative_along_constant_axis(self, g16):
        assert np.max(np.abs(derivative(cos_mode(g16), 2).coeffs)) == 0

    def test_laplacian_from_second_derivatives(self, g16):
        c = cos_mode(g16)
        lap = sum(derivative(c, a, 2).coeffs for a in (1, 2, 3))
        assert rel(lap, -TWO_PI ** 2 * c.coeffs) < 1e-12
        assert rel(laplacian(c).coeffs, lap) < 1e-14

    def test_derivative_order_limits(self, g16):
        with pytest.raises(ValueError):
            derivative(cos_mode(g16), 1, 7)
        with pytest.raises(ValueError):
            derivative(cos_mode(g16), 4)

    def test_nyquist_is_killed_by_derivatives(self):
        grid = GridSpec.cube(8)
        x1 = grid.coordinates()[0]
        nyq = SpectralScalar.from_samples(np.broadcast_to(np.cos(8 * np.pi * x1), grid.shape))
        assert np.max(np.abs(derivative(nyq, 1, 2).coeffs)) == 0

    def test_fractional(self, g16, rng):
        f = random_band_limited(g16, rng, 3)
        assert rel(fractional_multiplier(f, 0).coeffs, f.coeffs) < 1e-15
        back = fractional_multiplier(fractional_multiplier(f, 1), -1)
        assert rel(back.coeffs, f.coeffs) < 1e-12
        c = cos_mode(g16)
        assert rel(fractional_multiplier(c, 2).coeffs, TWO_PI ** 2 * c.coeffs) < 1e-12
        with pytest.raises(ValueError):
            fractional_multiplier(f, 7)

    def test_fractional_zero_mode(self, g16):
        assert fractional_multiplier(SpectralScalar.constant(g16, 3.0), 0).coeffs[0, 0, 0] == 0

    def test_curl_of_shear(self, g16):
        x2 = g16.coordinates()[1]
        zero = np.zeros(g16.shape)
        u = SpectralVector.from_samples(np.stack([np.broadcast_to(np.sin(TWO_PI * x2), g16.shape), zero, zero]))
        w = curl(u).samples()
        assert np.max(np.abs(w[:2])) < 1e-12
        assert rel(w[2], np.broadcast_to(-TWO_PI * np.cos(TWO_PI * x2), g16.shape)) < 1e-12

    def test_vector_identities(self, g16, rng):
        f = random_band_limited(g16, rng, 4)
        v = SpectralVector(g16, np.stack([random_band_limited(g16, rng, 4).coeffs for _ in range(3)]))
        assert np.max(np.abs(curl(gradient(f)).coeffs)) < 1e-12 * np.max(np.abs(gradient(f).coeffs))
        assert np.max(np.abs(divergence(curl(v)).coeffs)) < 1e-12 * np.max(np.abs(curl(v).coeffs))


class TestLeray:
    def test_annihilates_gradients(self, g16):
        x1 = g16.coordinates()[0]
        s = SpectralScalar.from_samples(np.broadcast_to(np.sin(TWO_PI * x1), g16.shape))
        assert np.max(np.abs(leray_project(gradient(s)).coeffs)) < 1e-12

    def test_fixed_point(self, g16):
        x2 = g16.coordinates()[1]
        zero = np.zeros(g16.shape)
        u = SpectralVector.from_samples(np.stack([np.broadcast_to(np.sin(TWO_PI * x2), g16.shape), zero, zero]))
        assert rel(leray_project(u).coeffs, u.coeffs) < 1e-12

    def test_idempotent_and_divergence_free(self, g16, rng):
        v = SpectralVector(g16, np.stack([random_band_limited(g16, rng, 5).coeffs for _ in range(3)]))
        p = leray_project(v)
        assert rel(leray_project(p).coeffs, p.coeffs) < 1e-12
        assert p.divergence_free and is_divergence_free(p)
        assert max_divergence(p) <= 1e-10 * np.max(np.abs(p.coeffs))

    def test_keeps_mean(self, g16):
        c = np.zeros((3,) + g16.shape, complex)
        c[:, 0, 0, 0] = [1.0, 2.0, 3.0]
        assert np.allclose(leray_project(SpectralVector(g16, c)).coeffs[:, 0, 0, 0], [1, 2, 3])


class TestDealias:
    def test_rule_parsing(self):
        assert DealiasRule.parse("padded(3)") == DealiasRule.padded(3)
        assert DealiasRule.parse("two_thirds") == DealiasRule.two_thirds()
        assert str(DealiasRule.padded(1.5)) == "padded(1.5)"
        with pytest.raises(ValueError):
            DealiasRule.padded(0.5)
        with pytest.raises(ValueError):
            DealiasRule.parse("cubic")

    def test_two_thirds(self, g16):
        low = cos_mode(g16, m=5)
        assert rel(dealias(low, "two_thirds").coeffs, low.coeffs) < 1e-15
        nyq = cos_mode(g16, m=8)
        assert np.max(np.abs(dealias(nyq, "two_thirds").coeffs)) == 0

    def test_padded_product(self, g16):
        c = cos_mode(g16)
        prod = multiply(c, c, rule=DealiasRule.padded(2))
        expect = 0.5 * cos_mode(g16, m=2).coeffs
        expect[0, 0, 0] = 0.5
        assert np.max(np.abs(prod.coeffs - expect)) < 1e-12

    def test_padded_product_matches_direct_when_unaliased(self, g32, rng):
        a = random_band_limited(g32, rng, 3)
        b = random_band_limited(g32, rng, 3)
        direct = forward_transform(a.samples() * b.samples(), g32).coeffs
        for rule in (DealiasRule.padded(3), DealiasRule.padded(1.5)):
            assert rel(multiply(a, b, rule=rule).coeffs, direct) < 1e-12

    def test_padded_removes_aliasing(self):
        grid = GridSpec.cube(8)
        c = cos_mode(grid, m=3)
        # cos^2(6 pi x) has a 6-mode that folds onto -2 on the base grid
        assert abs(multiply(c, c, rule=DealiasRule.padded(3)).coeffs[2, 0, 0]) < 1e-15
        aliased = forward_transform(c.samples() ** 2, grid).coeffs
        assert abs(aliased[2, 0, 0]) > 0.1

    def test_derivative_commutes_with_dealias(self, g16, rng):
        f = random_band_limited(g16, rng, 4)
        a = derivative(dealias(f, "two_thirds"), 2).coeffs
        b = dealias(derivative(f, 2), "two_thirds").coeffs
        assert rel(a, b) < 1e-15


class TestPressure:
    def test_zero(self, g16):
        z = SpectralVector.zeros(g16)
        assert np.max(np.abs(recover_pressure(z, z, 1.0).coeffs)) == 0

    def test_gradient_forcing(self, g16, rng):
        chi = random_band_limited(g16, rng, 3)
        p = recover_pressure(SpectralVector.zeros(g16), gradient(chi), 1.0).coeffs
        expect = chi.coeffs.copy()
        expect[0, 0, 0] = 0
        assert rel(p, expect) < 1e-12

    def test_divergence_closure(self, g16, rng):
        from vesiflow.spectral import convective_term, vector_laplacian

        u = random_velocity(g16, rng)
        F = SpectralVector(g16, np.stack([random_band_limited(g16, rng, 3).coeffs for _ in range(3)]))
        P = recover_pressure(u, F, 0.7)
        rhs = -convective_term(u) - gradient(P).coeffs + 0.7 * vector_laplacian(u).coeffs + F.coeffs
        div = divergence(SpectralVector(g16, rhs)).coeffs
        assert np.max(np.abs(div)) < 1e-10 * np.max(np.abs(rhs))
