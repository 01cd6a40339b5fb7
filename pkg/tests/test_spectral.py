"""Spectral core: transforms, multipliers, norms, dealiasing."""

import numpy as np
import pytest

from fracchemo.spectral import (
    Grid,
    SpectralField,
    VectorField,
    curl2d,
    dealias,
    divergence,
    forward_transform,
    fractional_laplacian,
    gradient,
    integrate_product,
    l2_inner,
    lp_norm,
    mean,
    sobolev_norm,
)


def random_band_limited(grid, rng, kmax=None, scale=1.0):
    """Random real field supported strictly inside the dealias band."""
    if kmax is None:
        kmax = grid.n // 3
    c = np.zeros(grid.shape, dtype=np.complex128)
    if grid.d == 1:
        for k in range(1, kmax + 1):
            amp = scale * (rng.standard_normal() + 1j * rng.standard_normal())
            c[k] = amp
            c[-k] = np.conj(amp)
        c[0] = scale * rng.standard_normal()
    else:
        for k1 in range(-kmax, kmax + 1):
            for k2 in range(-kmax, kmax + 1):
                if (k1, k2) <= (0, 0):
                    continue
                amp = scale * (rng.standard_normal() + 1j * rng.standard_normal())
                c[k1 % grid.n, k2 % grid.n] = amp
                c[-k1 % grid.n, -k2 % grid.n] = np.conj(amp)
        c[0, 0] = scale * rng.standard_normal()
    return SpectralField(grid, c)


class TestTransforms:
    def test_cos_single_mode(self):
        g = Grid(1, 16)
        f = forward_transform(g, np.cos(g.nodes()))
        expected = np.zeros(16, dtype=np.complex128)
        expected[1] = 0.5
        expected[-1] = 0.5
        assert np.max(np.abs(f.coeffs - expected)) < 1e-15

    def test_constant(self):
        g = Grid(1, 16)
        f = forward_transform(g, np.full(16, 2.5))
        assert abs(f.coeffs[0] - 2.5) < 1e-15
        assert np.max(np.abs(f.coeffs[1:])) < 1e-15

    def test_zero_mode_is_sample_mean(self):
        g = Grid(1, 64)
        rng = np.random.default_rng(0)
        v = random_band_limited(g, rng).values()
        f = forward_transform(g, v)
        assert abs(f.coeffs[0].real - np.mean(v)) < 1e-14

    @pytest.mark.parametrize("d,n", [(1, 64), (2, 32)])
    def test_round_trip(self, d, n):
        g = Grid(d, n)
        rng = np.random.default_rng(1)
        v = random_band_limited(g, rng).values()  # Nyquist-free by construction
        back = forward_transform(g, v).values()
        scale = np.max(np.abs(v))
        assert np.max(np.abs(back - v)) <= 1e-13 * max(scale, 1.0)

    def test_size_mismatch_rejected(self):
        g = Grid(1, 16)
        with pytest.raises(ValueError):
            forward_transform(g, np.zeros(8))

    def test_nyquist_forced_to_zero(self):
        g = Grid(1, 16)
        c = np.zeros(16, dtype=np.complex128)
        c[8] = 1.0  # the +-n/2 slot
        f = SpectralField(g, c)
        assert np.all(f.coeffs[g.nyquist_mask] == 0)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            Grid(3, 16)
        with pytest.raises(ValueError):
            Grid(1, 15)
        with pytest.raises(ValueError):
            Grid(1, 4)


class TestFractionalLaplacian:
    @pytest.mark.parametrize("alpha", [0.3, 1.0, 1.5, 2.0])
    def test_cos_is_eigenfunction(self, alpha):
        g = Grid(1, 32)
        f = SpectralField.from_function(g, np.cos)
        out = fractional_laplacian(f, alpha)
        assert np.max(np.abs(out.values() - np.cos(g.nodes()))) < 1e-13

    def test_cos2x_alpha1(self):
        g = Grid(1, 32)
        f = SpectralField.from_function(g, lambda x: np.cos(2 * x))
        out = fractional_laplacian(f, 1.0)
        assert np.max(np.abs(out.values() - 2 * np.cos(2 * g.nodes()))) < 1e-13

    def test_constant_killed(self):
        g = Grid(1, 16)
        f = SpectralField.from_samples(g, np.full(16, 3.0))
        out = fractional_laplacian(f, 1.3)
        assert np.max(np.abs(out.coeffs)) < 1e-15

    @pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5])
    def test_alpha_range_rejected(self, alpha):
        g = Grid(1, 16)
        with pytest.raises(ValueError):
            fractional_laplacian(SpectralField.zeros(g), alpha)


class TestDerivatives:
    def test_divergence_example(self):
        g = Grid(2, 32)
        x, y = g.meshes()
        v = VectorField(
            (
                SpectralField.from_samples(g, np.sin(x)),
                SpectralField.from_samples(g, np.sin(y)),
            )
        )
        got = divergence(v).values()
        assert np.max(np.abs(got - (np.cos(x) + np.cos(y)))) < 1e-13

    def test_curl2d_example(self):
        g = Grid(2, 32)
        x, y = g.meshes()
        v = VectorField(
            (
                SpectralField.from_samples(g, np.cos(y)),
                SpectralField.from_samples(g, np.cos(x)),
            )
        )
        got = curl2d(v).values()
        assert np.max(np.abs(got - (-np.sin(x) + np.sin(y)))) < 1e-13

    def test_curl_of_gradient_vanishes(self):
        g = Grid(2, 32)
        x, y = g.meshes()
        f = SpectralField.from_samples(g, np.sin(x) * np.sin(y))
        assert np.max(np.abs(curl2d(gradient(f)).coeffs)) < 1e-13

    def test_curl2d_rejects_1d(self):
        g = Grid(1, 16)
        v = VectorField((SpectralField.zeros(g),))
        with pytest.raises(ValueError):
            curl2d(v)

    def test_gradient_multiplier(self):
        g = Grid(1, 32)
        f = SpectralField.from_function(g, lambda x: np.sin(3 * x))
        got = gradient(f)[0].values()
        assert np.max(np.abs(got - 3 * np.cos(3 * g.nodes()))) < 1e-12

    def test_adjointness(self):
        # discrete integration by parts: <grad f, v> + <f, div v> = 0
        rng = np.random.default_rng(2)
        for d, n in ((1, 48), (2, 24)):
            g = Grid(d, n)
            f = random_band_limited(g, rng, kmax=n // 2 - 1)
            v = VectorField(
                tuple(random_band_limited(g, rng, kmax=n // 2 - 1) for _ in range(d))
            )
            total = sum(l2_inner(gi, vi) for gi, vi in zip(gradient(f), v))
            total += l2_inner(f, divergence(v))
            scale = sobolev_norm(f, 1.0) * sum(sobolev_norm(vi, 1.0) for vi in v)
            assert abs(total) <= 1e-12 * max(scale, 1.0)


class TestNorms:
    def test_cos_l2(self):
        g = Grid(1, 32)
        f = SpectralField.from_function(g, np.cos)
        assert abs(sobolev_norm(f, 0.0) - np.sqrt(np.pi)) < 1e-13

    @pytest.mark.parametrize("s", [0.0, 0.5, 1.0, 2.3])
    def test_cos_any_order(self, s):
        g = Grid(1, 32)
        f = SpectralField.from_function(g, np.cos)
        assert abs(sobolev_norm(f, s) - np.sqrt(np.pi)) < 1e-13

    def test_shifted_cos_norms(self):
        g = Grid(1, 32)
        f = SpectralField.from_function(g, lambda x: 3.0 + np.cos(x))
        assert abs(sobolev_norm(f, 1.0) - np.sqrt(np.pi)) < 1e-13
        full = np.sqrt(np.pi + 2 * np.pi * 9 + np.pi)
        assert abs(sobolev_norm(f, 1.0, homogeneous=False) - full) < 1e-12

    def test_negative_order_rejected(self):
        g = Grid(1, 16)
        with pytest.raises(ValueError):
            sobolev_norm(SpectralField.zeros(g), -0.5)

    def test_l4_cos_against_quadrature_oracle(self):
        # oracle: dense rectangle quadrature of cos^4 on a 2^20-point grid
        xs = -np.pi + 2 * np.pi * np.arange(2**20) / 2**20
        oracle = (np.sum(np.cos(xs) ** 4) * 2 * np.pi / 2**20) ** 0.25
        analytic = (3 * np.pi / 4) ** 0.25
        assert abs(oracle - analytic) < 1e-12
        g = Grid(1, 32)
        f = SpectralField.from_function(g, np.cos)
        assert abs(lp_norm(f, 4) - analytic) < 1e-13

    def test_linf_constant(self):
        g = Grid(1, 16)
        f = SpectralField.from_samples(g, np.full(16, -2.5))
        assert lp_norm(f, np.inf) == pytest.approx(2.5, abs=1e-14)

    def test_plancherel_consistency(self):
        rng = np.random.default_rng(3)
        for d, n in ((1, 64), (2, 24)):
            g = Grid(d, n)
            f = random_band_limited(g, rng, kmax=n // 2 - 1)
            l2 = lp_norm(f, 2)
            sob = sobolev_norm(f, 0.0)
            assert abs(l2 - sob) <= 1e-12 * (1.0 + sob)

    def test_unsupported_p_rejected(self):
        g = Grid(1, 16)
        with pytest.raises(ValueError):
            lp_norm(SpectralField.zeros(g), 3)


class TestDealias:
    def test_high_mode_zeroed(self):
        g = Grid(1, 12)
        f = SpectralField.from_function(g, lambda x: np.cos(5 * x))
        assert np.max(np.abs(dealias(f).coeffs)) < 1e-15

    def test_low_mode_unchanged(self):
        g = Grid(1, 12)
        f = SpectralField.from_modes(g, [("cos", (3,), 1.0)])
        assert np.array_equal(dealias(f).coeffs, f.coeffs)
        # sampled construction carries rounding-level junk in the drop band;
        # the kept modes still pass through bit-identically
        fs = SpectralField.from_function(g, lambda x: np.cos(3 * x))
        keep = ~g.dealias_drop_mask
        assert np.array_equal(dealias(fs).coeffs[keep], fs.coeffs[keep])

    def test_idempotent(self):
        g = Grid(1, 48)
        rng = np.random.default_rng(4)
        f = random_band_limited(g, rng, kmax=g.n // 2 - 1)
        once = dealias(f)
        twice = dealias(once)
        assert np.array_equal(once.coeffs, twice.coeffs)


class TestMean:
    def test_shifted_cos(self):
        g = Grid(1, 16)
        f = SpectralField.from_function(g, lambda x: 3.0 + np.cos(x))
        assert mean(f) == pytest.approx(3.0, abs=1e-14)

    def test_zero_field(self):
        assert mean(SpectralField.zeros(Grid(1, 16))) == 0.0

    def test_gradient_kills_mean(self):
        g = Grid(2, 24)
        rng = np.random.default_rng(5)
        f = random_band_limited(g, rng)
        for comp in gradient(f):
            assert abs(mean(comp)) < 1e-15


class TestIrrotationalNormEquality:
    def test_gradient_fields_direct_summation(self):
        # oracle: explicit mode-by-mode sums, independent of sobolev_norm
        g = Grid(2, 16)
        rng = np.random.default_rng(6)
        q = gradient(random_band_limited(g, rng, kmax=5))
        k1, k2 = (ki.astype(float) for ki in g.wavevectors)
        scale = (2 * np.pi) ** 2
        grad_sq = 0.0
        div_sq = 0.0
        for i in range(g.n):
            for j in range(g.n):
                ksq = k1[i, j] ** 2 + k2[i, j] ** 2
                q1, q2 = q[0].coeffs[i, j], q[1].coeffs[i, j]
                grad_sq += ksq * (abs(q1) ** 2 + abs(q2) ** 2)
                div_sq += abs(k1[i, j] * q1 + k2[i, j] * q2) ** 2
        grad_oracle = np.sqrt(scale * grad_sq)
        div_oracle = np.sqrt(scale * div_sq)
        assert abs(grad_oracle - div_oracle) <= 1e-12 * max(div_oracle, 1.0)
        # library computation agrees with the oracle
        lib_grad = np.sqrt(sum(sobolev_norm(qi, 1.0) ** 2 for qi in q))
        lib_div = sobolev_norm(divergence(q), 0.0)
        assert abs(lib_grad - grad_oracle) <= 1e-12 * max(grad_oracle, 1.0)
        assert abs(lib_div - div_oracle) <= 1e-12 * max(div_oracle, 1.0)


class TestProductQuadrature:
    def test_cubic_integral(self):
        # cos^2(x) cos(2x) integrates to pi/2 over the circle
        g = Grid(1, 16)
        f = SpectralField.from_function(g, np.cos)
        h = SpectralField.from_function(g, lambda x: np.cos(2 * x))
        got = integrate_product(f, f, h)
        assert abs(got - np.pi / 2) < 1e-13

    def test_odd_power_vanishes(self):
        g = Grid(1, 16)
        f = SpectralField.from_function(g, np.cos)
        assert abs(integrate_product(f, f, f)) < 1e-13

    def test_matches_dense_quadrature(self):
        g = Grid(1, 32)
        rng = np.random.default_rng(7)
        a = random_band_limited(g, rng, kmax=9, scale=0.5)
        b = random_band_limited(g, rng, kmax=9, scale=0.5)
        c = random_band_limited(g, rng, kmax=9, scale=0.5)
        got = integrate_product(a, b, c)
        m = 4096  # dense oracle grid resolves the cubic band exactly
        oracle = np.sum(a.values_on(m) * b.values_on(m) * c.values_on(m)) * 2 * np.pi / m
        assert abs(got - oracle) < 1e-12 * (1.0 + abs(oracle))
