import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dnls_lab import (derivative, forward_transform, inverse_transform, l2_norm,
                      l2_norm_physical, make_grid, read_field_csv, write_field_csv)
from dnls_lab.fourier import SQRT_2PI, TorusGrid

from conftest import band_limited


class TestGrid:
    def test_unit_torus_modes(self):
        g = make_grid(1, 8)
        np.testing.assert_array_equal(g.modes, np.arange(-4, 4))
        assert g.dx == pytest.approx(math.pi / 4)

    def test_lambda_two_modes(self):
        g = make_grid(2, 16)
        np.testing.assert_allclose(g.modes, np.arange(-4, 4, 0.5))
        assert g.dx == pytest.approx(math.pi / 4)

    @pytest.mark.parametrize("lam, n", [(1, 7), (1, 6), (1, 4), (0.5, 16), (1, 12)])
    def test_rejects_bad_input(self, lam, n):
        with pytest.raises(ValueError):
            make_grid(lam, n)

    @pytest.mark.parametrize("lam", [1, 2.5, 64])
    def test_period(self, lam):
        g = make_grid(lam, 128)
        assert g.dx * g.n_points == pytest.approx(2 * math.pi * lam, rel=1e-15)
        assert g.x[0] == 0.0


class TestTransforms:
    def test_constant(self, grid64):
        spec = forward_transform(grid64, np.full(64, 0.3 + 0.1j))
        expected = np.zeros(64, dtype=complex)
        expected[32] = SQRT_2PI * (0.3 + 0.1j)
        np.testing.assert_allclose(spec, expected, atol=1e-14)

    @pytest.mark.parametrize("k", [-5, 0, 3, 31])
    def test_exponential(self, grid64, k):
        spec = forward_transform(grid64, np.exp(1j * k * grid64.x))
        expected = np.zeros(64, dtype=complex)
        expected[32 + k] = SQRT_2PI
        np.testing.assert_allclose(spec, expected, atol=1e-13)

    def test_zero(self, grid64):
        assert not np.any(forward_transform(grid64, np.zeros(64)))
        assert not np.any(inverse_transform(grid64, np.zeros(64)))

    def test_inverse_of_delta(self, grid64):
        spec = np.zeros(64, dtype=complex)
        spec[32] = SQRT_2PI
        np.testing.assert_allclose(inverse_transform(grid64, spec), 1.0, atol=1e-15)

    def test_length_mismatch(self, grid64):
        with pytest.raises(ValueError):
            forward_transform(grid64, np.zeros(63))
        with pytest.raises(ValueError):
            inverse_transform(grid64, np.zeros(65))

    @pytest.mark.parametrize("lam", [1, 2, 8, 64])
    def test_round_trip(self, rng, lam):
        g = make_grid(lam, 256)
        f = band_limited(g, rng, 100 / lam)
        back = forward_transform(g, inverse_transform(g, f.spectrum))
        assert np.linalg.norm(back - f.spectrum) <= 1e-13 * np.linalg.norm(f.spectrum)

    def test_modulation_shifts_spectrum(self, rng):
        g = make_grid(2, 64)
        f = band_limited(g, rng, 5)
        k = 3
        shifted = forward_transform(g, np.exp(1j * k / g.lam * g.x) * f.values)
        np.testing.assert_allclose(shifted[k:], f.spectrum[:-k], atol=1e-13)

    def test_field_is_immutable(self, grid64):
        f = grid64.zeros()
        with pytest.raises(ValueError):
            f.values[0] = 1.0


class TestNorms:
    def test_constant_one(self, grid64):
        assert l2_norm(grid64.field_from_values(np.ones(64))) == pytest.approx(2.50663, abs=1e-5)

    def test_single_mode(self, grid64):
        f = grid64.field_from_values(0.1 * np.exp(1j * grid64.x))
        assert l2_norm(f) == pytest.approx(0.250663, abs=1e-6)

    def test_zero(self, grid64):
        assert l2_norm(grid64.zeros()) == 0.0

    @pytest.mark.parametrize("lam", [1, 2, 8, 64])
    def test_plancherel(self, rng, lam):
        g = make_grid(lam, 512)
        for _ in range(25):
            f = band_limited(g, rng, rng.uniform(1, 200) / lam)
            assert l2_norm(f) == pytest.approx(l2_norm_physical(f), rel=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(c=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
           k=st.integers(-15, 15), lam=st.sampled_from([1, 2, 4]))
    def test_single_mode_norm_property(self, c, k, lam):
        g = make_grid(lam, 64)
        f = g.field_from_values(c * np.exp(1j * (k / lam) * g.x))
        assert l2_norm(f) == pytest.approx(abs(c) * math.sqrt(2 * math.pi * lam), rel=1e-12, abs=1e-14)


class TestDerivative:
    def test_exponential(self, grid64):
        f = grid64.field_from_values(np.exp(2j * grid64.x))
        np.testing.assert_allclose(derivative(f).values, 2j * f.values, atol=1e-12)
        np.testing.assert_allclose(derivative(f, 2).values, -4 * f.values, atol=1e-11)

    def test_nyquist_dropped_for_odd_order(self, grid64):
        f = grid64.field_from_values(np.cos(32 * grid64.x))
        assert np.abs(derivative(f).values).max() < 1e-12


def test_csv_round_trip(tmp_path, rng):
    g = make_grid(2, 32)
    f = band_limited(g, rng, 4)
    write_field_csv(f, tmp_path / "f.csv")
    back = read_field_csv(tmp_path / "f.csv")
    assert back.grid == TorusGrid(2.0, 32)
    np.testing.assert_array_equal(back.values, f.values)
    np.testing.assert_array_equal(back.spectrum, f.spectrum)
    header = (tmp_path / "f.csv").read_text().splitlines()[:3]
    assert header[2] == "x,re_value,im_value"
