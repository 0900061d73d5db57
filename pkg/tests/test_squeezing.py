import math

import numpy as np
import pytest

from qmemsim.squeezing import (
    SqueezingSpectrum,
    _bogoliubov,
    flat_spectrum,
    green_x,
    lens_correct,
    load_spectrum_tables,
    opa_spectrum,
    orientation_dispersion,
    tabulated_spectrum,
    with_orientation_offset,
)

R0 = math.log(3.0)


class TestOpaSpectrum:
    def test_gain_anchor_at_zero_frequency(self, opa3):
        assert float(opa3.r(np.array(0.0))) == pytest.approx(R0, abs=1e-12)
        assert float(opa3.psi(np.array(0.0))) == pytest.approx(np.pi / 2, abs=1e-12)

    def test_squeezed_quadrature_at_zero(self, opa3):
        assert green_x(opa3, 0.0) == pytest.approx(1.0 / 9.0, abs=1e-12)

    def test_no_pump_gives_vacuum(self):
        spectrum = opa_spectrum(0.0, 1.0)
        q = np.linspace(0.0, 8.0, 200)
        assert np.allclose(spectrum.r(q), 0.0)
        assert np.allclose(green_x(spectrum, q), 1.0)

    def test_bogoliubov_unitarity(self):
        q = np.linspace(0.0, 10.0, 2001)
        u, v = _bogoliubov(q ** 2, R0)
        assert np.max(np.abs(np.abs(u) ** 2 - np.abs(v) ** 2 - 1.0)) < 1e-10

    def test_continuity_at_band_edge(self, opa3):
        # gain band closes at theta = 2 r0; the continuation must be smooth
        q_edge = np.sqrt(2.0 * R0)
        eps = 1e-6
        below = green_x(opa3, q_edge - eps)
        above = green_x(opa3, q_edge + eps)
        assert abs(above - below) < 1e-4  # ~ slope * eps
        u_lo, v_lo = _bogoliubov(np.array(2.0 * R0 - 1e-10), R0)
        u_hi, v_hi = _bogoliubov(np.array(2.0 * R0 + 1e-10), R0)
        assert abs(u_lo - u_hi) < 1e-8 and abs(v_lo - v_hi) < 1e-8

    def test_even_in_q(self, opa3):
        q = np.linspace(0.1, 6.0, 50)
        assert np.allclose(green_x(opa3, q), green_x(opa3, -q))

    def test_gain_non_increasing_in_band(self, opa3):
        q = np.linspace(0.0, 2.0 * np.sqrt(R0), 400)
        r = opa3.r(q)
        assert np.all(np.diff(r) < 1e-12)

    def test_vacuum_at_high_frequency(self, opa3):
        assert abs(green_x(opa3, 40.0) - 1.0) < 5e-3
        assert float(opa3.r(np.array(60.0))) < 2e-3

    def test_coherence_length_scaling(self):
        narrow = opa_spectrum(R0, 2.0)
        reference = opa_spectrum(R0, 1.0)
        q = np.linspace(0.0, 3.0, 64)
        assert np.allclose(narrow.r(q), reference.r(2.0 * q))

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            opa_spectrum(-0.1, 1.0)
        with pytest.raises(ValueError):
            opa_spectrum(1.0, 0.0)


class TestGreenX:
    def test_unit_for_no_squeezing(self):
        spectrum = flat_spectrum(0.0, 1.0, psi0=0.3)
        assert green_x(spectrum, 1.234) == pytest.approx(1.0)

    def test_anti_squeezed_axis_along_x(self):
        spectrum = flat_spectrum(R0, 1.0, psi0=0.0)
        assert green_x(spectrum, 0.7) == pytest.approx(9.0)

    def test_bounds(self, opa3):
        q = np.linspace(0.0, 10.0, 500)
        g = green_x(opa3, q)
        r = opa3.r(q)
        assert np.all(g <= np.exp(2 * r) + 1e-12)
        assert np.all(g >= np.exp(-2 * r) - 1e-12)

    def test_vectorized_matches_scalar(self, opa3):
        q = np.array([0.0, 0.5, 2.0])
        vec = green_x(opa3, q)
        assert vec.shape == (3,)
        assert vec[1] == pytest.approx(green_x(opa3, 0.5))


class TestLensCorrect:
    def test_flat_orientation_unchanged(self):
        spectrum = flat_spectrum(R0, 1.0)
        corrected = lens_correct(spectrum)
        q = np.linspace(0.0, 5.0, 40)
        assert np.allclose(corrected.psi(q), spectrum.psi(q), atol=1e-9)

    def test_dispersion_removed(self, opa3, opa3_lens):
        raw = orientation_dispersion(opa3)
        residual = orientation_dispersion(opa3_lens)
        assert abs(residual) < 1e-6 * abs(raw)

    def test_gain_unchanged(self, opa3, opa3_lens):
        q = np.linspace(0.0, 8.0, 100)
        assert np.array_equal(opa3_lens.r(q), opa3.r(q))

    def test_corrected_noise_below_uncorrected_at_low_q(self, opa3, opa3_lens):
        # pointwise ordering holds until the uncorrected ellipse has rotated
        # through ~pi (q ~ 2.65/l_d for e^r0 = 3) and momentarily re-squeezes;
        # the pixel-averaged ordering holds at every pixel size regardless
        # (see the covariance tests)
        q = np.linspace(0.0, 2.5, 400)
        assert np.all(green_x(opa3_lens, q) <= green_x(opa3, q) + 1e-10)


class TestTabulatedSpectrum:
    def _tables(self, spectrum, q_max=20.0, n=20001):
        q = np.linspace(0.0, q_max, n)
        return (np.column_stack([q, spectrum.r(q)]),
                np.column_stack([q, spectrum.psi(q)]))

    def test_reproduces_source_spectrum(self, opa3):
        # linear interpolation across the wrapped-angle jumps (isolated
        # points where the gain vanishes) limits the pointwise accuracy
        # there; inside the gain band the reconstruction is tight
        r_tab, psi_tab = self._tables(opa3)
        custom = tabulated_spectrum(r_tab, psi_tab, 1.0)
        q_band = np.linspace(0.0, np.sqrt(2.0 * R0) - 0.05, 200)
        assert np.allclose(green_x(custom, q_band), green_x(opa3, q_band),
                           atol=1e-6)
        q = np.linspace(0.0, 10.0, 333)
        assert np.allclose(green_x(custom, q), green_x(opa3, q), atol=2e-3)

    def test_file_roundtrip(self, tmp_path, opa3):
        r_tab, psi_tab = self._tables(opa3, n=4001)
        r_path = tmp_path / "r.dat"
        psi_path = tmp_path / "psi.dat"
        np.savetxt(r_path, r_tab)
        np.savetxt(psi_path, psi_tab)
        loaded = load_spectrum_tables(str(r_path), str(psi_path), 1.0)
        assert green_x(loaded, 1.3) == pytest.approx(green_x(opa3, 1.3), abs=2e-5)
        assert loaded.model_tag == "custom"

    def test_even_extension(self, opa3):
        r_tab, psi_tab = self._tables(opa3)
        custom = tabulated_spectrum(r_tab, psi_tab, 1.0)
        assert green_x(custom, -2.0) == pytest.approx(green_x(custom, 2.0))

    def test_rejects_malformed_tables(self):
        good = np.column_stack([np.linspace(0, 5, 10), np.zeros(10)])
        with pytest.raises(ValueError, match="two columns"):
            tabulated_spectrum(np.zeros((5, 3)), good, 1.0)
        starts_late = np.column_stack([np.linspace(1, 5, 10), np.zeros(10)])
        with pytest.raises(ValueError, match="start"):
            tabulated_spectrum(starts_late, good, 1.0)
        negative_r = good.copy()
        negative_r[2, 1] = -0.1
        with pytest.raises(ValueError, match=">= 0"):
            tabulated_spectrum(negative_r, good, 1.0)


class TestOrientationOffset:
    def test_shift_applied(self, opa3):
        shifted = with_orientation_offset(opa3, 0.25)
        assert float(shifted.psi(np.array(0.0))) == pytest.approx(
            np.pi / 2 + 0.25)

    def test_zero_offset_is_same_object(self, opa3):
        assert with_orientation_offset(opa3, 0.0) is opa3


class TestSpectrumValidation:
    def test_positive_coherence_length_required(self):
        with pytest.raises(ValueError):
            SqueezingSpectrum(r=lambda q: q, psi=lambda q: q, l_d=-1.0)
