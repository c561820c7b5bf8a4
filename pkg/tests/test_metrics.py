import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfdiff.metrics import band_energy, correlation, mean_radial_power, psnr, radial_power_spectrum
from wfdiff.spectral import corner_radius, dwt2_haar


def test_psnr_identical_is_inf():
    a = np.random.default_rng(0).random((1, 8, 8))
    assert psnr(a, a) == float("inf")


def test_psnr_known_value():
    a = np.zeros((4, 4))
    assert psnr(a, a + 0.1) == pytest.approx(20.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_psnr_symmetric(seed):
    r = np.random.default_rng(seed)
    a, b = r.random((2, 5, 5))
    assert psnr(a, b) == psnr(b, a)


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError):
        psnr(np.zeros((2, 2)), np.zeros((3, 3)))


def test_correlation_bounds():
    r = np.random.default_rng(1)
    a = r.random(50)
    assert correlation(a, 2 * a + 1) == pytest.approx(1.0)
    assert correlation(a, -a) == pytest.approx(-1.0)
    assert correlation(a, np.ones(50)) == 0.0


def test_radial_constant_image_is_all_dc():
    rs = radial_power_spectrum(np.full((8, 8), 0.5), 4)
    assert rs.power[0] == pytest.approx((0.5 * 64) ** 2 / rs.counts[0])
    assert np.all(rs.power[1:] == 0)
    assert rs.counts.sum() == 64


def test_radial_sinusoid_lands_in_its_radius():
    n, k, nbins = 16, 3, 8
    x = np.cos(2 * np.pi * k * np.arange(n) / n)
    plane = np.tile(x, (n, 1))
    rs = radial_power_spectrum(plane, nbins)
    target = int(k / corner_radius(n, n) * nbins)
    assert np.argmax(rs.power) == target
    # two peaks of (n^2 / 2)^2 each, everything else zero
    assert rs.power[target] * rs.counts[target] == pytest.approx(2 * (n * n / 2) ** 2)
    assert rs.total == pytest.approx(2 * (n * n / 2) ** 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([4, 8, 16]), st.integers(2, 10))
def test_radial_total_is_parseval(seed, n, nbins):
    plane = np.random.default_rng(seed).normal(size=(n, n))
    rs = radial_power_spectrum(plane, nbins)
    assert rs.total == pytest.approx(n * n * np.sum(plane ** 2), rel=1e-9)


def test_mean_radial_power_averages_channels():
    r = np.random.default_rng(2)
    a, b = r.normal(size=(2, 1, 8, 8))
    both = mean_radial_power([np.concatenate([a, b])], 4)
    assert np.allclose(both, (radial_power_spectrum(a[0], 4).power + radial_power_spectrum(b[0], 4).power) / 2)


def test_radial_rejects_single_bin():
    with pytest.raises(ValueError):
        radial_power_spectrum(np.zeros((4, 4)), 1)


def test_band_energy_constant_image():
    e = band_energy(dwt2_haar(np.full((1, 8, 8), 0.25), 2))
    assert e["lf"] == pytest.approx(64 * 0.0625)
    assert all(v == pytest.approx(0.0, abs=1e-24) for v in e["hf"])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 3))
def test_band_energy_sums_to_total(seed, levels):
    img = np.random.default_rng(seed).normal(size=(1, 16, 16))
    e = band_energy(dwt2_haar(img, levels))
    assert e["lf"] + sum(e["hf"]) == pytest.approx(np.sum(img ** 2), rel=1e-12)


def test_white_noise_level1_bands_equal():
    r = np.random.default_rng(3)
    totals = np.zeros(4)
    for _ in range(100):
        e = band_energy(dwt2_haar(r.normal(size=(1, 16, 16)), 1))
        totals += [e["lf"]] + e["hf"]
    assert np.max(totals) / np.min(totals) <= 1.10
