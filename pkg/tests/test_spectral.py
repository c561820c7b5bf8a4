import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wfdiff.spectral import (SizingError, SpectralState, SymmetryError, WaveletPyramid, corner_radius,
                             decompose, dft2_reference, dwt2_haar, fft2, hermitian_symmetrize, idwt2_haar,
                             ifft2, radial_distance_grid, reconstruct)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------- Haar

def test_haar_constant_block():
    p = dwt2_haar(np.ones((2, 2)))
    assert p.lf[0, 0] == 2
    assert all(np.all(h == 0) for h in p.hf)


def test_haar_hand_block():
    p = dwt2_haar(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert p.lf[0, 0] == 5
    assert [h[0, 0] for h in p.hf] == [-1, -2, 0]


def test_haar_inverse_hand_block():
    pyr = WaveletPyramid(np.array([[5.0]]), [np.array([[-1.0]]), np.array([[-2.0]]), np.array([[0.0]])], 1)
    assert np.array_equal(idwt2_haar(pyr), [[1, 2], [3, 4]])
    pyr = WaveletPyramid(np.array([[2.0]]), [np.zeros((1, 1))] * 3, 1)
    assert np.array_equal(idwt2_haar(pyr), np.ones((2, 2)))


def test_haar_plane_sizes(rand_image):
    p = dwt2_haar(rand_image((64, 64)), 2)
    assert p.lf.shape == (16, 16)
    assert [h.shape for h in p.hf] == [(32, 32)] * 3 + [(16, 16)] * 3


def test_haar_rejects_bad_sizes(rand_image):
    with pytest.raises(SizingError):
        dwt2_haar(rand_image((12, 12)), 3)
    with pytest.raises(SizingError):
        dwt2_haar(rand_image((8, 8)), 0)


@given(arrays(np.float64, st.sampled_from([(2, 2), (4, 8), (3, 8, 8), (16, 16)]), elements=finite),
       st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_haar_roundtrip_property(x, levels):
    if min(x.shape[-2:]) % (2 ** levels):
        levels = 1
    p = dwt2_haar(x, levels)
    assert np.max(np.abs(idwt2_haar(p) - x), initial=0) <= 1e-12 * max(1.0, np.max(np.abs(x)))
    # orthonormal: energy is preserved
    e = np.sum(p.lf ** 2) + sum(np.sum(h ** 2) for h in p.hf)
    assert np.isclose(e, np.sum(x ** 2), rtol=1e-12, atol=1e-9)


# ---------------------------------------------------------------- Fourier

def test_fft_dc_only():
    X = fft2(np.ones((2, 2)))
    assert X[0, 0] == 4 and np.all(X.ravel()[1:] == 0)


def test_fft_vs_bruteforce(rand_image):
    x = rand_image((8, 8))
    assert np.max(np.abs(fft2(x) - dft2_reference(x))) <= 1e-9


@given(st.integers(0, 5), st.integers(0, 5), st.integers(0, 2 ** 31))
@settings(max_examples=40, deadline=None)
def test_fft_matches_numpy(a, b, seed):
    # numpy.fft is used as an independent oracle only
    x = np.random.default_rng(seed).normal(size=(3, 2 ** a, 2 ** b))
    assert np.allclose(fft2(x), np.fft.fft2(x), atol=1e-9, rtol=0)


def test_parseval(rand_image):
    x = rand_image((16, 16))
    X = fft2(x)
    lhs, rhs = np.sum(x ** 2), np.sum(np.abs(X) ** 2) / x.size
    assert abs(lhs - rhs) / lhs <= 1e-9


def test_fft_rejects_non_pow2():
    with pytest.raises(SizingError):
        fft2(np.ones((6, 8)))


def test_ifft_roundtrip_and_dc(rand_image):
    x = rand_image((32, 32))
    assert np.max(np.abs(ifft2(fft2(x)) - x)) <= 1e-9
    S = np.zeros((4, 4), complex)
    S[0, 0] = 16
    assert np.allclose(ifft2(S), 1.0, atol=0)


def test_ifft_residue_guard():
    S = np.zeros((4, 4), complex)
    S[0, 1] = 1.0  # no conjugate partner: not a real signal
    with pytest.raises(SymmetryError):
        ifft2(S, max_residue=1e-9)
    ifft2(S)  # dropped silently without the guard


def test_dft_reference_small_cases():
    assert dft2_reference(np.array([[3.5]]))[0, 0] == 3.5
    assert dft2_reference(np.ones((2, 2)))[0, 0] == 4
    with pytest.raises(SizingError):
        dft2_reference(np.ones((64, 2)))


def test_hermitian_projection():
    rng = np.random.default_rng(4)
    s = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
    p = hermitian_symmetrize(s)
    assert np.max(np.abs(hermitian_symmetrize(p) - p)) <= 1e-15
    assert np.max(np.abs(np.fft.ifft2(p).imag)) <= 1e-12
    anti = s - p
    assert np.max(np.abs(hermitian_symmetrize(anti))) <= 1e-15
    real_spec = fft2(rng.normal(size=(8, 8)))
    assert np.max(np.abs(hermitian_symmetrize(real_spec) - real_spec)) <= 1e-12


def test_radial_grid():
    g = radial_distance_grid(4, 4)
    assert g[0, 0] == 0
    assert g[2, 2] == pytest.approx(np.sqrt(8))
    assert g[1, 0] == 1
    assert g[3, 0] == 1  # signed index -1
    assert corner_radius(16, 16) == pytest.approx(np.sqrt(128))


# ---------------------------------------------------------------- composed

def test_decompose_shapes_and_constant():
    s = decompose(np.full((1, 32, 32), 0.25))
    assert s.spectrum.shape == (1, 16, 16) and [p.shape for p in s.hf] == [(1, 16, 16)] * 3
    assert np.count_nonzero(np.abs(s.spectrum) > 1e-12) == 1
    assert all(np.all(p == 0) for p in s.hf)
    assert s.meta == {"height": 32, "width": 32, "channels": 1, "levels": 1}


@pytest.mark.parametrize("shape,levels", [((1, 16, 16), 1), ((3, 16, 16), 1), ((3, 32, 32), 2), ((16, 16), 3)])
def test_decompose_roundtrip(rand_image, shape, levels):
    x = rand_image(shape)
    assert np.max(np.abs(reconstruct(decompose(x, levels)) - x)) <= 1e-9


def test_reconstruct_linear_and_zero(rand_image):
    a, b = decompose(rand_image((1, 16, 16), 1)), decompose(rand_image((1, 16, 16), 2))
    lhs = reconstruct(a.scale(0.3) + b.scale(-1.7))
    rhs = 0.3 * reconstruct(a) - 1.7 * reconstruct(b)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9
    assert np.all(reconstruct(a.scale(0.0)) == 0)


def test_reconstruct_checks_meta(rand_image):
    s = decompose(rand_image((1, 16, 16)))
    bad = SpectralState(0, s.spectrum[..., :4, :4], s.hf, s.meta)
    with pytest.raises(SizingError):
        reconstruct(bad)
