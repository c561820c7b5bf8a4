"""Haar wavelet pyramid, radix-2 FFT and the composed hybrid decomposition.

Images are planar float arrays shaped ``(C, H, W)``; any leading batch axes
are carried through untouched. Spectra are complex arrays over the last two
axes with unnormalized forward and ``1/(MN)`` inverse transforms, stored
full-size with DC at index ``[0, 0]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class SizingError(ValueError):
    """Array dimensions incompatible with the requested transform."""


class SymmetryError(ArithmeticError):
    """Inverse transform left an imaginary residue above tolerance."""


RESIDUE_TOL = 1e-6


@dataclass
class WaveletPyramid:
    lf: np.ndarray
    hf: list[np.ndarray]  # level 1 first, each level as LH, HL, HH
    levels: int

    @property
    def K(self) -> int:
        return len(self.hf)


@dataclass
class SpectralState:
    """Diffusion latent: complex LF spectrum plus high-frequency wavelet planes."""

    t: int
    spectrum: np.ndarray
    hf: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    def copy(self, **changes) -> "SpectralState":
        base = SpectralState(self.t, self.spectrum.copy(), [p.copy() for p in self.hf], dict(self.meta))
        return replace(base, **changes) if changes else base

    def __add__(self, other: "SpectralState") -> "SpectralState":
        return self.copy(spectrum=self.spectrum + other.spectrum,
                         hf=[a + b for a, b in zip(self.hf, other.hf)])

    def scale(self, a: float) -> "SpectralState":
        return self.copy(spectrum=a * self.spectrum, hf=[a * p for p in self.hf])


# ---------------------------------------------------------------- wavelets

def _haar_analysis(x):
    a = x[..., 0::2, 0::2]
    b = x[..., 0::2, 1::2]
    c = x[..., 1::2, 0::2]
    d = x[..., 1::2, 1::2]
    ll = (a + b + c + d) / 2
    lh = (a - b + c - d) / 2
    hl = (a + b - c - d) / 2
    hh = (a - b - c + d) / 2
    return ll, lh, hl, hh


def _haar_synthesis(ll, lh, hl, hh):
    shape = ll.shape[:-2] + (2 * ll.shape[-2], 2 * ll.shape[-1])
    x = np.empty(shape, dtype=np.result_type(ll, lh, hl, hh))
    x[..., 0::2, 0::2] = (ll + lh + hl + hh) / 2
    x[..., 0::2, 1::2] = (ll - lh + hl - hh) / 2
    x[..., 1::2, 0::2] = (ll + lh - hl - hh) / 2
    x[..., 1::2, 1::2] = (ll - lh - hl + hh) / 2
    return x


def dwt2_haar(image: np.ndarray, levels: int = 1) -> WaveletPyramid:
    """Orthonormal multi-level 2D Haar analysis over the last two axes."""
    image = np.asarray(image, dtype=np.float64)
    if levels < 1:
        raise SizingError(f"levels must be >= 1, got {levels}")
    h, w = image.shape[-2:]
    step = 1 << levels
    if h % step or w % step:
        raise SizingError(f"image {h}x{w} not divisible by 2**{levels}")
    hf = []
    ll = image
    for _ in range(levels):
        ll, lh, hl, hh = _haar_analysis(ll)
        hf.extend([lh, hl, hh])
    return WaveletPyramid(lf=ll, hf=hf, levels=levels)


def idwt2_haar(pyramid: WaveletPyramid) -> np.ndarray:
    """Exact inverse of :func:`dwt2_haar`, coarsest level first."""
    L = pyramid.levels
    if len(pyramid.hf) != 3 * L:
        raise SizingError(f"expected {3 * L} detail planes, got {len(pyramid.hf)}")
    x = pyramid.lf
    for level in range(L, 0, -1):
        lh, hl, hh = pyramid.hf[3 * (level - 1): 3 * level]
        if not (lh.shape == hl.shape == hh.shape == x.shape):
            raise SizingError(
                f"level {level} planes {lh.shape}, {hl.shape}, {hh.shape} do not match band {x.shape}")
        x = _haar_synthesis(x, lh, hl, hh)
    return x


# ---------------------------------------------------------------- Fourier

def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _bit_reverse(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _fft_last(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time radix-2 FFT along the last axis."""
    n = x.shape[-1]
    x = x[..., _bit_reverse(n)].astype(np.complex128)
    m = 2
    while m <= n:
        half = m // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / m)
        x = x.reshape(x.shape[:-1] + (n // m, m))
        even = x[..., :half]
        odd = x[..., half:] * tw
        x = np.concatenate([even + odd, even - odd], axis=-1)
        x = x.reshape(x.shape[:-2] + (n,))
        m *= 2
    return x


def _check_fft_size(shape):
    h, w = shape[-2:]
    if not (_is_pow2(h) and _is_pow2(w)):
        raise SizingError(f"FFT size {h}x{w} is not a power of two")


def fft2(plane: np.ndarray) -> np.ndarray:
    """Unnormalized 2D DFT over the last two axes."""
    plane = np.asarray(plane)
    _check_fft_size(plane.shape)
    out = _fft_last(plane)
    out = np.swapaxes(_fft_last(np.swapaxes(out, -1, -2)), -1, -2)
    return out


def ifft2c(spectrum: np.ndarray) -> np.ndarray:
    """Complex inverse DFT with 1/(MN) normalization."""
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    m, n = spectrum.shape[-2:]
    return np.conj(fft2(np.conj(spectrum))) / (m * n)


def ifft2(spectrum: np.ndarray, max_residue: float | None = None) -> np.ndarray:
    """Real part of the inverse DFT.

    With ``max_residue`` set, an imaginary residue above it raises
    :class:`SymmetryError` instead of being dropped.
    """
    z = ifft2c(spectrum)
    if max_residue is not None:
        residue = float(np.max(np.abs(z.imag))) if z.size else 0.0
        if residue > max_residue:
            raise SymmetryError(f"imaginary residue {residue:.3e} exceeds {max_residue:.1e}")
    return z.real.copy()


def dft2_reference(plane: np.ndarray) -> np.ndarray:
    """Brute-force DFT sum, one output bin at a time. Test oracle only."""
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise SizingError("dft2_reference takes a single 2D plane")
    M, N = plane.shape
    if M > 32 or N > 32:
        raise SizingError(f"dft2_reference limited to 32x32, got {M}x{N}")
    m = np.arange(M)[:, None]
    n = np.arange(N)[None, :]
    out = np.zeros((M, N), dtype=np.complex128)
    for u in range(M):
        for v in range(N):
            # reduce phases mod period before scaling to keep angles small
            phase = ((u * m) % M) / M + ((v * n) % N) / N
            out[u, v] = np.sum(plane * np.exp(-2j * np.pi * phase))
    return out


def _conj_flip(s: np.ndarray) -> np.ndarray:
    # value at ((-u) mod M, (-v) mod N)
    return np.conj(np.roll(np.flip(s, axis=(-2, -1)), shift=(1, 1), axis=(-2, -1)))


def hermitian_symmetrize(spectrum: np.ndarray) -> np.ndarray:
    """Project onto spectra of real signals: (S + conj(S[-u, -v])) / 2."""
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    return (spectrum + _conj_flip(spectrum)) / 2


def radial_distance_grid(height: int, width: int) -> np.ndarray:
    """Distance of each unshifted DFT bin from DC in signed-index units."""
    u = np.arange(height)
    v = np.arange(width)
    su = np.where(u <= height / 2, u, u - height).astype(np.float64)
    sv = np.where(v <= width / 2, v, v - width).astype(np.float64)
    return np.sqrt(su[:, None] ** 2 + sv[None, :] ** 2)


def corner_radius(height: int, width: int) -> float:
    return float(np.sqrt((height / 2) ** 2 + (width / 2) ** 2))


# ---------------------------------------------------------------- composed

def decompose(image: np.ndarray, levels: int = 1) -> SpectralState:
    image = np.asarray(image, dtype=np.float64)
    pyr = dwt2_haar(image, levels)
    H, W = image.shape[-2:]
    channels = image.shape[-3] if image.ndim >= 3 else 1
    meta = {"height": H, "width": W, "channels": channels, "levels": levels}
    return SpectralState(t=0, spectrum=fft2(pyr.lf), hf=[p.copy() for p in pyr.hf], meta=meta)


def reconstruct(state: SpectralState) -> np.ndarray:
    """Pixel image from a state; not clamped."""
    levels = state.meta.get("levels", len(state.hf) // 3)
    H, W = state.meta.get("height"), state.meta.get("width")
    if H is not None and state.spectrum.shape[-2:] != (H >> levels, W >> levels):
        raise SizingError(f"spectrum {state.spectrum.shape[-2:]} inconsistent with {H}x{W} at {levels} levels")
    lf = ifft2(hermitian_symmetrize(state.spectrum), max_residue=RESIDUE_TOL)
    return idwt2_haar(WaveletPyramid(lf=lf, hf=state.hf, levels=levels))
