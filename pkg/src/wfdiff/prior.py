"""Second-order data prior in the Fourier/wavelet domain.

Statistics are per DFT bin of the h x w coarse grid and pooled over image
channels. ``S`` is the LF spectrum divided by ``spectrum_scale``; ``X`` is the
DFT of the three HF planes (LH, HL, HH) each divided by its ``hf_scale``.
The prior treats (S, X) at every bin as jointly Gaussian, which is enough to
reproduce the data's power spectra and the LF/HF cross-spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import fft2


def _herm(a):
    return np.conj(np.swapaxes(a, -1, -2))


@dataclass
class SpectralPrior:
    """``spectrum_rms`` (h, w): per-bin RMS of the LF spectrum in coefficient units.
    ``hf_cov`` (3, 3, h, w) complex: E[X_k conj(X_l)] / (h w).
    ``hf_cross`` (3, h, w) complex: E[X_k conj(S)] / E|S|^2, the regression of X on S.
    """

    spectrum_rms: np.ndarray
    hf_cov: np.ndarray
    hf_cross: np.ndarray
    spectrum_scale: float = 1.0

    @classmethod
    def flat(cls, shape, spectrum_scale: float = 1.0) -> "SpectralPrior":
        shape = tuple(shape)
        cov = np.zeros((3, 3) + shape, complex)
        cov[[0, 1, 2], [0, 1, 2]] = 1.0
        return cls(np.full(shape, float(spectrum_scale)), cov, np.zeros((3,) + shape, complex),
                   float(spectrum_scale))

    @classmethod
    def fit(cls, spectra: np.ndarray, hf: np.ndarray, spectrum_scale: float, hf_scale) -> "SpectralPrior":
        """``spectra`` (N, C, h, w) complex, ``hf`` (N, 3, C, h, w) in coefficient units."""
        h, w = spectra.shape[-2:]
        rms = np.sqrt(np.mean(np.abs(spectra) ** 2, axis=(0, 1)))
        rms = np.maximum(rms, 1e-6 * spectrum_scale)
        S = spectra / spectrum_scale                                    # N, C, h, w
        X = fft2(hf / np.reshape(hf_scale, (-1, 1, 1, 1)))              # N, 3, C, h, w
        cov = np.einsum("nkcij,nlcij->klij", X, np.conj(X)) / (X.shape[0] * X.shape[2] * h * w)
        cross = np.mean(X * np.conj(S)[:, None], axis=(0, 2)) / np.mean(np.abs(S) ** 2, axis=0)
        return cls(rms, cov, cross, float(spectrum_scale))

    @property
    def hf_power(self) -> np.ndarray:
        return np.real(np.einsum("kkij->kij", self.hf_cov))

    @property
    def lf_power(self) -> np.ndarray:
        """E|S|^2 per bin in normalized units."""
        return (self.spectrum_rms / self.spectrum_scale) ** 2

    def _hf_cov_dft(self, kept: np.ndarray):
        """(h, w, 3, 3) covariance of X at each bin, conditioned on S where ``kept``."""
        h, w = self.spectrum_rms.shape
        full = np.moveaxis(self.hf_cov, (0, 1), (-2, -1)) * (h * w)
        c = np.moveaxis(self.hf_cross, 0, -1)[..., :, None]
        resid = full - (c @ _herm(c)) * self.lf_power[..., None, None]
        cov = np.where(kept[..., None, None], resid, full)
        ridge = 1e-3 * np.real(np.trace(full, axis1=-2, axis2=-1))[..., None, None] / 3
        return cov + ridge * np.eye(3)

    def hf_clean_estimate(self, X: np.ndarray, S: np.ndarray, kept: np.ndarray, a: float, s: float):
        """Posterior mean of the clean HF DFT given X = a X0 + s eps and the kept LF bins.

        X: (3, C, h, w) DFT of unit-noise HF planes; S: (C, h, w) normalized spectrum.
        """
        h, w = kept.shape
        cov = self._hf_cov_dft(kept)
        lam, U = np.linalg.eigh(cov)
        gain = (U * (a * lam / (a * a * lam + s * s * h * w))[..., None, :]) @ _herm(U)
        mean = np.where(kept, self.hf_cross[:, None] * S[None], 0.0)   # 3, C, h, w
        r = np.moveaxis(X - a * mean, 0, -1)[..., None]                 # C, h, w, 3, 1
        return mean + np.moveaxis((gain @ r)[..., 0], -1, 0)

    def lf_from_hf(self, X0: np.ndarray):
        """Standardized direction of E[S | X0] and the fraction of LF variance it explains.

        X0: (..., 3, C, h, w) clean HF DFT. Returns (u (..., C, h, w), r2 (h, w)).
        """
        h, w = self.spectrum_rms.shape
        full = np.moveaxis(self.hf_cov, (0, 1), (-2, -1)) * (h * w)
        full = full + 1e-6 * np.real(np.trace(full, axis1=-2, axis2=-1))[..., None, None] * np.eye(3)
        # Cov(S, X) as a row per bin
        sx = np.conj(np.moveaxis(self.hf_cross, 0, -1)) * self.lf_power[..., None]   # h, w, 3
        coef = np.linalg.solve(full, np.conj(sx)[..., None])[..., 0]                 # Cov(X)^-1 Cov(X, S)
        explained = np.maximum(np.real(np.sum(sx * coef, axis=-1)), 0.0)
        r2 = np.clip(explained / self.lf_power, 0.0, 1.0)
        g = np.einsum("ijk,...kcij->...cij", np.conj(coef), X0)
        u = np.divide(g, np.sqrt(explained), out=np.zeros_like(g), where=explained > 0)
        return u, r2
