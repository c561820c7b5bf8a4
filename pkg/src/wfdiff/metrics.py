"""Desk-scale diagnostics: PSNR, correlation, band energies, radial power spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import WaveletPyramid, corner_radius, fft2, radial_distance_grid


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """PSNR in dB for [0, 1] images; ``inf`` when identical."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    return float("inf") if mse == 0 else 10.0 * np.log10(1.0 / mse)


def correlation(a: np.ndarray, b: np.ndarray) -> float:
    a = np.ravel(a) - np.mean(a)
    b = np.ravel(b) - np.mean(b)
    den = np.sqrt(np.sum(a * a) * np.sum(b * b))
    return 0.0 if den == 0 else float(np.sum(a * b) / den)


@dataclass
class RadialSpectrum:
    power: np.ndarray   # mean |X|^2 per bin, 0 where empty
    counts: np.ndarray  # number of DFT bins in each radial bin
    edges: np.ndarray

    @property
    def empty(self) -> np.ndarray:
        return self.counts == 0

    @property
    def total(self) -> float:
        return float(np.sum(self.power * self.counts))


def radial_power_spectrum(plane: np.ndarray, nbins: int) -> RadialSpectrum:
    """Azimuthal mean of |fft2(plane)|^2 over uniform radius bins on [0, r_max]."""
    if nbins < 2:
        raise ValueError("nbins must be >= 2")
    plane = np.asarray(plane, dtype=np.float64)
    h, w = plane.shape
    rho = radial_distance_grid(h, w)
    r_max = corner_radius(h, w)
    idx = np.minimum((rho / r_max * nbins).astype(int), nbins - 1).ravel()
    p = np.abs(fft2(plane)) ** 2
    sums = np.bincount(idx, weights=p.ravel(), minlength=nbins)
    counts = np.bincount(idx, minlength=nbins)
    power = np.divide(sums, counts, out=np.zeros(nbins), where=counts > 0)
    return RadialSpectrum(power=power, counts=counts, edges=np.linspace(0.0, r_max, nbins + 1))


def mean_radial_power(images, nbins: int) -> np.ndarray:
    """Mean radial power over images shaped (C, H, W) and their channels."""
    rows = [radial_power_spectrum(ch, nbins).power for im in images for ch in np.asarray(im)]
    return np.mean(rows, axis=0)


def band_energy(pyramid: WaveletPyramid) -> dict:
    """Sum of squares of the LF band and of each HF plane, in pyramid order."""
    return {"lf": float(np.sum(pyramid.lf ** 2)), "hf": [float(np.sum(p ** 2)) for p in pyramid.hf]}
