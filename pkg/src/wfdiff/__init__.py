"""Diffusion over a hybrid Haar-wavelet / Fourier image representation, in NumPy."""

from .spectral import SpectralState, decompose, reconstruct

__version__ = "0.1.0"

__all__ = ["SpectralState", "decompose", "reconstruct", "__version__"]
