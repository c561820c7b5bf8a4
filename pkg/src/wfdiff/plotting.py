"""Report figures written straight to files (Agg backend, no display)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps PNG bytes reproducible across runs
_META = {"Software": None}


def _save(fig, path):
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)


def _grey(ax, img, title=None):
    img = np.asarray(img)
    if img.ndim == 3:
        img = img[0] if img.shape[0] == 1 else np.moveaxis(img, 0, -1)
    ax.imshow(np.clip(img, 0, 1) if img.ndim == 3 else img, cmap="gray", interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=8)


def loss_curve(steps, losses, path, window: int = 50):
    steps, losses = np.asarray(steps), np.asarray(losses)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(steps, losses, lw=0.5, color="0.7", label="per step")
    if len(losses) >= window:
        smooth = np.convolve(losses, np.ones(window) / window, mode="valid")
        ax.plot(steps[window - 1:], smooth, lw=1.5, color="C0", label=f"mean of {window}")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def radial_spectra(centres, curves: dict, path):
    """``curves`` maps a label to mean power per radial bin."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for label, power in curves.items():
        ax.semilogy(centres, np.maximum(power, 1e-12), marker="o", ms=3, label=label)
    ax.set_xlabel("radius (DFT bins)")
    ax.set_ylabel("mean power")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def image_strip(images, titles, path):
    n = len(images)
    fig, axes = plt.subplots(1, n, figsize=(1.3 * n, 1.6), squeeze=False)
    for ax, img, title in zip(axes[0], images, titles):
        _grey(ax, img, title)
    fig.tight_layout()
    _save(fig, path)


def bands(state, path):
    """LF spectrum magnitude (log, DC centred) and the level-1 HF planes, first channel."""
    spec = np.fft.fftshift(np.log1p(np.abs(state.spectrum[0])))
    panels = [spec] + [p[0] for p in state.hf[:3]]
    fig, axes = plt.subplots(1, 4, figsize=(6, 1.8))
    for ax, img, title in zip(axes, panels, ["log|LF spectrum|", "LH", "HL", "HH"]):
        ax.imshow(img, cmap="viridis", interpolation="nearest")
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(title, fontsize=8)
    fig.tight_layout()
    _save(fig, path)
