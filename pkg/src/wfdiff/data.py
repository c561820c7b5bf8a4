"""Synthetic shapes dataset: anti-aliased disks, rectangles and Gaussian blobs."""

from __future__ import annotations

import numpy as np

from .rng import Rng

KINDS = ("disk", "rect", "blob")


def _coverage(d):
    # signed distance (inside positive) -> pixel coverage with a one-pixel ramp
    return np.clip(d + 0.5, 0.0, 1.0)


def render(kind: str, size: int, rng: Rng) -> np.ndarray:
    """One shape mask in [0, 1], shaped (size, size)."""
    yy, xx = np.mgrid[0:size, 0:size] + 0.5
    cy, cx = size * (0.25 + 0.5 * rng.uniform((2,)))
    if kind == "disk":
        radius = size * (0.12 + 0.18 * rng.uniform())
        return _coverage(radius - np.hypot(yy - cy, xx - cx))
    if kind == "rect":
        hy, hx = size * (0.1 + 0.2 * rng.uniform((2,)))
        return _coverage(hy - np.abs(yy - cy)) * _coverage(hx - np.abs(xx - cx))
    if kind == "blob":
        s = size * (0.06 + 0.12 * rng.uniform())
        return np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
    raise ValueError(f"unknown shape kind {kind!r}")


def synth_dataset(count: int, size: int = 16, kinds=KINDS, seed: int = 0,
                  channels: int = 1) -> tuple[list[np.ndarray], list[int]]:
    """Deterministic images shaped (channels, size, size) and their class ids.

    Kinds cycle round-robin, so class ``i % len(kinds)`` labels image ``i``.
    Each image draws from its own child stream of ``Rng(seed)``.
    """
    if size < 2 or size & (size - 1):
        raise ValueError(f"size must be a power of two, got {size}")
    kinds = tuple(kinds)
    root = Rng(seed)
    images, labels = [], []
    for i in range(count):
        rng = root.spawn(i)
        label = i % len(kinds)
        mask = render(kinds[label], size, rng)
        intensity = 0.4 + 0.6 * rng.uniform((channels,))
        background = 0.15 * rng.uniform((channels,))
        img = background[:, None, None] + (intensity - background)[:, None, None] * mask[None]
        images.append(np.clip(img, 0.0, 1.0))
        labels.append(label)
    return images, labels
