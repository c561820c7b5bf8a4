"""Forward corruption chain over :class:`SpectralState`.

Noise draw order per call: the complex Fourier noise first (real parts for
the whole spectrum, then imaginary parts), then each HF plane in list order.
Full-size draws are made even where a mask selects only some bins, so the
number of values consumed depends only on array shapes.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import Rng
from .schedule import DiffusionSchedule
from .spectral import SpectralState


def _fourier_noise(shape, std: float, rng: Rng) -> np.ndarray:
    z = rng.normal((2,) + tuple(shape))
    return std * (z[0] + 1j * z[1])


def _replace_masked(spectrum, mask, noise):
    return np.where(mask, noise, spectrum)


def corrupt_step(state: SpectralState, schedule: DiffusionSchedule, rng: Rng) -> SpectralState:
    """One Markov transition t-1 -> t."""
    if state.t >= schedule.T:
        raise ValueError(f"cannot corrupt beyond T={schedule.T} (state at t={state.t})")
    t = state.t + 1
    mask = schedule.removed_mask(t)
    noise = _fourier_noise(state.spectrum.shape, schedule.sigma_f[t - 1] * schedule.spectrum_scale, rng)
    spectrum = _replace_masked(state.spectrum, mask, noise)
    beta = schedule.beta[t - 1]
    hf = []
    for k, plane in enumerate(state.hf):
        eps = schedule.hf_scale_at(k) * rng.normal(plane.shape)
        if schedule.hf_mode == "vp":
            hf.append(math.sqrt(1.0 - beta) * plane + math.sqrt(beta) * eps)
        else:
            hf.append(plane + math.sqrt(beta) * eps)
    return SpectralState(t=t, spectrum=spectrum, hf=hf, meta=dict(state.meta))


def corrupt_to(state0: SpectralState, t: int, schedule: DiffusionSchedule, rng: Rng) -> SpectralState:
    """Jump from a clean state straight to step t."""
    if state0.t != 0:
        raise ValueError(f"corrupt_to expects a clean state, got t={state0.t}")
    if not (0 <= t <= schedule.T):
        raise ValueError(f"step {t} outside [0, {schedule.T}]")
    if t == 0:
        return state0.copy()
    mask = schedule.removed_mask(t)
    noise = _fourier_noise(state0.spectrum.shape, schedule.sigma_f[t - 1] * schedule.spectrum_scale, rng)
    spectrum = _replace_masked(state0.spectrum, mask, noise)
    a = schedule.hf_signal_coef(t)
    s = schedule.hf_noise_std(t)
    hf = [a * p + s * schedule.hf_scale_at(k) * rng.normal(p.shape) for k, p in enumerate(state0.hf)]
    return SpectralState(t=t, spectrum=spectrum, hf=hf, meta=dict(state0.meta))


def forward_trajectory(state0: SpectralState, schedule: DiffusionSchedule, rng: Rng) -> list[SpectralState]:
    if state0.t != 0:
        raise ValueError(f"trajectory must start at t=0, got t={state0.t}")
    traj = [state0]
    for _ in range(schedule.T):
        traj.append(corrupt_step(traj[-1], schedule, rng))
    return traj
