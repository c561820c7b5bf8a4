"""Reverse chain from a fully corrupted state back to pixels.

Two update rules turn a denoiser prediction of step t-1 into the next state:

``direct``
    Take the prediction as the new state. Exact with the trajectory oracle.
``implicit``
    Deterministic, variance-keeping rule for learned models, which predict the
    conditional mean of step t-1. Fourier bins outside the annulus removed at
    step t are carried over from the current state (they are either untouched
    signal or noise of the right law). The annulus takes the prediction plus a
    variation term scaled so the bin power matches the prior's per-bin RMS.
    The variation mixes the LF direction predicted by the current clean HF
    estimate (weighted by the fraction of LF variance it explains) with the
    state's own symmetrized noise in those bins, so no fresh randomness enters
    and the LF/HF cross-spectra are kept. HF
    planes recover a clean estimate from the predicted mean through the
    Gaussian posterior of the HF chain and re-project it onto step t-1 with the
    noise direction implied by the current state.
"""

from __future__ import annotations

import numpy as np

from .model import Condition, OracleDenoiser
from .rng import Rng
from .schedule import DiffusionSchedule
from .prior import SpectralPrior
from .spectral import SpectralState, fft2, hermitian_symmetrize, reconstruct

RULES = ("direct", "implicit")


def init_terminal_state(meta: dict, schedule: DiffusionSchedule, rng: Rng, hf_std: float = 1.0) -> SpectralState:
    """All Fourier bins noise at sigma_F(T); HF planes Gaussian at ``hf_std`` (normalized units)."""
    C, L = meta["channels"], meta["levels"]
    h, w = meta["height"] >> L, meta["width"] >> L
    z = rng.normal((2, C, h, w))
    spectrum = schedule.sigma_f[-1] * schedule.spectrum_scale * (z[0] + 1j * z[1])
    hf = []
    for level in range(1, L + 1):
        shape = (C, meta["height"] >> level, meta["width"] >> level)
        for _ in range(3):
            hf.append(hf_std * schedule.hf_scale_at(len(hf)) * rng.normal(shape))
    return SpectralState(t=schedule.T, spectrum=spectrum, hf=hf, meta=dict(meta))


def _hf_clean(state: SpectralState, pred: SpectralState, schedule: DiffusionSchedule):
    c0, ct = schedule.hf_posterior(state.t)
    return [(mu - ct * xt) / c0 for xt, mu in zip(state.hf, pred.hf)]


def implicit_update(state: SpectralState, pred: SpectralState, schedule: DiffusionSchedule,
                    prior: SpectralPrior | None = None) -> SpectralState:
    t = state.t
    keep = ~schedule.removed_mask(t) | schedule.removed_mask(t - 1)
    x0_hf = _hf_clean(state, pred, schedule)
    fill = pred.spectrum
    std = schedule.sigma_f[t - 1] * schedule.spectrum_scale
    if prior is not None and std > 0:
        z = hermitian_symmetrize(state.spectrum) / std
        scales = np.reshape([schedule.hf_scale_at(k) for k in range(3)], (3, 1, 1, 1))
        X0 = fft2(np.stack(x0_hf, axis=-4) / scales)
        u, r2 = prior.lf_from_hf(X0)
        variation = np.sqrt(r2) * u + np.sqrt(1.0 - r2) * z
        rem = np.sqrt(np.maximum(prior.spectrum_rms ** 2 - np.abs(fill) ** 2, 0.0))
        fill = fill + rem * variation
    spectrum = np.where(keep, state.spectrum, fill)
    a_t, s_t = schedule.hf_signal_coef(t), schedule.hf_noise_std(t)
    a_p, s_p = schedule.hf_signal_coef(t - 1), schedule.hf_noise_std(t - 1)
    hf = []
    for xt, x0 in zip(state.hf, x0_hf):
        eps = (xt - a_t * x0) / s_t
        hf.append(a_p * x0 + s_p * eps)
    return SpectralState(t - 1, spectrum, hf, dict(state.meta))


def run_chain(model, state: SpectralState, condition: Condition, schedule: DiffusionSchedule,
              rule: str | None = None) -> SpectralState:
    """Iterate the denoiser from ``state.t`` down to 0."""
    if rule is None:
        rule = "direct" if isinstance(model, OracleDenoiser) else "implicit"
    if rule not in RULES:
        raise ValueError(f"unknown update rule {rule!r}")
    while state.t > 0:
        t = state.t
        pred = model.predict(state, t, condition)
        if rule == "direct":
            state = pred
        else:
            state = implicit_update(state, pred, schedule, getattr(model, "prior", None))
        if not (np.all(np.isfinite(state.spectrum)) and all(np.all(np.isfinite(p)) for p in state.hf)):
            raise FloatingPointError(f"non-finite values in reverse chain at step {t}")
    return state


def sample(model, condition: Condition, schedule: DiffusionSchedule, meta: dict, rng: Rng,
           rule: str | None = None, start: SpectralState | None = None):
    """Returns ``(image, clamped)``; ``image`` is unclamped, ``clamped`` is in [0, 1]."""
    state = start if start is not None else init_terminal_state(meta, schedule, rng)
    final = run_chain(model, state, condition, schedule, rule)
    image = reconstruct(final)
    return image, np.clip(image, 0.0, 1.0)


def sample_many(model, condition: Condition, schedule: DiffusionSchedule, meta: dict, seed: int,
                count: int, rule: str | None = None) -> list[np.ndarray]:
    """``count`` unclamped samples; sample i uses stream ``Rng(seed).spawn(i)``.

    Terminal states are stacked on a leading batch axis and denoised together.
    """
    root = Rng(seed)
    starts = [init_terminal_state(meta, schedule, root.spawn(i)) for i in range(count)]
    batch = SpectralState(schedule.T, np.stack([s.spectrum for s in starts]),
                          [np.stack(p) for p in zip(*[s.hf for s in starts])], dict(meta))
    final = run_chain(model, batch, condition, schedule, rule)
    images = reconstruct(final)
    return [images[i] for i in range(count)]
