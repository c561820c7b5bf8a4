"""Step-indexed quantities of the corruption chain and the optimizer LR curve."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import corner_radius, radial_distance_grid

HF_MODES = ("vp", "additive")
MASK_DIRECTIONS = ("low_first", "high_first")


@dataclass(frozen=True)
class DiffusionSchedule:
    """Arrays are indexed by step: ``r[t]``, ``alpha_bar[t]`` for t in 0..T and
    ``beta[t-1]``, ``sigma_f[t-1]``, ``w[t-1]`` for t in 1..T.

    ``spectrum_scale`` and ``hf_scale`` convert unit-variance noise into
    coefficient units (calibrated from a reference batch, 1.0 when unset).
    ``hf_scale`` holds one value per HF plane, or a single shared value.
    """

    T: int
    r: np.ndarray
    beta: np.ndarray
    alpha_bar: np.ndarray
    sigma_f: np.ndarray
    w: np.ndarray
    r_max: float
    lf_shape: tuple[int, int]
    hf_mode: str = "vp"
    mask_direction: str = "low_first"
    spectrum_scale: float = 1.0
    hf_scale: tuple = (1.0,)

    def hf_scale_at(self, k: int) -> float:
        return self.hf_scale[k] if len(self.hf_scale) > 1 else self.hf_scale[0]

    def _check_t(self, t: int, low: int = 0):
        if not (low <= t <= self.T):
            raise ValueError(f"step {t} outside [{low}, {self.T}]")

    def removed_mask(self, t: int) -> np.ndarray:
        """Boolean mask of Fourier bins replaced by noise at step t."""
        self._check_t(t)
        rho = radial_distance_grid(*self.lf_shape)
        if t == 0:
            return np.zeros(rho.shape, dtype=bool)
        if self.mask_direction == "low_first":
            return rho <= self.r[t]
        return rho >= self.r_max - self.r[t]

    def hf_signal_coef(self, t: int) -> float:
        if self.hf_mode == "vp":
            return math.sqrt(self.alpha_bar[t])
        return 1.0

    def hf_noise_std(self, t: int) -> float:
        """Std of accumulated HF noise at step t, in unit-noise terms."""
        if self.hf_mode == "vp":
            return math.sqrt(max(1.0 - self.alpha_bar[t], 0.0))
        return math.sqrt(float(np.sum(self.beta[:t])))

    def hf_step_keep(self, t: int) -> float:
        """Factor applied to x_{t-1} by the HF step into t."""
        return math.sqrt(1.0 - self.beta[t - 1]) if self.hf_mode == "vp" else 1.0

    def hf_posterior(self, t: int) -> tuple[float, float]:
        """(c0, ct) with E[x_{t-1} | x0, x_t] = c0 * x0 + ct * x_t for unit-scale noise."""
        a_p, s_p = self.hf_signal_coef(t - 1), self.hf_noise_std(t - 1)
        k, beta = self.hf_step_keep(t), self.beta[t - 1]
        if s_p == 0.0:
            return 1.0 / a_p, 0.0
        prec = 1.0 / s_p ** 2 + k * k / beta
        return (a_p / s_p ** 2) / prec, (k / beta) / prec

    def with_scales(self, spectrum_scale: float, hf_scale) -> "DiffusionSchedule":
        from dataclasses import replace
        return replace(self, spectrum_scale=float(spectrum_scale),
                       hf_scale=tuple(float(v) for v in np.atleast_1d(hf_scale)))


def make_schedule(T: int = 1000, lf_shape: tuple[int, int] = (16, 16), beta_min: float = 1e-4,
                  beta_max: float = 0.05, sigma_f: float = 1.0, weight: float = 1.0,
                  hf_mode: str = "vp", mask_direction: str = "low_first",
                  spectrum_scale: float = 1.0, hf_scale=1.0) -> DiffusionSchedule:
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not (0.0 < beta_min < beta_max < 1.0):
        raise ValueError(f"need 0 < beta_min < beta_max < 1, got {beta_min}, {beta_max}")
    if sigma_f < 0 or weight <= 0:
        raise ValueError("sigma_f must be >= 0 and weight > 0")
    if hf_mode not in HF_MODES:
        raise ValueError(f"hf_mode must be one of {HF_MODES}")
    if mask_direction not in MASK_DIRECTIONS:
        raise ValueError(f"mask_direction must be one of {MASK_DIRECTIONS}")
    r_max = corner_radius(*lf_shape)
    r = r_max * np.arange(T + 1) / T
    r[T] = r_max
    if T == 1:
        beta = np.array([beta_min])
    else:
        beta = beta_min + (beta_max - beta_min) * np.arange(T) / (T - 1)
    alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - beta)])
    return DiffusionSchedule(
        T=T, r=r, beta=beta, alpha_bar=alpha_bar,
        sigma_f=np.full(T, float(sigma_f)), w=np.full(T, float(weight)),
        r_max=r_max, lf_shape=tuple(lf_shape), hf_mode=hf_mode,
        mask_direction=mask_direction, spectrum_scale=float(spectrum_scale),
        hf_scale=tuple(float(v) for v in np.atleast_1d(hf_scale)),
    )


def cutoff_radius(schedule: DiffusionSchedule, t: int) -> float:
    schedule._check_t(t)
    return float(schedule.r[t])


def cosine_lr(base_lr: float, step: int, total_steps: int) -> float:
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))
