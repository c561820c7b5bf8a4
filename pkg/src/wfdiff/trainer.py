"""MSE training of the denoiser on one-step transitions of the forward chain."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import nn
from .forward import corrupt_step, corrupt_to
from .model import DenoiserModel, ModelHyper, init_model
from .prior import SpectralPrior
from .rng import Rng
from .schedule import DiffusionSchedule, cosine_lr, make_schedule
from .spectral import SpectralState, decompose

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    batch_size: int = 16
    total_steps: int = 2000
    base_lr: float = 1e-3
    seed: int = 0
    checkpoint_every: int = 500
    conditional: bool = True
    schedule: dict = field(default_factory=lambda: {"T": 64, "beta_min": 1e-3, "beta_max": 0.2})
    model: dict = field(default_factory=lambda: {"width": 32, "time_dim": 32})
    data: dict = field(default_factory=lambda: {"count": 384, "size": 16, "channels": 1, "seed": 1})

    def __post_init__(self):
        if self.batch_size < 1 or self.total_steps < 1:
            raise ValueError("batch_size and total_steps must be >= 1")


def mse_loss(pred: SpectralState, target: SpectralState, weight: float = 1.0):
    """Weighted mean squared error over re, im and every HF component.

    Returns ``(loss, grad)`` where ``grad`` is a state holding dL/d(re) + i dL/d(im)
    in its spectrum and dL/d(plane) for each HF plane.
    """
    if pred.t != target.t:
        raise ValueError(f"step mismatch: pred t={pred.t}, target t={target.t}")
    if pred.spectrum.shape != target.spectrum.shape or len(pred.hf) != len(target.hf) or any(
            a.shape != b.shape for a, b in zip(pred.hf, target.hf)):
        raise ValueError("prediction and target shapes differ")
    ds = pred.spectrum - target.spectrum
    dhf = [a - b for a, b in zip(pred.hf, target.hf)]
    n = 2 * ds.size + sum(d.size for d in dhf)
    sq = np.sum(ds.real ** 2) + np.sum(ds.imag ** 2) + sum(np.sum(d ** 2) for d in dhf)
    loss = weight * sq / n
    c = 2.0 * weight / n
    grad = SpectralState(t=pred.t, spectrum=c * ds, hf=[c * d for d in dhf], meta=dict(pred.meta))
    return float(loss), grad


def calibrate(schedule: DiffusionSchedule, states: list[SpectralState]):
    """Noise scales and data prior from a reference batch.

    Returns the schedule with ``spectrum_scale`` = RMS spectrum magnitude and
    ``hf_scale`` = RMS of each HF plane, and the fitted :class:`SpectralPrior`.
    """
    spec = np.stack([s.spectrum for s in states])
    hf = np.stack([np.stack(s.hf) for s in states])  # N, K, C, h, w
    hf_rms = np.sqrt(np.mean(hf ** 2, axis=(0, 2, 3, 4)))
    scale = float(np.sqrt(np.mean(np.abs(spec) ** 2)))
    schedule = schedule.with_scales(scale, hf_rms)
    return schedule, SpectralPrior.fit(spec, hf, scale, hf_rms)


@dataclass
class TrainState:
    model: DenoiserModel
    rng: Rng
    step: int = 0


def build(config: TrainConfig, states: list[SpectralState]) -> TrainState:
    """Calibrated schedule plus a freshly initialised model."""
    lf_shape = states[0].spectrum.shape[-2:]
    schedule, prior = calibrate(make_schedule(lf_shape=lf_shape, **config.schedule), states[:64])
    hyper = ModelHyper(channels=states[0].meta["channels"],
                       num_classes=config.model.get("num_classes", 3 if config.conditional else 0),
                       **{k: v for k, v in config.model.items() if k != "num_classes"})
    rng = Rng(config.seed)
    model = init_model(hyper, schedule, rng.spawn(0), prior=prior)
    return TrainState(model=model, rng=rng)


def training_step(model: DenoiserModel, states: list[SpectralState], labels, config: TrainConfig,
                  rng: Rng, step: int) -> float:
    """One optimizer step on a batch of clean states; ``step`` counts from 1."""
    sched = model.schedule
    B = len(states)
    ts = rng.integers(1, sched.T + 1, size=B)
    inputs, targets = [], []
    for s0, t in zip(states, ts):
        prev = corrupt_to(s0, int(t) - 1, sched, rng)
        inputs.append(corrupt_step(prev, sched, rng))
        targets.append(prev)
    norm_in = [model.normalize(s) for s in inputs]
    norm_tg = [model.normalize(s) for s in targets]
    spec_in = np.stack([a for a, _ in norm_in])
    hf_in = np.stack([b for _, b in norm_in])
    ids = list(labels) if config.conditional else [-1] * B
    model.zero_grad()
    spec, hf, cache = model.predict_normalized(spec_in, hf_in, ts, ids)
    total = 0.0
    dre = np.empty(spec.shape)
    dim = np.empty(spec.shape)
    dhf = np.empty(hf.shape)
    for b in range(B):
        pred = SpectralState(int(ts[b]) - 1, spec[b], [hf[b]])
        tgt = SpectralState(int(ts[b]) - 1, norm_tg[b][0], [norm_tg[b][1]])
        loss, g = mse_loss(pred, tgt, sched.w[ts[b] - 1])
        total += loss
        dre[b], dim[b], dhf[b] = g.spectrum.real / B, g.spectrum.imag / B, g.hf[0] / B
    model.backward_normalized(dre, dim, dhf, cache)
    lr = cosine_lr(config.base_lr, step - 1, config.total_steps)
    for p in model.params.values():
        nn.adam_update(p, lr, step)
    return total / B


def prepare(config: TrainConfig):
    from .data import synth_dataset
    d = dict(config.data)
    images, labels = synth_dataset(d.pop("count"), size=d.pop("size"), seed=d.pop("seed"),
                                   channels=d.pop("channels", 1), **d)
    states = [decompose(im, 1) for im in images]
    return images, labels, states


def train(config: TrainConfig, out_dir: str | Path | None = None, resume: str | Path | None = None,
          stop_at: int | None = None):
    """Run ``total_steps`` steps (or up to ``stop_at``); returns (state, losses).

    Writes ``loss.log`` (``step lr loss`` per line) and ``ckpt_<step>.wfd``
    files under ``out_dir`` when given: one per ``checkpoint_every`` steps
    and one at the last step run.
    """
    from .checkpoint import load_checkpoint, save_checkpoint

    _, labels, states = prepare(config)
    if resume is not None:
        ts = load_checkpoint(resume)
    else:
        ts = build(config, states)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    losses = []
    end = config.total_steps if stop_at is None else min(stop_at, config.total_steps)
    logf = None
    if out is not None:
        logf = open(out / "loss.log", "a" if resume is not None else "w")
    try:
        while ts.step < end:
            step = ts.step + 1
            idx = ts.rng.integers(0, len(states), size=config.batch_size)
            loss = training_step(ts.model, [states[i] for i in idx], [labels[i] for i in idx],
                                 config, ts.rng, step)
            ts.step = step
            if not math.isfinite(loss) or not all(np.all(np.isfinite(p.values)) for p in ts.model.params.values()):
                raise FloatingPointError(f"non-finite loss or parameters at step {step}")
            losses.append(loss)
            if logf is not None:
                logf.write(f"{step} {cosine_lr(config.base_lr, step - 1, config.total_steps):.9g} {loss:.9g}\n")
            if step % 100 == 0:
                log.info("step %d loss %.5f", step, loss)
            due = config.checkpoint_every and step % config.checkpoint_every == 0
            if out is not None and (due or step == end):
                save_checkpoint(out / f"ckpt_{step:06d}.wfd", ts)
    finally:
        if logf is not None:
            logf.close()
    return ts, losses
