"""Two-branch convolutional denoiser and the trajectory oracle.

Data flow of :meth:`DenoiserModel.core_forward` for a batch of B states with
C image channels on an h x w grid (levels = 1), width F, time dim D::

    Fourier branch  [re(C), im(C), mask_t, radius] --conv--> F/2
    wavelet branch  [LH(C), HL(C), HH(C), LL_t(C)] --conv--> F/2
    concat -> F
    2 x residual block: h + conv2(silu(conv1(silu(h)) + time_bias_k))
    cross-attention: pixels as queries, condition tokens as keys/values
    head: conv(silu(h)) -> 5C

Fourier outputs are scaled by the per-bin reference RMS (inputs divided by
it). HF outputs are a correction to the clean estimate of a Gaussian prior
fitted to the data's second-order statistics (:class:`SpectralPrior`, see
:meth:`DenoiserModel.hf_skip`), so the network never reproduces x_t itself.

The Fourier channels are laid out with DC at the grid centre (fftshift) so
the radial mask is a centred disk for the convolutions. ``mask_t`` and
``radius`` are fixed geometry channels derived from t and the grid, not
learned inputs. ``LL_t`` is the spatial LF image synthesized from the bins
still kept at step t, so the wavelet branch sees the LF content on its own
pixel grid. Predictions are in units normalized by the schedule's
``spectrum_scale`` / ``hf_scale``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .rng import Rng
from .schedule import DiffusionSchedule
from .prior import SpectralPrior
from .spectral import SpectralState, fft2, hermitian_symmetrize, ifft2c, radial_distance_grid


@dataclass(frozen=True)
class Condition:
    kind: str = "unconditional"
    class_id: int = -1

    @classmethod
    def of(cls, class_id: int | None) -> "Condition":
        if class_id is None or class_id < 0:
            return cls()
        return cls("class_id", int(class_id))


@dataclass(frozen=True)
class ModelHyper:
    width: int = 32
    time_dim: int = 32
    num_classes: int = 3
    channels: int = 1
    levels: int = 1

    @property
    def in_channels(self) -> int:
        return (2 + 3 * self.levels) * self.channels

    @property
    def wavelet_in_channels(self) -> int:
        return 4 * self.channels


def param_count(hyper: ModelHyper) -> int:
    """Closed-form parameter count for :func:`init_model`."""
    F, D, C, N = hyper.width, hyper.time_dim, hyper.channels, hyper.num_classes
    half = F // 2
    n = (2 * C + 2) * half * 9 + half          # Fourier stem
    n += 4 * C * half * 9 + half               # wavelet stem
    n += D * F + F                             # time MLP
    n += 2 * (2 * (F * F * 9 + F) + F * F + F)  # residual blocks
    n += 4 * F * F                             # attention projections
    n += (N + 1) * F                           # class table incl. null token
    n += F * 5 * C * 9 + 5 * C                 # head
    return n


def _shift(x):
    h, w = x.shape[-2:]
    return np.roll(x, (h // 2, w // 2), axis=(-2, -1))


def _unshift(x):
    h, w = x.shape[-2:]
    return np.roll(x, (-(h // 2), -(w // 2)), axis=(-2, -1))


class DenoiserModel:
    def __init__(self, hyper: ModelHyper, params: dict[str, nn.ParamTensor], schedule: DiffusionSchedule,
                 prior: SpectralPrior | None = None):
        self.hyper = hyper
        self.params = params
        self.schedule = schedule
        self.prior = prior if prior is not None else SpectralPrior.flat(schedule.lf_shape, schedule.spectrum_scale)

    @property
    def spectrum_rms(self) -> np.ndarray:
        return self.prior.spectrum_rms

    def __getitem__(self, name):
        return self.params[name].values

    @property
    def dtype(self):
        return next(iter(self.params.values())).values.dtype

    def astype(self, dtype) -> "DenoiserModel":
        params = {k: nn.ParamTensor(k, p.values.astype(dtype), p.grad.astype(dtype),
                                    p.m.astype(dtype), p.v.astype(dtype))
                  for k, p in self.params.items()}
        return DenoiserModel(self.hyper, params, self.schedule, self.prior)

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    # ------------------------------------------------------------ geometry

    def geometry(self, t: np.ndarray) -> np.ndarray:
        """(B, 2, h, w) fixed channels: removed-mask at t and normalized radius."""
        h, w = self.schedule.lf_shape
        rho = _shift(radial_distance_grid(h, w)) / self.schedule.r_max
        masks = np.stack([_shift(self.schedule.removed_mask(int(s))) for s in t]).astype(np.float64)
        return np.concatenate([masks[:, None], np.broadcast_to(rho, masks.shape)[:, None]], axis=1)

    def kept_lf_image(self, spec_n, t):
        """(B, C, h, w) spatial LF from the bins not removed at t, unit-RMS scaled."""
        h, w = self.schedule.lf_shape
        keep = np.stack([~self.schedule.removed_mask(int(s)) for s in t])[:, None]
        return ifft2c(hermitian_symmetrize(np.where(keep, spec_n, 0.0))).real * np.sqrt(h * w)

    def hf_skip(self, hf_n, spec_n, t):
        """Network-free part of the HF mean of step t-1, and the gain on the net output.

        ``x0_hat`` is the posterior mean of the clean HF planes under the data
        prior given x_t and the LF bins still kept at step t
        (:meth:`SpectralPrior.hf_clean_estimate`) plus the net output at gain
        ``s / sqrt(a^2 + s^2)``. The mean of step t-1 is ``c0 * x0_hat + ct * x_t``.
        Returns (skip (B, 3C, h, w), net gain (B, 1, 1, 1)).
        """
        s = self.schedule
        C = self.hyper.channels
        h, w = s.lf_shape
        X = fft2(np.asarray(hf_n, dtype=np.float64)).reshape(-1, 3, C, h, w)
        spec_n = np.asarray(spec_n)
        skip = np.empty(np.shape(hf_n))
        gain = np.empty((len(t), 1, 1, 1))
        for b, step in enumerate(np.asarray(t)):
            step = int(step)
            a, sd = s.hf_signal_coef(step), s.hf_noise_std(step)
            c0, ct = s.hf_posterior(step)
            x0 = self.prior.hf_clean_estimate(X[b], spec_n[b], ~s.removed_mask(step), a, sd)
            skip[b] = c0 * ifft2c(x0).real.reshape(3 * C, h, w) + ct * hf_n[b]
            gain[b] = c0 * sd / np.sqrt(a * a + sd * sd)
        return skip, gain

    # ------------------------------------------------------------ core net

    def core_forward(self, fin, hin, t, tokens):
        p = self
        cache = {}
        dt = self.dtype
        fin, hin, tokens = fin.astype(dt), hin.astype(dt), tokens.astype(dt)
        f, cache["fstem"] = nn.conv2d(fin, p["fstem.w"], p["fstem.b"])
        w, cache["wstem"] = nn.conv2d(hin, p["wstem.w"], p["wstem.b"])
        h = np.concatenate([f, w], axis=1)
        e = nn.time_embedding(t, self.hyper.time_dim).astype(dt)
        tm_pre, cache["time"] = nn.dense(e, p["time.w"], p["time.b"])
        tm, cache["time.act"] = nn.silu(tm_pre)
        for k in range(2):
            pre = f"block{k}."
            tb, cache[pre + "time"] = nn.dense(tm, p[pre + "time.w"], p[pre + "time.b"])
            a1, cache[pre + "act1"] = nn.silu(h)
            c1, cache[pre + "conv1"] = nn.conv2d(a1, p[pre + "conv1.w"], p[pre + "conv1.b"])
            c1 = c1 + tb[:, :, None, None]
            a2, cache[pre + "act2"] = nn.silu(c1)
            c2, cache[pre + "conv2"] = nn.conv2d(a2, p[pre + "conv2.w"], p[pre + "conv2.b"])
            h = h + c2
        B, F, H, W = h.shape
        x = h.reshape(B, F, H * W).transpose(0, 2, 1)
        q = x @ p["attn.q"].T
        kk = tokens @ p["attn.k"].T
        vv = tokens @ p["attn.v"].T
        o, cache["attn"] = nn.cross_attention(q, kk, vv)
        y = o @ p["attn.o"].T
        cache["attn.io"] = (x, tokens, o)
        h = h + y.transpose(0, 2, 1).reshape(B, F, H, W)
        a, cache["head.act"] = nn.silu(h)
        out, cache["head"] = nn.conv2d(a, p["head.w"], p["head.b"])
        return out, cache

    def core_backward(self, dout, cache):
        """Accumulate parameter gradients; returns d(tokens)."""
        g = {k: v.grad for k, v in self.params.items()}
        p = self
        da, dk, db = nn.conv2d_backward(dout, cache["head"])
        g["head.w"] += dk
        g["head.b"] += db
        dh = nn.silu_backward(da, cache["head.act"])
        B, F, H, W = dh.shape
        x, tokens, o = cache["attn.io"]
        dy = dh.reshape(B, F, H * W).transpose(0, 2, 1)
        g["attn.o"] += np.einsum("bpi,bpj->ij", dy, o)
        do = dy @ p["attn.o"]
        dq, dkk, dvv = nn.cross_attention_backward(do, cache["attn"])
        g["attn.q"] += np.einsum("bpi,bpj->ij", dq, x)
        g["attn.k"] += np.einsum("bsi,bsj->ij", dkk, tokens)
        g["attn.v"] += np.einsum("bsi,bsj->ij", dvv, tokens)
        dx = dq @ p["attn.q"]
        dtokens = dkk @ p["attn.k"] + dvv @ p["attn.v"]
        dh = dh + dx.transpose(0, 2, 1).reshape(B, F, H, W)
        dtm = 0
        for k in (1, 0):
            pre = f"block{k}."
            da2, dk, db = nn.conv2d_backward(dh, cache[pre + "conv2"])
            g[pre + "conv2.w"] += dk
            g[pre + "conv2.b"] += db
            dc1 = nn.silu_backward(da2, cache[pre + "act2"])
            dtb = dc1.sum(axis=(2, 3))
            da1, dk, db = nn.conv2d_backward(dc1, cache[pre + "conv1"])
            g[pre + "conv1.w"] += dk
            g[pre + "conv1.b"] += db
            dh = dh + nn.silu_backward(da1, cache[pre + "act1"])
            dtm_k, dw, db = nn.dense_backward(dtb, cache[pre + "time"])
            g[pre + "time.w"] += dw
            g[pre + "time.b"] += db
            dtm = dtm + dtm_k
        dtm_pre = nn.silu_backward(dtm, cache["time.act"])
        _, dw, db = nn.dense_backward(dtm_pre, cache["time"])
        g["time.w"] += dw
        g["time.b"] += db
        half = F // 2
        _, dk, db = nn.conv2d_backward(dh[:, :half], cache["fstem"])
        g["fstem.w"] += dk
        g["fstem.b"] += db
        _, dk, db = nn.conv2d_backward(dh[:, half:], cache["wstem"])
        g["wstem.w"] += dk
        g["wstem.b"] += db
        return dtokens

    # ------------------------------------------------------------ normalized I/O

    def tokens_for(self, class_ids) -> np.ndarray:
        N = self.hyper.num_classes
        if any(c is not None and c >= N for c in class_ids):
            raise ValueError(f"class id out of range [0, {N})")
        ids = np.array([N if c is None or c < 0 else c for c in class_ids])
        return self["cond.table"][ids][:, None, :], ids

    def predict_normalized(self, spec_n, hf_n, t, class_ids):
        """Batched prediction on normalized arrays.

        spec_n: complex (B, C, h, w); hf_n: (B, 3C, h, w); t, class_ids: length B.
        Returns the symmetrized complex spectrum, the HF planes and a cache.
        """
        C = self.hyper.channels
        t = np.asarray(t)
        gain = self.spectrum_rms / self.schedule.spectrum_scale
        s = _shift(spec_n / gain)
        fin = np.concatenate([s.real, s.imag, self.geometry(t)], axis=1)
        tokens, ids = self.tokens_for(class_ids)
        hin = np.concatenate([hf_n, self.kept_lf_image(spec_n, t)], axis=1)
        out, cache = self.core_forward(fin, hin, t, tokens)
        re = _unshift(out[:, :C]).astype(np.float64)
        im = _unshift(out[:, C:2 * C]).astype(np.float64)
        spec = hermitian_symmetrize(gain * (re + 1j * im))
        skip, on_net = self.hf_skip(hf_n, spec_n, t)
        hf = skip + on_net * out[:, 2 * C:].astype(np.float64)
        cache["ids"] = ids
        cache["hf.on_net"] = on_net
        return spec, hf, cache

    def backward_normalized(self, dspec_re, dspec_im, dhf, cache):
        """Backprop gradients w.r.t. the real/imag parts of the predicted spectrum and HF."""
        # symmetrization is an orthogonal projection, so its adjoint is itself
        gain = self.spectrum_rms / self.schedule.spectrum_scale
        dsym = gain * hermitian_symmetrize(dspec_re + 1j * dspec_im)
        dnet = cache["hf.on_net"] * dhf
        dout = np.concatenate([_shift(dsym.real), _shift(dsym.imag), dnet], axis=1).astype(self.dtype)
        dtokens = self.core_backward(dout, cache)
        np.add.at(self.params["cond.table"].grad, cache["ids"], dtokens[:, 0, :])

    # ------------------------------------------------------------ state API

    def hf_scales(self) -> np.ndarray:
        C = self.hyper.channels
        return np.repeat([self.schedule.hf_scale_at(k) for k in range(3)], C)[:, None, None]

    def normalize(self, state: SpectralState):
        spec = state.spectrum / self.schedule.spectrum_scale
        hf = np.concatenate(state.hf, axis=-3) / self.hf_scales()
        return spec, hf

    def predict(self, state: SpectralState, t: int, condition: Condition) -> SpectralState:
        if state.meta.get("levels", 1) != 1:
            raise ValueError("denoiser supports levels = 1 only")
        if t < 1 or state.t != t:
            raise ValueError(f"forward needs state.t == t >= 1, got state.t={state.t}, t={t}")
        spec_n, hf_n = self.normalize(state)
        batched = spec_n.ndim == 4
        if not batched:
            spec_n, hf_n = spec_n[None], hf_n[None]
        B = spec_n.shape[0]
        cid = condition.class_id if condition.kind == "class_id" else -1
        spec, hf, _ = self.predict_normalized(spec_n, hf_n, [t] * B, [cid] * B)
        spec = spec * self.schedule.spectrum_scale
        hf = hf * self.hf_scales()
        if not batched:
            spec, hf = spec[0], hf[0]
        C = self.hyper.channels
        planes = [hf[..., k * C:(k + 1) * C, :, :] for k in range(3)]
        return SpectralState(t=t - 1, spectrum=spec, hf=planes, meta=dict(state.meta))


def init_model(hyper: ModelHyper, schedule: DiffusionSchedule, rng: Rng, dtype=np.float32,
               prior: SpectralPrior | None = None) -> DenoiserModel:
    F, D, C, N = hyper.width, hyper.time_dim, hyper.channels, hyper.num_classes
    if F < 4 or F % 2 or D % 2 or N < 0 or C < 1:
        raise ValueError(f"invalid model hyperparameters {hyper}")
    if hyper.levels != 1:
        raise ValueError("denoiser supports levels = 1 only")
    half = F // 2
    specs = [
        ("fstem.w", (half, 2 * C + 2, 3, 3), "kernel"), ("fstem.b", (half,), "zero"),
        ("wstem.w", (half, 4 * C, 3, 3), "kernel"), ("wstem.b", (half,), "zero"),
        ("time.w", (F, D), "kernel"), ("time.b", (F,), "zero"),
    ]
    for k in range(2):
        specs += [
            (f"block{k}.conv1.w", (F, F, 3, 3), "kernel"), (f"block{k}.conv1.b", (F,), "zero"),
            (f"block{k}.time.w", (F, F), "kernel"), (f"block{k}.time.b", (F,), "zero"),
            (f"block{k}.conv2.w", (F, F, 3, 3), "kernel"), (f"block{k}.conv2.b", (F,), "zero"),
        ]
    specs += [("attn.q", (F, F), "kernel"), ("attn.k", (F, F), "kernel"),
              ("attn.v", (F, F), "kernel"), ("attn.o", (F, F), "kernel"),
              ("cond.table", (N + 1, F), "embed"),
              ("head.w", (5 * C, F, 3, 3), "kernel"), ("head.b", (5 * C,), "zero")]
    params = {}
    for name, shape, kind in specs:
        if kind == "zero":
            vals = np.zeros(shape, dtype=dtype)
        elif kind == "embed":
            vals = (0.02 * rng.normal(shape)).astype(dtype)
        else:
            fan_in = int(np.prod(shape[1:]))
            vals = nn.init_kernel(rng, shape, fan_in, dtype)
        params[name] = nn.ParamTensor(name, vals)
    model = DenoiserModel(hyper, params, schedule, prior)
    assert sum(p.values.size for p in params.values()) == param_count(hyper)
    return model


class OracleDenoiser:
    """Returns the true previous state of a recorded forward trajectory."""

    def __init__(self, trajectory: list[SpectralState]):
        self.trajectory = trajectory

    def predict(self, state: SpectralState, t: int, condition: Condition | None = None) -> SpectralState:
        if not (1 <= t < len(self.trajectory)):
            raise ValueError(f"no trajectory entry for t-1={t - 1}")
        return self.trajectory[t - 1].copy()


def forward(model, state: SpectralState, t: int, condition: Condition | None = None) -> SpectralState:
    return model.predict(state, t, condition or Condition())


def oracle_denoiser(trajectory: list[SpectralState], t: int) -> SpectralState:
    return OracleDenoiser(trajectory).predict(trajectory[t], t)
