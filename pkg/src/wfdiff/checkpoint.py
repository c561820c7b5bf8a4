"""Binary checkpoint (little-endian throughout).

Layout::

    b"WFD1"                       magic
    u32 version                   = 1
    hyper  : u32 width, levels, num_classes, time_dim, T, channels, lf_h, lf_w
    schedule: u32 hf_mode, mask_direction (index into the mode tuples)
              f64 r_max, spectrum_scale
              u32 n_hf, f64 hf_scale[n_hf]
              f64 r[T+1], beta[T], alpha_bar[T+1], sigma_f[T], w[T]
    prior  : f64 spectrum_rms[lf_h * lf_w]
              f64 hf_cov real[3 * 3 * lf_h * lf_w], imag[...]
              f64 hf_cross real[3 * lf_h * lf_w], imag[...]
    rng    : u64 key, u64 counter
    train  : u64 step
    u32 n_tensors, then per tensor:
              u32 name_len, name (utf-8), u32 rank, u32 dims..., f32 values

Tensors are the model parameters under their own names plus the Adam
moments as ``adam.m/<name>`` and ``adam.v/<name>``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import DenoiserModel, ModelHyper
from .prior import SpectralPrior
from .nn import ParamTensor
from .rng import Rng
from .schedule import HF_MODES, MASK_DIRECTIONS, DiffusionSchedule

MAGIC = b"WFD1"
VERSION = 1


class CheckpointError(ValueError):
    pass


def _tensor_bytes(name: str, arr: np.ndarray) -> bytes:
    nb = name.encode("utf-8")
    head = struct.pack("<I", len(nb)) + nb + struct.pack("<I", arr.ndim)
    head += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def dumps(ts) -> bytes:
    model: DenoiserModel = ts.model
    h, s = model.hyper, model.schedule
    out = [MAGIC, struct.pack("<I", VERSION)]
    out.append(struct.pack("<8I", h.width, h.levels, h.num_classes, h.time_dim, s.T, h.channels, *s.lf_shape))
    out.append(struct.pack("<2I", HF_MODES.index(s.hf_mode), MASK_DIRECTIONS.index(s.mask_direction)))
    out.append(struct.pack("<2d", s.r_max, s.spectrum_scale))
    out.append(struct.pack("<I", len(s.hf_scale)) + np.asarray(s.hf_scale, dtype="<f8").tobytes())
    pr = model.prior
    for arr in (s.r, s.beta, s.alpha_bar, s.sigma_f, s.w, pr.spectrum_rms):
        out.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    for arr in (pr.hf_cov.real, pr.hf_cov.imag, pr.hf_cross.real, pr.hf_cross.imag):
        out.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    key, counter = ts.rng.state()
    out.append(struct.pack("<3Q", key, counter, ts.step))
    tensors = []
    for name, p in model.params.items():
        tensors.append((name, p.values))
    for name, p in model.params.items():
        tensors.append(("adam.m/" + name, p.m))
        tensors.append(("adam.v/" + name, p.v))
    out.append(struct.pack("<I", len(tensors)))
    out.extend(_tensor_bytes(n, a) for n, a in tensors)
    return b"".join(out)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CheckpointError(f"truncated checkpoint at byte {self.pos} (need {n} more)")
        b = self.buf[self.pos:self.pos + n]
        self.pos += n
        return b

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def array(self, n: int, dtype: str) -> np.ndarray:
        return np.frombuffer(self.take(n * np.dtype(dtype).itemsize), dtype=dtype).copy()


def loads(buf: bytes):
    from .trainer import TrainState

    r = _Reader(buf)
    magic = r.take(4)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic {magic!r}")
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    width, levels, ncls, tdim, T, channels, lh, lw = r.unpack("<8I")
    hf_mode, mask_dir = r.unpack("<2I")
    if hf_mode >= len(HF_MODES) or mask_dir >= len(MASK_DIRECTIONS):
        raise CheckpointError("unknown schedule mode code")
    r_max, spectrum_scale = r.unpack("<2d")
    (n_hf,) = r.unpack("<I")
    hf_scale = tuple(float(v) for v in r.array(n_hf, "<f8"))
    arrs = [r.array(n, "<f8").astype(np.float64) for n in (T + 1, T, T + 1, T, T, lh * lw)]
    schedule = DiffusionSchedule(T=T, r=arrs[0], beta=arrs[1], alpha_bar=arrs[2], sigma_f=arrs[3],
                                 w=arrs[4], r_max=r_max, lf_shape=(lh, lw), hf_mode=HF_MODES[hf_mode],
                                 mask_direction=MASK_DIRECTIONS[mask_dir],
                                 spectrum_scale=spectrum_scale, hf_scale=hf_scale)
    vre, vim = (r.array(9 * lh * lw, "<f8").reshape(3, 3, lh, lw) for _ in range(2))
    cre, cim = (r.array(3 * lh * lw, "<f8").reshape(3, lh, lw) for _ in range(2))
    prior = SpectralPrior(arrs[5].reshape(lh, lw), vre + 1j * vim, cre + 1j * cim, spectrum_scale)
    key, counter, step = r.unpack("<3Q")
    (n,) = r.unpack("<I")
    tensors = {}
    for _ in range(n):
        (ln,) = r.unpack("<I")
        name = r.take(ln).decode("utf-8")
        (rank,) = r.unpack("<I")
        dims = r.unpack(f"<{rank}I")
        tensors[name] = r.array(int(np.prod(dims)), "<f4").astype(np.float32).reshape(dims)
    if r.pos != len(buf):
        raise CheckpointError(f"{len(buf) - r.pos} trailing bytes after tensor block")
    params = {}
    for name, vals in tensors.items():
        if name.startswith("adam."):
            continue
        try:
            params[name] = ParamTensor(name, vals, m=tensors["adam.m/" + name], v=tensors["adam.v/" + name])
        except KeyError as e:
            raise CheckpointError(f"missing optimizer moment {e}") from None
    hyper = ModelHyper(width=width, time_dim=tdim, num_classes=ncls, channels=channels, levels=levels)
    model = DenoiserModel(hyper, params, schedule, prior)
    return TrainState(model=model, rng=Rng(key, counter), step=step)


def save_checkpoint(path, ts) -> None:
    path = Path(path)
    try:
        path.write_bytes(dumps(ts))
    except OSError as e:
        raise OSError(f"cannot write checkpoint {path}: {e.strerror}") from e


def load_checkpoint(path):
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as e:
        raise OSError(f"cannot read checkpoint {path}: {e.strerror}") from e
    try:
        return loads(buf)
    except CheckpointError as e:
        raise CheckpointError(f"{path}: {e}") from None
