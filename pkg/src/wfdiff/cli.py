"""Command line front end: ``wfdiff <command> [options]``.

Every command accepts ``--config PATH`` and repeated ``--set key=value``
overrides, and writes its artifacts under ``--out``. Failures print one line
``error: <Kind>: <message>`` to stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import config as cfg
from .checkpoint import load_checkpoint
from .data import synth_dataset
from .forward import corrupt_to, forward_trajectory
from .metrics import band_energy, correlation, mean_radial_power, psnr
from .model import Condition
from .netpbm import read_image, write_image
from .rng import Rng
from .sampler import sample_many
from .schedule import make_schedule
from .spectral import corner_radius, decompose, dft2_reference, dwt2_haar, fft2, idwt2_haar, reconstruct
from .trainer import calibrate, train

log = logging.getLogger("wfdiff")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: Usage: {message}\n")
        sys.exit(2)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _image_schedule(values: dict, state):
    """Schedule for a single image, noise scales calibrated on that image."""
    sched = make_schedule(lf_shape=state.spectrum.shape[-2:], **cfg.section(values, "schedule"))
    return calibrate(sched, [state])[0]


def _load_input(path, levels=1):
    image = read_image(path)
    return image, decompose(image, levels)


# ------------------------------------------------------------------ commands

def cmd_decompose(args, values):
    out = _out_dir(args)
    image, state = _load_input(args.inp, args.levels)
    e = band_energy(dwt2_haar(image, args.levels))
    rows = [["lf", args.levels, f"{e['lf']:.12g}"]]
    for k, energy in enumerate(e["hf"]):
        rows.append([("LH", "HL", "HH")[k % 3], k // 3 + 1, f"{energy:.12g}"])
    _write_csv(out / "bands.csv", ["band", "level", "energy"], rows)
    lf = reconstruct(state.copy(hf=[np.zeros_like(p) for p in state.hf]))
    write_image(out / "lf_only.pgm" if image.shape[0] == 1 else out / "lf_only.ppm", lf)
    from .plotting import bands
    bands(state, out / "bands.png")
    print(f"decompose: {len(rows)} bands -> {out}")


def cmd_corrupt(args, values):
    image, state = _load_input(args.inp)
    sched = _image_schedule(values, state)
    if not 0 <= args.t <= sched.T:
        raise CliError(f"--t {args.t} outside [0, {sched.T}]")
    noisy = corrupt_to(state, args.t, sched, Rng(args.seed))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_image(args.out, reconstruct(noisy))
    print(f"corrupt: t={args.t} -> {args.out}")


def cmd_chain(args, values):
    out = _out_dir(args)
    image, state = _load_input(args.inp)
    sched = _image_schedule(values, state)
    ts = args.ts if args.ts else sorted({0, sched.T // 4, sched.T // 2, 3 * sched.T // 4, sched.T})
    bad = [t for t in ts if not 0 <= t <= sched.T]
    if bad:
        raise CliError(f"steps outside [0, {sched.T}]: {bad}")
    traj = forward_trajectory(state, sched, Rng(args.seed))
    ext = "pgm" if image.shape[0] == 1 else "ppm"
    rows, frames = [], []
    for t in ts:
        rec = reconstruct(traj[t])
        write_image(out / f"chain_t{t:04d}.{ext}", rec)
        frames.append(rec)
        rows.append([t, f"{sched.r[t]:.6g}", f"{sched.hf_signal_coef(t):.6g}",
                     f"{psnr(np.clip(rec, 0, 1), image):.4f}", f"{correlation(rec, image):.6f}"])
    _write_csv(out / "chain.csv", ["t", "cutoff_radius", "hf_signal_coef", "psnr_db", "correlation"], rows)
    from .plotting import image_strip
    image_strip(frames, [f"t={t}" for t in ts], out / "chain.png")
    print(f"chain: {len(ts)} states -> {out}")


def cmd_train(args, values):
    out = _out_dir(args)
    tc = cfg.train_config(values)
    ts, losses = train(tc, out, resume=args.resume)
    data = np.loadtxt(out / "loss.log", ndmin=2)
    _write_csv(out / "loss.csv", ["step", "lr", "loss"],
               [[int(s), f"{lr:.9g}", f"{v:.9g}"] for s, lr, v in data])
    from .plotting import loss_curve
    loss_curve(data[:, 0], data[:, 2], out / "loss.png")
    tail = np.mean(losses[-50:]) if losses else float("nan")
    print(f"train: step {ts.step}, mean loss of last {min(50, len(losses))} steps {tail:.5f} -> {out}")


def cmd_sample(args, values):
    out = _out_dir(args)
    if args.ckpt is None:
        raise CliError("--ckpt is required")
    if args.count < 1:
        raise CliError("--count must be >= 1")
    model = load_checkpoint(args.ckpt).model
    h, w = model.schedule.lf_shape
    meta = {"height": 2 * h, "width": 2 * w, "channels": model.hyper.channels, "levels": 1}
    cond = Condition.of(None if args.cls < 0 else args.cls)
    images = sample_many(model, cond, model.schedule, meta, args.seed, args.count)
    ext = "pgm" if meta["channels"] == 1 else "ppm"
    for i, im in enumerate(images):
        write_image(out / f"sample_{i:03d}.{ext}", im)
    from .plotting import image_strip
    shown = images[:8]
    image_strip(shown, [f"#{i}" for i in range(len(shown))], out / "samples.png")
    print(f"sample: {args.count} images (class {args.cls}, seed {args.seed}) -> {out}")


def cmd_roundtrip(args, values):
    out = _out_dir(args)
    rng = Rng(args.seed)
    checks = {"dwt_roundtrip": [0.0, 1e-12], "fft_vs_dft": [0.0, 1e-9],
              "parseval": [0.0, 1e-9], "decompose_roundtrip": [0.0, 1e-9]}
    for i in range(args.count):
        size = (16, 32, 64)[i % 3]
        levels = 1 + (i // 3) % 3
        img = rng.uniform((1 + 2 * (i % 2), size, size))
        err = float(np.max(np.abs(idwt2_haar(dwt2_haar(img, levels)) - img)))
        checks["dwt_roundtrip"][0] = max(checks["dwt_roundtrip"][0], err)
        err = float(np.max(np.abs(reconstruct(decompose(img, levels)) - img)))
        checks["decompose_roundtrip"][0] = max(checks["decompose_roundtrip"][0], err)
    for n in range(1, 6):
        for m in range(1, 6):
            x = rng.normal((2 ** n, 2 ** m))
            X = fft2(x)
            ref = dft2_reference(x)
            err = float(np.max(np.abs(X - ref)) / max(1.0, float(np.max(np.abs(ref)))))
            checks["fft_vs_dft"][0] = max(checks["fft_vs_dft"][0], err)
            p_err = abs(np.sum(np.abs(X) ** 2) / x.size - np.sum(x * x)) / np.sum(x * x)
            checks["parseval"][0] = max(checks["parseval"][0], float(p_err))
    rows = [[k, f"{e:.3e}", f"{tol:.0e}", "pass" if e <= tol else "fail"] for k, (e, tol) in checks.items()]
    _write_csv(out / "roundtrip.csv", ["check", "max_error", "tolerance", "status"], rows)
    for r in rows:
        print(",".join(r))
    if any(r[3] == "fail" for r in rows):
        raise CliError("roundtrip tolerance exceeded")


def _read_dir(path: Path):
    files = sorted(p for p in path.iterdir() if p.suffix in (".pgm", ".ppm"))
    if not files:
        raise CliError(f"no .pgm/.ppm images in {path}")
    return [read_image(p) for p in files]


def cmd_spectra(args, values):
    out = _out_dir(args)
    d = cfg.section(values, "data")
    images, _ = synth_dataset(d["count"], size=d["size"], seed=d["seed"], channels=d["channels"])
    others = _read_dir(Path(args.inp)) if args.inp else None
    size = images[0].shape[-1]
    edges = np.linspace(0.0, corner_radius(size, size), args.nbins + 1)
    ds = mean_radial_power(images, args.nbins)
    header = ["bin", "r_lo", "r_hi", "dataset"]
    cols = [ds]
    curves = {"dataset": ds}
    if others is not None:
        if others[0].shape != images[0].shape:
            raise CliError(f"image shape {others[0].shape} does not match dataset {images[0].shape}")
        ot = mean_radial_power(others, args.nbins)
        header += ["images", "ratio"]
        cols += [ot, np.divide(ot, ds, out=np.full_like(ot, np.nan), where=ds > 0)]
        curves["images"] = ot
    rows = [[i, f"{edges[i]:.6g}", f"{edges[i + 1]:.6g}"] + [f"{c[i]:.9g}" for c in cols]
            for i in range(args.nbins)]
    _write_csv(out / "spectra.csv", header, rows)

    def energies(ims):
        e = [band_energy(dwt2_haar(im, 1)) for im in ims]
        return np.mean([[x["lf"]] + x["hf"] for x in e], axis=0)

    names = ["LL", "LH", "HL", "HH"]
    be = [energies(images)] + ([energies(others)] if others is not None else [])
    if others is not None:
        be.append(be[1] / be[0])
    _write_csv(out / "bands.csv", ["band"] + header[3:],
               [[n] + [f"{b[i]:.9g}" for b in be] for i, n in enumerate(names)])
    from .plotting import radial_spectra
    radial_spectra(0.5 * (edges[:-1] + edges[1:]), curves, out / "spectra.png")
    for row in rows:
        print(",".join(str(v) for v in row))


COMMANDS = {
    "decompose": cmd_decompose, "corrupt": cmd_corrupt, "chain": cmd_chain, "train": cmd_train,
    "sample": cmd_sample, "roundtrip": cmd_roundtrip, "spectra": cmd_spectra,
}


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    epilog = "config keys (file or --set) and defaults:\n" + cfg.describe()
    parser = _Parser(prog="wfdiff", description="Wavelet/Fourier diffusion toolkit.",
                     epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text, epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="config file (key = value lines)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
        return p

    p = add("decompose", "band energies and figures of one image")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")

    p = add("corrupt", "corrupt an image to step t and write the reconstruction")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output image path")

    p = add("chain", "reconstructions of one forward trajectory at several steps")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--ts", type=_int_list, default=None, help="comma-separated steps (default 0,T/4,T/2,3T/4,T)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = add("train", "train on the synthetic shapes dataset")
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.add_argument("--out", required=True)

    p = add("sample", "draw images from a trained checkpoint")
    p.add_argument("--ckpt", default=None)
    p.add_argument("--class", dest="cls", type=int, default=-1, help="class id, -1 for unconditional")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--out", required=True)

    p = add("roundtrip", "transform exactness checks on random images (CSV)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--out", required=True)

    p = add("spectra", "radial power spectra and band energies of the dataset and optional images (CSV)")
    p.add_argument("--in", dest="inp", default=None, help="directory of .pgm/.ppm images to compare")
    p.add_argument("--nbins", type=int, default=8)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        values = cfg.load(args.config, args.set)
        COMMANDS[args.command](args, values)
    except (CliError, cfg.ConfigError, OSError, ValueError, FloatingPointError) as e:
        kind = type(e).__name__
        msg = " ".join(str(e).split())
        sys.stderr.write(f"error: {kind}: {msg}\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
