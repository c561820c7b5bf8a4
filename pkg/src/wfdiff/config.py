"""Plain-text run configuration: ``key = value`` lines, ``#`` comments, dotted keys."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .schedule import HF_MODES, MASK_DIRECTIONS
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    kind: type
    default: object
    help: str
    choices: tuple = ()


SCHEMA: dict[str, Key] = {
    "schedule.T": Key(int, 64, "number of corruption steps"),
    "schedule.beta_min": Key(float, 1e-3, "HF noise rate at step 1"),
    "schedule.beta_max": Key(float, 0.2, "HF noise rate at step T"),
    "schedule.sigma_f": Key(float, 1.0, "Fourier replacement noise std (units of the spectrum scale)"),
    "schedule.weight": Key(float, 1.0, "loss weight w(t), constant"),
    "schedule.hf_mode": Key(str, "vp", "HF noise law", HF_MODES),
    "schedule.mask_direction": Key(str, "low_first", "which end of the spectrum is removed first", MASK_DIRECTIONS),
    "model.width": Key(int, 32, "feature channels F"),
    "model.time_dim": Key(int, 32, "time embedding size"),
    "train.batch_size": Key(int, 16, "images per step"),
    "train.total_steps": Key(int, 2000, "optimizer steps"),
    "train.base_lr": Key(float, 1e-3, "peak learning rate of the cosine curve"),
    "train.seed": Key(int, 0, "seed of the training stream (init, batches, noise)"),
    "train.checkpoint_every": Key(int, 500, "checkpoint cadence in steps"),
    "train.conditional": Key(bool, True, "condition on the shape class"),
    "data.count": Key(int, 384, "synthetic images"),
    "data.size": Key(int, 16, "image side in pixels (power of two)"),
    "data.channels": Key(int, 1, "1 (grey) or 3 (colour)"),
    "data.seed": Key(int, 1, "seed of the synthetic dataset"),
}


def _convert(key: str, raw: str):
    spec = SCHEMA[key]
    raw = raw.strip()
    try:
        if spec.kind is bool:
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            value = low in ("true", "1", "yes")
        elif spec.kind is int:
            value = int(raw, 0)
        elif spec.kind is float:
            value = float(raw)
        else:
            value = raw.strip("\"'")
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {spec.kind.__name__}") from None
    if spec.choices and value not in spec.choices:
        raise ConfigError(f"{key}: {value!r} not one of {', '.join(spec.choices)}")
    return value


def parse(text: str, source: str = "<config>") -> dict:
    """Parse config text into ``{dotted key: typed value}``; unknown keys are rejected together."""
    values, unknown = {}, []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            unknown.append(key)
            continue
        values[key] = _convert(key, raw)
    if unknown:
        raise ConfigError(f"{source}: unknown keys: {', '.join(unknown)}")
    return values


def parse_overrides(items) -> dict:
    return parse("\n".join(items or []), source="--set")


def load(path=None, overrides=None) -> dict:
    """Defaults, then the file at ``path``, then ``key=value`` overrides."""
    values = {k: s.default for k, s in SCHEMA.items()}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        values.update(parse(text, str(path)))
    values.update(parse_overrides(overrides))
    return values


def section(values: dict, name: str) -> dict:
    prefix = name + "."
    return {k[len(prefix):]: v for k, v in values.items() if k.startswith(prefix)}


def train_config(values: dict) -> TrainConfig:
    return TrainConfig(schedule=section(values, "schedule"), model=section(values, "model"),
                       data=section(values, "data"), **section(values, "train"))


def describe() -> str:
    """One line per key with its default, for ``--help``."""
    rows = []
    for k, s in SCHEMA.items():
        default = str(s.default).lower() if s.kind is bool else s.default
        extra = f" [{'|'.join(s.choices)}]" if s.choices else ""
        rows.append(f"  {k} = {default}{extra}  ({s.help})")
    return "\n".join(rows)
