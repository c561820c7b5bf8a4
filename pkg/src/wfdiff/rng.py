"""Counter-based SplitMix64 generator with documented stream splitting.

State is the pair ``(key, counter)``. The i-th 64-bit output after the
current counter ``c`` is::

    z = key + (c + i + 1) * 0x9E3779B97F4A7C15      (mod 2**64)
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)

With ``counter = 0`` this is exactly the reference SplitMix64 sequence seeded
with ``key``. Uniforms take the top 53 bits; normals use Box-Muller on
consecutive uniform pairs ``(u1, u2)`` emitting ``r*cos`` then ``r*sin``.
Child streams: ``key' = mix(key ^ mix(index + 0x632BE59BD9B4E019))``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
SPLIT_SALT = 0x632BE59BD9B4E019


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = z.copy()
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


def mix64(x: int) -> int:
    """Scalar SplitMix64 finalizer on a Python int."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class Rng:
    """Deterministic random stream. Copy it with :meth:`state` / :meth:`from_state`."""

    def __init__(self, seed: int, counter: int = 0):
        self.key = int(seed) & MASK64
        self.counter = int(counter) & MASK64

    def state(self) -> tuple[int, int]:
        return self.key, self.counter

    @classmethod
    def from_state(cls, state: tuple[int, int]) -> "Rng":
        return cls(state[0], state[1])

    def spawn(self, index: int) -> "Rng":
        """Independent child stream; does not advance this stream."""
        return Rng(mix64(self.key ^ mix64((int(index) + SPLIT_SALT) & MASK64)))

    def bits(self, n: int) -> np.ndarray:
        idx = np.arange(1, n + 1, dtype=np.uint64) + np.uint64(self.counter)
        with np.errstate(over="ignore"):
            z = np.uint64(self.key) + idx * np.uint64(GOLDEN)
            out = _mix_array(z)
        self.counter = (self.counter + n) & MASK64
        return out

    def uniform(self, size=None) -> np.ndarray | float:
        """Uniform draws on [0, 1)."""
        n = 1 if size is None else int(np.prod(size))
        u = (self.bits(n) >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
        return float(u[0]) if size is None else u.reshape(size)

    def normal(self, size=None) -> np.ndarray | float:
        """Standard normal draws (Box-Muller)."""
        n = 1 if size is None else int(np.prod(size))
        m = (n + 1) // 2
        u = self.uniform(2 * m)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = 2.0 * np.pi * u[1::2]
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        return float(z[0]) if size is None else z[:n].reshape(size)

    def integers(self, low: int, high: int, size=None) -> np.ndarray | int:
        """Integers in [low, high) by multiply-shift on the uniform."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        u = self.uniform(1 if size is None else size)
        k = np.minimum(np.floor(u * (high - low)).astype(np.int64), high - low - 1) + low
        return int(np.ravel(k)[0]) if size is None else k
