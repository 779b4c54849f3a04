"""Deterministic random streams for the synthetic experiments.

The generator is counter-based SplitMix64: output i of a stream with 64-bit
seed s is mix64(s + (i + 1) * 0x9E3779B97F4A7C15), where mix64 is the
standard SplitMix64 finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

with all arithmetic modulo 2^64. Outputs are a pure function of
(seed, counter), so batches vectorize as plain uint64 array arithmetic and
the integer stream is reproducible bit-for-bit on any platform and numpy
version. Uniform doubles take the top 53 bits, giving values in [0, 1);
normals are Box-Muller transforms of uniform pairs (their bits additionally
depend on the platform's log/cos/sin rounding, which is fixed for a given
build). Substreams are derived by XOR-ing the seed with a stream index.
"""

import numpy as np

__all__ = ["Stream"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1
_INV_2_53 = 2.0 ** -53


class Stream:
    """A seeded random stream with uniform and Box-Muller normal draws."""

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= _U64_MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self._seed = np.uint64(seed)
        self._counter = 0

    @property
    def seed(self) -> int:
        return int(self._seed)

    def spawn(self, index: int) -> "Stream":
        """Independent substream with seed XOR index."""
        index = int(index)
        if not 0 <= index <= _U64_MASK:
            raise ValueError("stream index must be an unsigned 64-bit integer")
        return Stream(int(self._seed) ^ index)

    def _raw(self, count: int) -> np.ndarray:
        start = self._counter + 1
        self._counter += count
        with np.errstate(over="ignore"):
            z = np.arange(start, start + count, dtype=np.uint64) * _GOLDEN
            z += self._seed
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
            z ^= z >> np.uint64(31)
        return z

    def uniform(self, size: int) -> np.ndarray:
        """size uniform doubles in [0, 1), 53-bit resolution."""
        return (self._raw(size) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def normal(self, size: int, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        """size normal draws via Box-Muller; consumes 2 * ceil(size / 2) uniforms."""
        m = (size + 1) // 2
        u = self.uniform(2 * m)
        u1, u2 = u[:m], u[m:]
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = (2.0 * np.pi) * u2
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:size]
        return z * scale + loc
