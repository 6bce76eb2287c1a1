"""Deterministic pseudo-random source.

The generator is splitmix64: 64-bit state advances by a fixed odd constant
(the golden-ratio gamma) and each output is a bit-mixing hash of the new
state. Because the state sequence is a pure counter, any run of outputs can
be produced as a vectorized batch, and the integer stream is identical on
every platform. Concurrency uses split seeds (one generator per worker),
never a shared locked generator.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def derive_seed(root_seed: int, *labels) -> int:
    """Derive a child seed from a root seed and a label path.

    Hashes the canonical string "root:label0:label1:..." with BLAKE2b and
    returns the first 8 digest bytes as a little-endian integer. Used for
    all per-module / per-capture seed derivation so that one global seed
    drives the whole pipeline reproducibly.
    """
    text = ":".join([str(int(root_seed) & _MASK64)] + [str(l) for l in labels])
    digest = hashlib.blake2b(text.encode("ascii"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _mix(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer (Stafford mix13 variant); in-place to keep the
    # hot path (dropout masks, noise fields) allocation-light
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


class Rng:
    """splitmix64 generator with vectorized batch draws.

    Not shareable between workers; use :meth:`split` to derive an
    independent child stream instead.
    """

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK64

    def split(self, *labels) -> "Rng":
        """Independent child generator keyed by the label path."""
        return Rng(derive_seed(self._state, "split", *labels))

    def _raw(self, n: int) -> np.ndarray:
        counters = np.uint64(self._state) + np.uint64(_GAMMA) * np.arange(
            1, n + 1, dtype=np.uint64
        )
        self._state = (self._state + _GAMMA * n) & _MASK64
        return _mix(counters)

    def next_u64(self) -> int:
        return int(self._raw(1)[0])

    def uniforms(self, shape) -> np.ndarray:
        """float64 samples in [0, 1), 53-bit resolution."""
        n = int(np.prod(shape))
        u = (self._raw(n) >> np.uint64(11)).astype(np.float64) * (2.0**-53)
        return u.reshape(shape)

    def normals(self, shape, sigma: float = 1.0) -> np.ndarray:
        """Gaussian samples via Box-Muller on paired uniforms."""
        n = int(np.prod(shape))
        m = (n + 1) // 2
        u = self.uniforms((2, m))
        r = np.sqrt(-2.0 * np.log(1.0 - u[0]))  # 1-u avoids log(0)
        theta = 2.0 * np.pi * u[1]
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]
        return (sigma * z).reshape(shape)

    def integers(self, low: int, high: int, shape) -> np.ndarray:
        """Uniform integers in [low, high) via 53-bit uniforms."""
        if high <= low:
            raise ValueError("empty integer range")
        u = self.uniforms(shape)
        return (low + np.floor(u * (high - low))).astype(np.int64)

    def bernoulli(self, p: float, shape) -> np.ndarray:
        """Boolean samples, True with probability p.

        Each 64-bit word feeds four 16-bit lanes (probability quantized to
        1/65536, little-endian lane order), keeping mask generation cheap.
        """
        n = int(np.prod(shape))
        lanes = self._raw((n + 3) // 4).astype("<u8", copy=False).view("<u2")[:n]
        threshold = round(min(max(p, 0.0), 1.0) * 65536)
        return (lanes < threshold).reshape(shape)

    def bytes(self, n: int) -> bytes:
        words = self._raw((n + 7) // 8)
        return words.astype("<u8").tobytes()[:n]

    def shuffled_indices(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n) (sort of random keys)."""
        return np.argsort(self._raw(n), kind="stable").astype(np.int64)
