"""Deterministic counter-based random streams.

Every stochastic draw in the simulator comes from a splitmix64 stream whose
key folds together (seed, environment index, episode, step, phase).  Streams
are cheap value objects: build one from its key, draw, discard.  Because the
key fully determines the sequence, any draw can be replayed in isolation and
batched runs reproduce sequential runs bit for bit.

The compiled kernel carries a C twin of this module.  The two must stay
bit-identical, so any change here has to be mirrored in
``backends/_kernel.pyx``.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_KEY_INIT = 0x8C2F9D1B6E4A5533
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53

# Stream phases (shared with the compiled kernel).
PHASE_RESET = 0
PHASE_ARRIVALS = 1
PHASE_POLICY = 2

# Poisson draws are composed from chunks of at most this rate so the
# product-of-uniforms method never underflows exp(-lam).
_POISSON_CHUNK = 32.0


def mix64(z: int) -> int:
    """splitmix64 finalizer; a bijection on 64-bit integers."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_key(*parts: int) -> int:
    """Fold integer components into a single 64-bit stream key."""
    key = _KEY_INIT
    for p in parts:
        key = mix64(((key + _GOLDEN) & _MASK) ^ (int(p) & _MASK))
    return key


def split_seed(master_seed: int, index: int) -> int:
    """Per-environment seed derived from a master seed and an index."""
    return stream_key(master_seed, index)


class Stream:
    """Sequential splitmix64 stream over a fixed 64-bit key."""

    __slots__ = ("state",)

    def __init__(self, key: int):
        self.state = int(key) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _INV_2_53

    def uniform_in(self, lo: float, hi: float) -> float:
        return lo + self.uniform() * (hi - lo)

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"randint needs n >= 1, got {n}")
        k = int(self.uniform() * n)
        return n - 1 if k >= n else k

    def bernoulli(self, p: float) -> int:
        return 1 if self.uniform() < p else 0

    def choice_cum(self, cum: np.ndarray) -> int:
        """Index drawn from cumulative (normalized) weights."""
        u = self.uniform()
        last = len(cum) - 1
        for k in range(last):
            if u < cum[k]:
                return k
        return last

    def poisson(self, lam: float) -> int:
        """Poisson draw via products of uniforms, chunked for large rates.

        lam <= 0 returns 0 without consuming randomness.
        """
        if lam <= 0.0:
            return 0
        total = 0
        while lam > _POISSON_CHUNK:
            total += self._poisson_knuth(_POISSON_CHUNK)
            lam -= _POISSON_CHUNK
        return total + self._poisson_knuth(lam)

    def _poisson_knuth(self, lam: float) -> int:
        threshold = math.exp(-lam)
        k = 0
        p = 1.0
        while True:
            p *= self.uniform()
            if p <= threshold:
                return k
            k += 1


class BatchStreams:
    """Vectorised splitmix64 streams, one independent stream per row.

    Row i advances exactly like ``Stream`` with the same key, so batched and
    scalar draws are interchangeable bit for bit.
    """

    def __init__(self, keys: np.ndarray):
        self.state = np.asarray(keys, dtype=np.uint64).copy()

    @classmethod
    def from_parts(cls, *parts) -> "BatchStreams":
        """Vectorised ``stream_key``: parts may be scalars or equal-length arrays."""
        arrays = [_as_u64(p) for p in parts]
        n = max((a.size for a in arrays if a.ndim > 0), default=1)
        key = np.full(n, _KEY_INIT, dtype=np.uint64)
        for a in arrays:
            key = _vmix64((key + np.uint64(_GOLDEN)) ^ a)
        return cls(key)

    def __len__(self) -> int:
        return self.state.size

    def next_u64(self) -> np.ndarray:
        self.state += np.uint64(_GOLDEN)
        return _vmix64(self.state)

    def uniform(self) -> np.ndarray:
        return (self.next_u64() >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def randint(self, n: int) -> np.ndarray:
        if n <= 0:
            raise ValueError(f"randint needs n >= 1, got {n}")
        k = (self.uniform() * n).astype(np.int64)
        return np.minimum(k, n - 1)

    def uniform_block(self, n: int) -> np.ndarray:
        """(len, n) matrix of the next n uniforms per stream in one pass.

        Equivalent to n sequential ``uniform`` calls per row: draw j only
        depends on state + j*GOLDEN, so the block is pure counter math.
        """
        offsets = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
        states = self.state[:, None] + offsets[None, :]
        self.state += offsets[-1]
        return (_vmix64(states) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def randint_block(self, n: int, hi: int) -> np.ndarray:
        """(len, n) matrix of uniform integers in [0, hi)."""
        if hi <= 0:
            raise ValueError(f"randint needs hi >= 1, got {hi}")
        k = (self.uniform_block(n) * hi).astype(np.int64)
        return np.minimum(k, hi - 1)

    def poisson(self, lam: float) -> np.ndarray:
        """One Poisson(lam) draw per stream; matches ``Stream.poisson`` per row."""
        out = np.zeros(self.state.size, dtype=np.int64)
        if lam <= 0.0:
            return out
        remaining = lam
        while remaining > _POISSON_CHUNK:
            out += self._poisson_knuth(_POISSON_CHUNK)
            remaining -= _POISSON_CHUNK
        return out + self._poisson_knuth(remaining)

    def _poisson_knuth(self, lam: float) -> np.ndarray:
        n = self.state.size
        threshold = math.exp(-lam)
        k = np.zeros(n, dtype=np.int64)
        p = np.ones(n, dtype=np.float64)
        active = np.arange(n)
        while active.size:
            st = self.state[active] + np.uint64(_GOLDEN)
            self.state[active] = st
            u = (_vmix64(st) >> np.uint64(11)).astype(np.float64) * _INV_2_53
            p[active] *= u
            settled = p[active] <= threshold
            k[active[~settled]] += 1
            active = active[~settled]
        return k


def _as_u64(p) -> np.ndarray:
    """Coerce scalars/arrays to uint64, wrapping negatives like stream_key."""
    if isinstance(p, (int, np.integer)):
        return np.uint64(int(p) & _MASK)
    arr = np.asarray(p)
    if arr.dtype != np.uint64:
        arr = arr.astype(np.int64).astype(np.uint64)
    return arr


def _vmix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))
