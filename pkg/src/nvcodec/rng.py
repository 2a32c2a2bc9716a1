"""Seedable counter-based random generator.

All engine randomness (mixture-of-logistics sampling, noise mixing offsets,
weight initialization) funnels through this generator so that results are
reproducible across runs and across independent implementations of the same
contract.

The generator is the SplitMix64 finalizer applied to `seed + k * GAMMA` where
k is the draw counter. Draw k is therefore a pure function of (seed, k): the
stream can be resumed from any counter value, which is what makes decoder
state snapshots bit-exact.

uniform() maps the top 53 bits of each 64-bit word to the open interval (0,1)
via ((z >> 11) + 0.5) * 2**-53, so log(u) and log1p(-u) are always finite.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

# numpy wraps uint64 arithmetic mod 2**64, which is exactly what SplitMix64
# wants; silence the overflow warnings it would otherwise emit.
_ERRSTATE = {"over": "ignore"}


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(**_ERRSTATE):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


class CounterRng:
    """Counter-based SplitMix64 stream over a 64-bit seed."""

    def __init__(self, seed: int, counter: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.counter = int(counter)

    def u64(self, n: int) -> np.ndarray:
        """Next n raw 64-bit words, advancing the counter."""
        ks = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(**_ERRSTATE):
            z = np.uint64(self.seed) + ks * _GAMMA
        return _mix64(z)

    def uniform(self, n: int | None = None):
        """Uniform float64 draws in the open interval (0, 1)."""
        m = 1 if n is None else n
        z = self.u64(m)
        u = ((z >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        return float(u[0]) if n is None else u

    def normal(self, n: int) -> np.ndarray:
        """Standard normals via Box-Muller over consecutive uniform pairs."""
        u = self.uniform(2 * n)
        r = np.sqrt(-2.0 * np.log(u[0::2]))
        return r * np.cos(2.0 * np.pi * u[1::2])

    def integers(self, n: int, bound: int) -> np.ndarray:
        """Draws in [0, bound) by 53-bit uniform scaling (bound << 2**53)."""
        return np.minimum((self.uniform(n) * bound).astype(np.int64), bound - 1)

    def state(self) -> tuple[int, int]:
        return self.seed, self.counter
