"""Deterministic splittable random streams.

Every trajectory owns a SplitMix64 stream derived from ``(seed, index)``
where ``index`` is the global trajectory number within an experiment.
Because the key does not involve the worker that happens to execute the
trajectory, experiment output is bit-identical for any worker count.

The pure-Python implementation here and the jitted kernels in
``montecarlo`` implement the same integer recurrence; a regression test
asserts the two produce identical 64-bit sequences.
"""

from __future__ import annotations

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_INDEX_STRIDE = 0xD1342543DE82EF95
_MIX_C1 = 0xBF58476D1CE4E5B9
_MIX_C2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a full-avalanche bijection on 64-bit words."""
    z = ((z ^ (z >> 30)) * _MIX_C1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_C2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def stream_state(seed: int, index: int) -> int:
    """Initial stream state for trajectory ``index`` under ``seed``."""
    acc = mix64((seed + GOLDEN_GAMMA) & MASK64)
    return mix64(acc ^ ((index * _INDEX_STRIDE) & MASK64))


class RandomStream:
    """SplitMix64 stream, bit-compatible with the jitted sampler kernels."""

    __slots__ = ("state",)

    def __init__(self, seed: int, index: int = 0):
        self.state = stream_state(seed & MASK64, index & MASK64)

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return mix64(self.state)

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound), unbiased via rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        # reject the top 2**64 mod bound values, then reduce
        rem = ((MASK64 % bound) + 1) % bound
        limit = MASK64 - rem
        while True:
            x = self.next_u64()
            if x <= limit:
                return x % bound
