"""Reproducible pseudo-randomness.

Everything stochastic in the package flows from two primitives, both
fixed for the life of the on-disk formats:

* ``splitmix64(x)``: one step of the standard SplitMix64 generator
  applied to state x, i.e. mix(x + GOLDEN) with the 30/27/31
  xor-multiply finalizer.
* counter streams: the i-th value of the stream with seed s is
  ``splitmix64(s + i*GOLDEN)`` (all arithmetic mod 2^64), which equals
  the i-th output of the sequential SplitMix64 generator seeded with s.
  Being a pure function of (s, i) makes draws independent of query
  order and embarrassingly parallel.

Uniform doubles are ``((v >> 12) + 0.5) * 2^-52``, strictly inside
(0, 1) at both ends (every value is exactly representable), so
logarithms are always finite.

This module is the plain-Python reference; the numba kernels mirror it
bit for bit and tests assert the equivalence.
"""

from __future__ import annotations

from dataclasses import dataclass

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def fold_bytes(seed: int, data: bytes) -> int:
    """Absorb a byte string into a 64-bit key: fold each byte c via
    state <- splitmix64(state XOR (c + GOLDEN)), then finalize once more."""
    state = seed & MASK64
    for c in data:
        state = splitmix64(state ^ ((c + GOLDEN) & MASK64))
    return splitmix64(state)


def stream_value(seed: int, index: int) -> int:
    return splitmix64((seed + index * GOLDEN) & MASK64)


def unit_interval(value: int) -> float:
    return ((value >> 12) + 0.5) * 2.0**-52


def check_seed(seed: int, name: str = "seed") -> int:
    if not 0 <= seed <= MASK64:
        raise ValueError(f"{name} must be an unsigned 64-bit integer, got {seed}")
    return seed


@dataclass
class SplitMixStream:
    """Counter-based uniform stream; the mutable counter is the rng-state."""

    seed: int
    index: int = 0

    def __post_init__(self) -> None:
        check_seed(self.seed)

    def next_u64(self) -> int:
        value = stream_value(self.seed, self.index)
        self.index += 1
        return value

    def next_unit(self) -> float:
        return unit_interval(self.next_u64())
