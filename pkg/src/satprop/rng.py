"""Deterministic PRNG primitives: splitmix64, xoshiro256**, named sub-streams.

Instance generation uses xoshiro256** seeded through splitmix64, so generated
files are bit-for-bit reproducible from the seed alone, on any platform and in
any language that implements the same two well-known generators.  Auxiliary
randomness (message initialisation, local search) only needs per-seed
determinism; those consumers derive independent 64-bit sub-seeds with
`substream` and feed them to whatever generator they use internally.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step: returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def substream(seed: int, name: str) -> int:
    """Derive an independent 64-bit seed for the named stream."""
    _, z = splitmix64((seed & MASK64) ^ fnv1a64(name.encode("utf-8")))
    return z


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """xoshiro256** 1.0 (Blackman & Vigna), seeded from four splitmix64 outputs."""

    def __init__(self, seed: int):
        s = seed & MASK64
        state = []
        for _ in range(4):
            s, z = splitmix64(s)
            state.append(z)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def below(self, n: int) -> int:
        """Draw in [0, n) via the 128-bit multiply-shift reduction."""
        return (self.next_u64() * n) >> 64

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], inclusive."""
        return lo + self.below(hi - lo + 1)

    def sign(self) -> int:
        """+1 when the top bit of the next word is set, else -1."""
        return +1 if self.next_u64() >> 63 else -1

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53
