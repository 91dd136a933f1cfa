"""
Splittable deterministic randomness (splitmix64).

Every random draw in a simulation flows from one root generator; children
are derived by label so adding a consumer never perturbs the draws seen by
existing ones. Pure integer arithmetic keeps streams identical across
platforms.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1


def _mix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    out = z
    out = ((out ^ (out >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    out = ((out ^ (out >> 27)) * 0x94D049BB133111EB) & _MASK
    return (out ^ (out >> 31)) & _MASK, z


def _fnv1a(label: str) -> int:
    h = 0xCBF29CE484222325
    for byte in label.encode():
        h = ((h ^ byte) * 0x100000001B3) & _MASK
    return h


class SplitRng:
    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        value, self._state = _mix(self._state)
        return value

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * (self.next_u64() / 2**64)

    def chance(self, probability: float) -> bool:
        return self.next_u64() / 2**64 < probability

    def randint(self, lo: int, hi: int) -> int:
        """Inclusive bounds; modulo bias is irrelevant at simulation scale."""
        return lo + self.next_u64() % (hi - lo + 1)

    def split(self, label: str) -> "SplitRng":
        return SplitRng(self._state ^ _fnv1a(label))
