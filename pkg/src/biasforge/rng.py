"""Seeded randomness with bit-identical output on every platform.

The generator is SplitMix64 (Steele, Lea and Flood's 64-bit mix), chosen
because its entire state is one 64-bit word and its output sequence is
defined purely by integer arithmetic, so results never depend on the Python
version, the OS, or the C library. All sampling helpers are built on it with
rejection sampling and partial Fisher-Yates, which keeps two useful
guarantees:

* equal seeds give equal draws everywhere, and
* ``Rng(s).sample(pool, k)`` is a prefix of ``Rng(s).sample(pool, k2)``
  for ``k <= k2`` (the first ``k`` shuffle steps are identical).
"""

from __future__ import annotations

import hashlib
from typing import Sequence, TypeVar

_MASK = (1 << 64) - 1

T = TypeVar("T")


def derive_seed(*parts: object) -> int:
    """Derive a stable 64-bit seed from a base seed and label strings.

    Used to fan a single top-level seed out to per-stage, per-utterance
    generators without correlation between them.
    """
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class Rng:
    """SplitMix64 stream with the sampling helpers the pipeline needs."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def randbelow(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"randbelow needs n >= 1, got {n}")
        limit = _MASK - (_MASK + 1) % n
        while True:
            x = self.next_u64()
            if x <= limit:
                return x % n

    def random(self) -> float:
        """Float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ValueError("choice from an empty sequence")
        return seq[self.randbelow(len(seq))]

    def sample(self, seq: Sequence[T], k: int) -> list[T]:
        """k items without replacement, uniform, via partial Fisher-Yates."""
        n = len(seq)
        if not 0 <= k <= n:
            raise ValueError(f"cannot sample {k} from {n} items")
        pool = list(seq)
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        n = len(items)
        for i in range(n - 1):
            j = i + self.randbelow(n - i)
            items[i], items[j] = items[j], items[i]
