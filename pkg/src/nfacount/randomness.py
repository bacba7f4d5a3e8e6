"""Deterministic randomness streams and exact Bernoulli draws."""

from __future__ import annotations

import hashlib
import math
import random
from fractions import Fraction


def derive_seed(seed: int, *labels: object) -> int:
    """A 64-bit seed determined by ``seed`` and ``labels`` (sha256 of their repr)."""
    text = repr((seed,) + labels).encode()
    return int.from_bytes(hashlib.sha256(text).digest()[:8], "big")


def stream(seed: int, *labels: object) -> random.Random:
    return random.Random(derive_seed(seed, *labels))


def bernoulli(rng: random.Random, p: Fraction) -> bool:
    """True with probability exactly ``p`` (uniform integer below the denominator)."""
    if p >= 1:
        return True
    if p <= 0:
        return False
    return rng.randrange(p.denominator) < p.numerator


def choose_index(rng: random.Random, weights: list[Fraction]) -> int:
    """Index ``i`` with probability ``weights[i] / sum(weights)``, drawn exactly."""
    positive = [i for i, w in enumerate(weights) if w > 0]
    if len(positive) == 1:
        return positive[0]
    den = math.lcm(*(w.denominator for w in weights))
    ints = [int(w * den) for w in weights]
    u = rng.randrange(sum(ints))
    for i, w in enumerate(ints):
        if u < w:
            return i
        u -= w
    raise AssertionError("unreachable")

