"""Entropy source: OS randomness in live mode, a seeded PRNG for tests."""

import random
import secrets
import threading


class Rng:
    """Source of 256-bit entropy and uniform integers.

    With ``seed=None`` draws come from :mod:`secrets` and are safe to share
    between threads. A seeded instance is reproducible and must stay with a
    single owner.
    """

    def __init__(self, seed=None):
        self.seed = seed
        self._prng = None if seed is None else random.Random(seed)
        self._lock = threading.Lock()

    @property
    def deterministic(self) -> bool:
        return self._prng is not None

    def randbits(self, k: int) -> int:
        if self._prng is None:
            return secrets.randbits(k)
        with self._lock:
            return self._prng.getrandbits(k)

    def randbelow(self, n: int) -> int:
        if self._prng is None:
            return secrets.randbelow(n)
        with self._lock:
            return self._prng.randrange(n)

    def randbytes(self, n: int) -> bytes:
        return self.randbits(8 * n).to_bytes(n, "big")

    def entropy(self) -> int:
        """A 256-bit value."""
        return self.randbits(256)


_default = Rng()


def rng_entropy(rng: Rng = None) -> int:
    return (rng or _default).entropy()
