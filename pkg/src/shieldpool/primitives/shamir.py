"""Shamir secret sharing over a prime field."""

from typing import NamedTuple

from .field import FIELD_PRIME
from .rng import Rng, _default


class ShareError(ValueError):
    pass


class SecretShare(NamedTuple):
    index: int
    value: int


def shamir_split(secret: int, t: int, n: int, rng: Rng = None,
                 modulus: int = FIELD_PRIME) -> list:
    """Split ``secret`` into ``n`` shares, any ``t`` of which reconstruct it."""
    if not 1 <= t <= n:
        raise ShareError(f"need 1 <= t <= n, got t={t} n={n}")
    if n >= modulus:
        raise ShareError("too many shares for the field")
    rng = rng or _default
    coeffs = [secret % modulus] + [rng.randbelow(modulus) for _ in range(t - 1)]
    shares = []
    for i in range(1, n + 1):
        acc = 0
        for c in reversed(coeffs):
            acc = (acc * i + c) % modulus
        shares.append(SecretShare(i, acc))
    return shares


def lagrange_at_zero(indices, modulus: int = FIELD_PRIME) -> list:
    """Coefficients l_i such that f(0) = sum(l_i * f(i))."""
    indices = list(indices)
    if len(set(indices)) != len(indices):
        raise ShareError("duplicate share indices")
    if any(not 0 < i < modulus for i in indices):
        raise ShareError("share index out of range")
    coeffs = []
    for i in indices:
        num, den = 1, 1
        for j in indices:
            if j != i:
                num = num * j % modulus
                den = den * (j - i) % modulus
        coeffs.append(num * pow(den, -1, modulus) % modulus)
    return coeffs


def shamir_combine(shares, threshold: int = None, modulus: int = FIELD_PRIME) -> int:
    shares = list(shares)
    if not shares:
        raise ShareError("no shares")
    if threshold is not None and len(shares) < threshold:
        raise ShareError(f"need {threshold} shares, got {len(shares)}")
    lam = lagrange_at_zero([s.index for s in shares], modulus)
    return sum(l * s.value for l, s in zip(lam, shares)) % modulus
