"""Arithmetic over the BN254 scalar field (the base field of Baby JubJub).

Field elements are plain ``int`` values in ``[0, FIELD_PRIME)``.
"""

from functools import lru_cache

FIELD_PRIME = 21888242871839275222246405745257275088548364400416034343698204186575808495617
FIELD_BYTES = 32


class FieldError(ValueError):
    pass


def fe(value: int) -> int:
    """Reduce an arbitrary integer into the field."""
    return value % FIELD_PRIME


def check_fe(value) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise FieldError(f"field element must be int, got {type(value).__name__}")
    if not 0 <= value < FIELD_PRIME:
        raise FieldError("field element out of range")
    return value


def add(a: int, b: int) -> int:
    return (a + b) % FIELD_PRIME


def sub(a: int, b: int) -> int:
    return (a - b) % FIELD_PRIME


def mul(a: int, b: int) -> int:
    return (a * b) % FIELD_PRIME


def inv(a: int) -> int:
    if a % FIELD_PRIME == 0:
        raise ZeroDivisionError("zero has no inverse")
    return pow(a, -1, FIELD_PRIME)


@lru_cache(maxsize=8)
def _tonelli_constants(p: int):
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    return q, s, pow(z, q, p)


def sqrt(a: int, p: int = FIELD_PRIME):
    """Tonelli-Shanks square root modulo prime ``p``; None for non-residues."""
    a %= p
    if a == 0:
        return 0
    q, m, c = _tonelli_constants(p)
    w = pow(a, (q - 1) // 2, p)
    r = a * w % p
    t = r * w % p
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
            if i == m:
                return None
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


def to_bytes(value: int) -> bytes:
    """Canonical 32-byte big-endian encoding."""
    return check_fe(value).to_bytes(FIELD_BYTES, "big")


def from_bytes(data: bytes) -> int:
    if len(data) != FIELD_BYTES:
        raise FieldError(f"expected {FIELD_BYTES} bytes, got {len(data)}")
    return check_fe(int.from_bytes(data, "big"))
