"""Baby JubJub twisted Edwards curve  a*x^2 + y^2 = 1 + d*x^2*y^2  over BN254 Fr.

``G`` is the generator of the prime-order subgroup (circomlib's Base8).
Internally scalar multiplication runs in extended coordinates (X:Y:Z:T)
over gmpy2 integers; the public surface uses affine :class:`Point` values
with plain ``int`` coordinates.
"""

from functools import lru_cache
from typing import NamedTuple

from gmpy2 import mpz

from .field import FIELD_PRIME as P, sqrt

A = 168700
D = 168696
SUBGROUP_ORDER = 2736030358979909402780800718157159386076813972158567259200215660948447373041
COFACTOR = 8
POINT_BYTES = 32


class CurveError(ValueError):
    pass


class Point(NamedTuple):
    x: int
    y: int

    def is_identity(self) -> bool:
        return self.x == 0 and self.y == 1


IDENTITY = Point(0, 1)
G = Point(
    5299619240641551281634865583518297030282874472190772894086521144482721001553,
    16950150798460657717958625567821834550301663161624707787222815936182638968203,
)


def on_curve(pt) -> bool:
    x, y = pt
    if not (0 <= x < P and 0 <= y < P):
        return False
    xx, yy = x * x % P, y * y % P
    return (A * xx + yy - 1 - D * xx % P * yy) % P == 0


def check_point(pt) -> Point:
    if not isinstance(pt, tuple) or len(pt) != 2 or not on_curve(pt):
        raise CurveError("point is not on Baby JubJub")
    return Point(*pt)


def in_subgroup(pt) -> bool:
    return on_curve(pt) and scalar_mul(SUBGROUP_ORDER, pt).is_identity()


# -- extended coordinates -------------------------------------------------

_P, _A, _D = mpz(P), mpz(A), mpz(D)


def _to_ext(pt):
    x, y = mpz(pt[0]), mpz(pt[1])
    return (x, y, mpz(1), x * y % _P)


def _from_ext(e) -> Point:
    x, y, z, _ = e
    zi = pow(z, -1, _P)
    return Point(int(x * zi % _P), int(y * zi % _P))


def _add(p1, p2, P=_P, A=_A, D=_D):
    x1, y1, z1, t1 = p1
    x2, y2, z2, t2 = p2
    a = x1 * x2 % P
    b = y1 * y2 % P
    c = D * t1 % P * t2 % P
    d = z1 * z2 % P
    e = ((x1 + y1) * (x2 + y2) - a - b) % P
    f = d - c
    g = d + c
    h = b - A * a
    return (e * f % P, g * h % P, f * g % P, e * h % P)


def _double(p1, P=_P, A=_A):
    x, y, z, _ = p1
    a = x * x % P
    b = y * y % P
    c = 2 * z * z % P
    da = A * a % P
    e = ((x + y) * (x + y) - a - b) % P
    g = da + b
    f = g - c
    h = da - b
    return (e * f % P, g * h % P, f * g % P, e * h % P)


_EXT_IDENTITY = (mpz(0), mpz(1), mpz(1), mpz(0))
_WINDOW = 4


def _window_table(pt):
    table = [_EXT_IDENTITY, _to_ext(pt)]
    for _ in range(2, 1 << _WINDOW):
        table.append(_add(table[-1], table[1]))
    return table


def _mul_ext(k: int, pt):
    table = _window_table(pt)
    acc = _EXT_IDENTITY
    nibbles = (k.bit_length() + _WINDOW - 1) // _WINDOW
    for i in range(nibbles - 1, -1, -1):
        for _ in range(_WINDOW):
            acc = _double(acc)
        w = (k >> (i * _WINDOW)) & 0xF
        if w:
            acc = _add(acc, table[w])
    return acc


@lru_cache(maxsize=None)
def _fixed_base(pt):
    # rows[i][w] = w * 16^i * pt
    rows = []
    base = _to_ext(pt)
    for _ in range((SUBGROUP_ORDER.bit_length() + _WINDOW - 1) // _WINDOW + 1):
        row = [_EXT_IDENTITY, base]
        for _ in range(2, 1 << _WINDOW):
            row.append(_add(row[-1], base))
        rows.append(row)
        for _ in range(_WINDOW):
            base = _double(base)
    return rows


# -- public API -----------------------------------------------------------

def point_add(p1, p2) -> Point:
    p1, p2 = check_point(p1), check_point(p2)
    return _from_ext(_add(_to_ext(p1), _to_ext(p2)))


def point_neg(pt) -> Point:
    x, y = check_point(pt)
    return Point((-x) % P, y)


def scalar_mul(k: int, pt) -> Point:
    """Return ``k * pt`` for non-negative ``k``; ``k`` is not reduced."""
    if k < 0:
        raise CurveError("negative scalar")
    pt = check_point(pt)
    if k == 0 or pt.is_identity():
        return IDENTITY
    return _from_ext(_mul_ext(k, pt))


def base_mul(k: int) -> Point:
    """``k * G`` using a precomputed comb table; ``k`` reduced mod the subgroup order."""
    if k < 0:
        raise CurveError("negative scalar")
    k %= SUBGROUP_ORDER
    rows = _fixed_base(G)
    acc = _EXT_IDENTITY
    i = 0
    while k:
        w = k & 0xF
        if w:
            acc = _add(acc, rows[i][w])
        k >>= _WINDOW
        i += 1
    return _from_ext(acc)


def compress(pt) -> bytes:
    """32-byte little-endian y with the top bit flagging x > (p-1)/2."""
    x, y = check_point(pt)
    buf = bytearray(y.to_bytes(POINT_BYTES, "little"))
    if x > (P - 1) // 2:
        buf[31] |= 0x80
    return bytes(buf)


def decompress(data: bytes) -> Point:
    if len(data) != POINT_BYTES:
        raise CurveError(f"compressed point must be {POINT_BYTES} bytes")
    buf = bytearray(data)
    sign = buf[31] & 0x80
    buf[31] &= 0x7F
    y = int.from_bytes(buf, "little")
    if y >= P:
        raise CurveError("y coordinate out of range")
    yy = y * y % P
    den = (A - D * yy) % P
    if den == 0:
        raise CurveError("invalid point encoding")
    x = sqrt((1 - yy) * pow(den, -1, P) % P)
    if x is None:
        raise CurveError("invalid point encoding")
    if sign and x == 0:
        raise CurveError("non-canonical point encoding")
    if bool(sign) != (x > (P - 1) // 2):
        x = P - x
    pt = Point(x, y)
    if not on_curve(pt):
        raise CurveError("invalid point encoding")
    return pt
