"""Poseidon over the BN254 scalar field with circomlib-compatible parameters.

Round constants and the Cauchy MDS matrix are regenerated from the Grain
LFSR exactly as the Poseidon reference scripts do for x^5, 254-bit prime
field, R_F = 8. Parameters are built lazily per width and cached.
"""

from functools import lru_cache

from gmpy2 import mpz

from .field import FIELD_PRIME, check_fe

FULL_ROUNDS = 8
# partial rounds indexed by width t - 2 (t = 2..9)
PARTIAL_ROUNDS = (56, 57, 56, 60, 60, 63, 64, 63)
MAX_INPUTS = 6
_FIELD_BITS = 254


class UnsupportedWidth(ValueError):
    pass


class _Grain:
    def __init__(self, t: int, partial_rounds: int):
        bits = []
        for value, width in ((1, 2), (0, 4), (_FIELD_BITS, 12), (t, 12),
                             (FULL_ROUNDS, 10), (partial_rounds, 10)):
            bits.extend((value >> (width - 1 - i)) & 1 for i in range(width))
        bits.extend([1] * 30)
        # bit i of the register holds state position i
        self.reg = sum(b << i for i, b in enumerate(bits))
        for _ in range(160):
            self._step()

    def _step(self) -> int:
        r = self.reg
        new = ((r >> 62) ^ (r >> 51) ^ (r >> 38) ^ (r >> 23) ^ (r >> 13) ^ r) & 1
        self.reg = (r >> 1) | (new << 79)
        return new

    def bits(self, n: int) -> int:
        out = 0
        for _ in range(n):
            b = self._step()
            while b == 0:
                self._step()
                b = self._step()
            out = (out << 1) | self._step()
        return out

    def field_element(self) -> int:
        while True:
            v = self.bits(_FIELD_BITS)
            if v < FIELD_PRIME:
                return v


@lru_cache(maxsize=None)
def parameters(t: int):
    """Return (round_constants, mds) for state width ``t``."""
    if not 2 <= t <= MAX_INPUTS + 1:
        raise UnsupportedWidth(f"width {t} not supported")
    rp = PARTIAL_ROUNDS[t - 2]
    grain = _Grain(t, rp)
    constants = tuple(grain.field_element() for _ in range((FULL_ROUNDS + rp) * t))
    while True:
        # the MDS sampler reduces instead of rejecting
        vals = [grain.bits(_FIELD_BITS) % FIELD_PRIME for _ in range(2 * t)]
        if len(set(vals)) != 2 * t:
            continue
        xs, ys = vals[:t], vals[t:]
        if any((x + y) % FIELD_PRIME == 0 for x in xs for y in ys):
            continue
        mds = tuple(tuple(pow(x + y, -1, FIELD_PRIME) for y in ys) for x in xs)
        return constants, mds


@lru_cache(maxsize=None)
def _plan(t: int):
    """Round constants grouped per round and the MDS rows, as gmpy2 integers."""
    constants, mds = parameters(t)
    rounds = tuple(tuple(mpz(c) for c in constants[k:k + t])
                   for k in range(0, len(constants), t))
    return rounds, tuple(tuple(mpz(v) for v in row) for row in mds)


_P = mpz(FIELD_PRIME)


def permute(state: list) -> list:
    t = len(state)
    rounds, mds = _plan(t)
    p = _P
    first_partial = FULL_ROUNDS // 2
    last_partial = first_partial + PARTIAL_ROUNDS[t - 2]
    s = [mpz(v) for v in state]
    for r, rc in enumerate(rounds):
        if first_partial <= r < last_partial:
            s = [x + c for x, c in zip(s, rc)]
            s[0] = pow(s[0], 5, p)
        else:
            s = [pow(x + c, 5, p) for x, c in zip(s, rc)]
        s = [sum(map(mpz.__mul__, row, s)) % p for row in mds]
    return [int(x) for x in s]


@lru_cache(maxsize=None)
def _width3():
    rounds, ((m00, m01, m02), (m10, m11, m12), (m20, m21, m22)) = _plan(3)
    half = FULL_ROUNDS // 2
    head, middle, tail = rounds[:half], rounds[half:-half], rounds[-half:]
    p = _P

    def perm(a, b, c):
        # unrolled copy of permute() for width 3, which every tree node uses
        for ca, cb, cc in head:
            a, b, c = pow(a + ca, 5, p), pow(b + cb, 5, p), pow(c + cc, 5, p)
            a, b, c = (m00 * a + m01 * b + m02 * c) % p, (m10 * a + m11 * b + m12 * c) % p, \
                (m20 * a + m21 * b + m22 * c) % p
        for ca, cb, cc in middle:
            a, b, c = pow(a + ca, 5, p), b + cb, c + cc
            a, b, c = (m00 * a + m01 * b + m02 * c) % p, (m10 * a + m11 * b + m12 * c) % p, \
                (m20 * a + m21 * b + m22 * c) % p
        for ca, cb, cc in tail:
            a, b, c = pow(a + ca, 5, p), pow(b + cb, 5, p), pow(c + cc, 5, p)
            a, b, c = (m00 * a + m01 * b + m02 * c) % p, (m10 * a + m11 * b + m12 * c) % p, \
                (m20 * a + m21 * b + m22 * c) % p
        return a
    return perm


_recent = {}
_RECENT_LIMIT = 1 << 17


def _hash(inputs: tuple) -> int:
    if len(inputs) == 2:
        out = int(_width3()(mpz(0), mpz(inputs[0]), mpz(inputs[1])))
    else:
        out = permute([0, *inputs])[0]
    if len(_recent) >= _RECENT_LIMIT:
        _recent.clear()
    _recent[inputs] = out
    return out


def poseidon(inputs) -> int:
    """Hash 1 to 6 field elements; the width is chosen from the arity."""
    inputs = tuple(inputs)
    if not 1 <= len(inputs) <= MAX_INPUTS:
        raise UnsupportedWidth(f"poseidon supports 1..{MAX_INPUTS} inputs, got {len(inputs)}")
    # only canonical inputs are ever stored, so a hit needs no range check;
    # bools compare equal to ints and are screened out first
    if all(type(x) is int for x in inputs):
        hit = _recent.get(inputs)
        if hit is not None:
            return hit
    for x in inputs:
        check_fe(x)
    return _hash(inputs)
