"""Schnorr signatures on Baby JubJub with a Poseidon challenge.

The nonce is derived deterministically from (key, message) so a signer can
never reuse a nonce across messages.
"""

from functools import lru_cache
from typing import NamedTuple

from . import babyjub
from .babyjub import SUBGROUP_ORDER, CurveError, Point
from .field import FIELD_PRIME, check_fe
from .hashing import keccak_to_field
from .poseidon import poseidon

NONCE_TAG = keccak_to_field(b"zkfi/schnorr-nonce")
SIGNATURE_BYTES = 96


class Signature(NamedTuple):
    R: Point
    z: int

    def to_bytes(self) -> bytes:
        return (self.R.x.to_bytes(32, "big") + self.R.y.to_bytes(32, "big")
                + self.z.to_bytes(32, "big"))

    @classmethod
    def from_bytes(cls, data: bytes) -> "Signature":
        if len(data) != SIGNATURE_BYTES:
            raise CurveError(f"signature must be {SIGNATURE_BYTES} bytes")
        x, y, z = (int.from_bytes(data[i:i + 32], "big") for i in (0, 32, 64))
        if z >= SUBGROUP_ORDER:
            raise CurveError("signature scalar out of range")
        return cls(babyjub.check_point((x, y)), z)


def challenge(R: Point, S: Point, message: int) -> int:
    return poseidon((R.x, R.y, S.x, S.y, message)) % SUBGROUP_ORDER


def schnorr_sign(message: int, s: int) -> Signature:
    check_fe(message)
    if not 0 < s < SUBGROUP_ORDER:
        raise CurveError("signing key out of range")
    k = poseidon((s, message, NONCE_TAG)) % SUBGROUP_ORDER
    if k == 0:
        raise CurveError("degenerate nonce")
    R = babyjub.base_mul(k)
    e = challenge(R, babyjub.base_mul(s), message)
    return Signature(R, (k + e * s) % SUBGROUP_ORDER)


def schnorr_verify(message: int, S, sig) -> bool:
    """True iff ``z*G == R + e*S``; malformed inputs verify as False."""
    try:
        R, z = sig
        return _verify(message, tuple(S), tuple(R), z)
    except (TypeError, ValueError):
        return False


# Verification is a pure function of its inputs; the cache spares repeated
# checks of the same signed note (statement checks, audits).
@lru_cache(maxsize=8192)
def _verify(message, S, R, z) -> bool:
    try:
        if not isinstance(message, int) or not 0 <= message < FIELD_PRIME:
            return False
        S, R = babyjub.check_point(S), babyjub.check_point(R)
        if not 0 <= z < SUBGROUP_ORDER or S.is_identity():
            return False
        e = challenge(R, S, message)
        return babyjub.base_mul(z) == babyjub.point_add(R, babyjub.scalar_mul(e, S))
    except (CurveError, TypeError, ValueError):
        return False
