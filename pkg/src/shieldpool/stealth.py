"""One-time stealth addresses, auxiliary data and view-tag scanning.

Aux data layout (bytes)::

    tag(1) | x(32, big-endian) | Q(32, compressed) | nonce(12) | ciphertext | poly1305 tag(16)

The ciphertext carries ``delta(32) | asset(3) | value(31)``.
"""

from dataclasses import dataclass

from .account import ShieldedAddress
from .errors import ValidationError
from .primitives import (
    AEADError, CurveError, FIELD_PRIME, Point, Rng, aead_decrypt, aead_encrypt,
    base_mul, compress, decompress, keccak256, poseidon, scalar_mul,
)
from .primitives.rng import _default

EPHEMERAL_BITS = 248
PLAINTEXT_BYTES = 66
MIN_AUX_BYTES = 1 + 32 + 32 + 12 + 16


@dataclass(frozen=True)
class NoteSecrets:
    delta: int
    asset: int
    value: int

    def to_bytes(self) -> bytes:
        return (self.delta.to_bytes(32, "big") + self.asset.to_bytes(3, "big")
                + self.value.to_bytes(31, "big"))

    @classmethod
    def from_bytes(cls, data: bytes) -> "NoteSecrets":
        if len(data) != PLAINTEXT_BYTES:
            raise ValidationError("bad note plaintext length")
        return cls(int.from_bytes(data[:32], "big"), int.from_bytes(data[32:35], "big"),
                   int.from_bytes(data[35:], "big"))


@dataclass(frozen=True)
class AuxData:
    tag: int
    x: int
    Q: Point
    C: bytes

    def to_bytes(self) -> bytes:
        return bytes([self.tag]) + self.x.to_bytes(32, "big") + compress(self.Q) + self.C

    def hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AuxData":
        if len(data) < MIN_AUX_BYTES:
            raise ValidationError("aux data too short")
        x = int.from_bytes(data[1:33], "big")
        if x >= FIELD_PRIME:
            raise ValidationError("stealth address out of range")
        try:
            Q = decompress(data[33:65])
        except CurveError as exc:
            raise ValidationError(f"bad ephemeral key: {exc}") from None
        return cls(data[0], x, Q, bytes(data[65:]))


@dataclass(frozen=True)
class StealthOutput:
    x: int
    delta: int
    Q: Point
    tag: int
    C: bytes

    @property
    def aux(self) -> AuxData:
        return AuxData(self.tag, self.x, self.Q, self.C)


def stealth_address(S: Point, delta: int) -> int:
    return poseidon((S.x, S.y, delta))


def view_tag(K: Point) -> int:
    return keccak256(compress(K))[0]


def _aead_key(K: Point) -> bytes:
    return keccak256(b"zkfi/aead" + compress(K))


def _nonce(Q: Point) -> bytes:
    return keccak256(compress(Q) + b"nonce")[:12]


def create_stealth_output(recipient: ShieldedAddress, asset: int = 0, value: int = 0,
                          rng: Rng = None, delta: int = None) -> StealthOutput:
    """Derive a fresh one-time address for ``recipient`` and encrypt the note
    secrets to its view key."""
    rng = rng or _default
    if delta is None:
        delta = rng.randbelow(FIELD_PRIME)
    r = 0
    while r == 0:
        r = rng.randbits(EPHEMERAL_BITS)
    Q = base_mul(r)
    K = scalar_mul(r, recipient.P)
    x = stealth_address(recipient.S, delta)
    nonce = _nonce(Q)
    plaintext = NoteSecrets(delta, asset, value).to_bytes()
    C = nonce + aead_encrypt(_aead_key(K), nonce, plaintext, x.to_bytes(32, "big"))
    return StealthOutput(x, delta, Q, view_tag(K), C)


SCAN_TAG, SCAN_AEAD, SCAN_ADDRESS, SCAN_OK = "tag", "aead", "address", "ok"


def scan_stage(aux, p: int, S: Point):
    """Like :func:`scan` but also reports where a non-matching output was
    rejected: ``(stage, secrets)`` with stage one of tag/aead/address/ok."""
    if isinstance(aux, (bytes, bytearray)):
        aux = AuxData.from_bytes(aux)
    K = scalar_mul(p, aux.Q)
    if view_tag(K) != aux.tag:
        return SCAN_TAG, None
    C = aux.C
    try:
        plaintext = aead_decrypt(_aead_key(K), C[:12], C[12:], aux.x.to_bytes(32, "big"))
        secrets = NoteSecrets.from_bytes(plaintext)
    except (AEADError, ValidationError):
        return SCAN_AEAD, None
    # the tag may have matched by chance; only the address proves ownership
    if secrets.delta >= FIELD_PRIME or stealth_address(S, secrets.delta) != aux.x:
        return SCAN_ADDRESS, None
    return SCAN_OK, secrets


def scan(aux, p: int, S: Point):
    """Try to open ``aux`` with view key ``p``; returns :class:`NoteSecrets`
    or None when the output belongs to someone else."""
    return scan_stage(aux, p, S)[1]


def ownership_witness(x: int, S: Point, delta: int):
    """Return the (S, delta) pair proving ownership of stealth address ``x``."""
    if stealth_address(S, delta) != x:
        raise ValidationError("stealth address does not match (S, delta)")
    return S, delta
