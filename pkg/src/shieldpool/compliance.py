"""Involuntary de-anonymization with guardians and a revoker.

Transaction data is encrypted twice. The inner layer is ECDH + AEAD to the
revoker's key. The outer layer wraps the inner ciphertext with a hybrid
ElGamal encryption to the guardians' collective key, whose private half is
Shamir-shared among ``n`` guardians. A quorum of ``t`` guardians can strip
the outer layer, and only after the revoker has logged a signed request.
Only the revoker can then strip the inner layer.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .account import ShieldedAccount
from .errors import ComplianceError, ValidationError
from .primitives import (
    AEADError, IDENTITY, SUBGROUP_ORDER, Point, Rng, SecretShare, Signature,
    aead_decrypt, aead_encrypt, base_mul, compress, decompress, keccak256,
    keccak_to_field, point_add, scalar_mul, schnorr_sign, schnorr_verify, shamir_split,
)
from .primitives.rng import _default
from .primitives.shamir import ShareError, lagrange_at_zero

TX_ID_BYTES = 32


@dataclass(frozen=True)
class GuardianSet:
    t: int
    n: int
    collective: Point
    shares: tuple

    def public_json(self) -> dict:
        return {"t": self.t, "n": self.n, "collective": compress(self.collective).hex()}


def guardian_keygen(t: int, n: int, rng: Rng = None) -> GuardianSet:
    """Dealer-based setup: sample the collective key and share it t-of-n."""
    if not 1 <= t <= n:
        raise ValidationError(f"need 1 <= t <= n, got t={t} n={n}")
    rng = rng or _default
    secret = 1 + rng.randbelow(SUBGROUP_ORDER - 1)
    shares = shamir_split(secret, t, n, rng, modulus=SUBGROUP_ORDER)
    return GuardianSet(t, n, base_mul(secret), tuple(shares))


def share_to_json(share: SecretShare) -> dict:
    return {"index": share.index, "value_hex": share.value.to_bytes(32, "big").hex()}


def share_from_json(data: dict) -> SecretShare:
    return SecretShare(int(data["index"]), int(data["value_hex"], 16))


def _kdf(label: bytes, point: Point) -> bytes:
    return keccak256(b"zkfi/compliance-" + label + compress(point))


def _seal(label: bytes, recipient: Point, plaintext: bytes, aad: bytes, rng: Rng):
    r = 1 + rng.randbelow(SUBGROUP_ORDER - 1)
    nonce = rng.randbytes(12)
    key = _kdf(label, scalar_mul(r, recipient))
    return compress(base_mul(r)) + nonce + aead_encrypt(key, nonce, plaintext, aad)


def _open(label: bytes, shared: Point, blob: bytes, aad: bytes) -> bytes:
    return aead_decrypt(_kdf(label, shared), blob[32:44], blob[44:], aad)


@dataclass(frozen=True)
class ComplianceEnvelope:
    tx_id: bytes
    C_outer: bytes

    @property
    def ephemeral(self) -> Point:
        return decompress(self.C_outer[:32])

    def to_bytes(self) -> bytes:
        return self.tx_id + self.C_outer

    @classmethod
    def from_bytes(cls, data: bytes) -> "ComplianceEnvelope":
        if len(data) < TX_ID_BYTES + 32 + 12 + 16:
            raise ValidationError("compliance envelope too short")
        return cls(bytes(data[:TX_ID_BYTES]), bytes(data[TX_ID_BYTES:]))


def encrypt_for_compliance(data: bytes, tx_id: bytes, revoker_key: Point,
                           collective_key: Point, rng: Rng = None) -> ComplianceEnvelope:
    if len(tx_id) != TX_ID_BYTES:
        raise ValidationError("transaction id must be 32 bytes")
    rng = rng or _default
    inner = _seal(b"inner", revoker_key, data, tx_id, rng)
    return ComplianceEnvelope(tx_id, _seal(b"outer", collective_key, inner, tx_id, rng))


def revoker_decrypt(C_inner: bytes, revoker_private: int, tx_id: bytes) -> bytes:
    try:
        shared = scalar_mul(revoker_private, decompress(C_inner[:32]))
        return _open(b"inner", shared, C_inner, tx_id)
    except (AEADError, ValueError) as exc:
        raise ComplianceError(f"revoker decryption failed: {exc}") from None


# -- accountable requests ---------------------------------------------------

def _request_message(tx_id: bytes, justification: str) -> int:
    return keccak_to_field(b"zkfi/deanon" + tx_id + justification.encode())


@dataclass(frozen=True)
class RevocationRequest:
    tx_id: bytes
    justification: str
    revoker: Point
    signature: Signature

    @property
    def request_id(self) -> bytes:
        return keccak256(self.tx_id + self.justification.encode() + self.signature.to_bytes())

    def signature_valid(self) -> bool:
        return schnorr_verify(_request_message(self.tx_id, self.justification),
                              self.revoker, self.signature)

    def to_json(self) -> dict:
        return {
            "tx_id": self.tx_id.hex(), "justification": self.justification,
            "revoker": compress(self.revoker).hex(), "signature": self.signature.to_bytes().hex(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "RevocationRequest":
        return cls(bytes.fromhex(d["tx_id"]), d["justification"],
                   decompress(bytes.fromhex(d["revoker"])),
                   Signature.from_bytes(bytes.fromhex(d["signature"])))


class RequestLog:
    """Append-only public log of signed de-anonymization requests,
    optionally mirrored to a JSON-lines file."""

    def __init__(self, revoker_key: Point, path=None):
        self.revoker_key = revoker_key
        self.path = Path(path) if path else None
        self._entries = []
        self._ids = set()
        if self.path and self.path.exists():
            for line in self.path.read_text().splitlines():
                if line.strip():
                    self._add(RevocationRequest.from_json(json.loads(line)), persist=False)

    def _add(self, request: RevocationRequest, persist: bool) -> None:
        if request.revoker != self.revoker_key or not request.signature_valid():
            raise ComplianceError("request is not signed by the registered revoker")
        if request.request_id in self._ids:
            return
        self._entries.append(request)
        self._ids.add(request.request_id)
        if persist and self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(request.to_json(), sort_keys=True) + "\n")

    def append(self, request: RevocationRequest) -> None:
        self._add(request, persist=True)

    def log_verify(self, request: RevocationRequest) -> bool:
        return (request.revoker == self.revoker_key and request.signature_valid()
                and request.request_id in self._ids)

    def __iter__(self):
        return iter(list(self._entries))

    def __len__(self) -> int:
        return len(self._entries)


def revoker_request(log: RequestLog, tx_id: bytes, justification: str,
                    revoker: ShieldedAccount) -> RevocationRequest:
    """Sign a request with the revoker's sign key and append it to the log."""
    sig = schnorr_sign(_request_message(tx_id, justification), revoker.s)
    request = RevocationRequest(tx_id, justification, revoker.S, sig)
    log.append(request)
    return request


def log_verify(log: RequestLog, request: RevocationRequest) -> bool:
    return log.log_verify(request)


# -- guardians ----------------------------------------------------------------

@dataclass(frozen=True)
class PartialDecryption:
    index: int
    tx_id: bytes
    request_id: bytes
    D: Point

    def to_json(self) -> dict:
        return {"index": self.index, "tx_id": self.tx_id.hex(),
                "request_id": self.request_id.hex(), "D": compress(self.D).hex()}

    @classmethod
    def from_json(cls, d: dict) -> "PartialDecryption":
        return cls(d["index"], bytes.fromhex(d["tx_id"]), bytes.fromhex(d["request_id"]),
                   decompress(bytes.fromhex(d["D"])))


def guardian_approve(log: RequestLog, request: RevocationRequest, share: SecretShare,
                     envelope: ComplianceEnvelope) -> PartialDecryption:
    if not log.log_verify(request):
        raise ComplianceError("no verified request on the log for this transaction")
    if request.tx_id != envelope.tx_id:
        raise ComplianceError("request and envelope refer to different transactions")
    if not 0 < share.index:
        raise ComplianceError("invalid share index")
    return PartialDecryption(share.index, envelope.tx_id, request.request_id,
                             scalar_mul(share.value, envelope.ephemeral))


def combine_partials(envelope: ComplianceEnvelope, partials, threshold: int) -> bytes:
    """Interpolate the partials in the exponent and strip the outer layer."""
    partials = list(partials)
    if len(partials) < threshold:
        raise ComplianceError(f"need {threshold} partial decryptions, got {len(partials)}")
    if len({p.request_id for p in partials}) != 1:
        raise ComplianceError("partials come from different requests")
    if any(p.tx_id != envelope.tx_id for p in partials):
        raise ComplianceError("partial decryption is for a different transaction")
    try:
        lam = lagrange_at_zero([p.index for p in partials], SUBGROUP_ORDER)
    except ShareError as exc:
        raise ComplianceError(str(exc)) from None
    shared = IDENTITY
    for coeff, p in zip(lam, partials):
        shared = point_add(shared, scalar_mul(coeff, p.D))
    try:
        return _open(b"outer", shared, envelope.C_outer, envelope.tx_id)
    except AEADError:
        raise ComplianceError("outer decryption failed") from None
