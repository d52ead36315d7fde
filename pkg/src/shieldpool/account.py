"""Shielded accounts: sign/view key pairs derived from one entropy value."""

import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .errors import ConflictError, ValidationError
from .primitives import (
    FIELD_PRIME, SUBGROUP_ORDER, Point, Rng, base_mul, compress, decompress,
    keccak_to_field, poseidon, rng_entropy,
)

SIGN_SALT = keccak_to_field(b"zkfi/sign")
VIEW_SALT = keccak_to_field(b"zkfi/view")


@dataclass(frozen=True)
class ShieldedAddress:
    S: Point
    P: Point

    def to_bytes(self) -> bytes:
        return compress(self.S) + compress(self.P)

    def hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ShieldedAddress":
        if len(data) != 64:
            raise ValidationError("shielded address must be 64 bytes")
        return cls(decompress(data[:32]), decompress(data[32:]))

    @classmethod
    def from_hex(cls, text: str) -> "ShieldedAddress":
        return cls.from_bytes(bytes.fromhex(text))


@dataclass(frozen=True)
class ShieldedAccount:
    xi: int
    s: int
    S: Point
    p: int
    P: Point

    @property
    def address(self) -> ShieldedAddress:
        return ShieldedAddress(self.S, self.P)

    def to_json(self) -> dict:
        return {
            "xi": self.xi.to_bytes(32, "big").hex(),
            "s": self.s.to_bytes(32, "big").hex(),
            "S": compress(self.S).hex(),
            "p": self.p.to_bytes(32, "big").hex(),
            "P": compress(self.P).hex(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ShieldedAccount":
        account = derive_account(int(data["xi"], 16))
        if account.to_json() != {k: data[k] for k in ("xi", "s", "S", "p", "P")}:
            raise ValidationError("key file is inconsistent with its entropy")
        return account

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "ShieldedAccount":
        return cls.from_json(json.loads(Path(path).read_text()))


def _derive_scalar(xi: int, salt: int, avoid: int = None) -> int:
    # xi is 256-bit; fold it into the field before hashing
    base = xi % FIELD_PRIME
    k = poseidon((base, salt)) % SUBGROUP_ORDER
    counter = 0
    while k == 0 or k == avoid:
        counter += 1
        k = poseidon((base, salt, counter)) % SUBGROUP_ORDER
    return k


def derive_account(xi: int) -> ShieldedAccount:
    if not 0 <= xi < 1 << 256:
        raise ValidationError("entropy must be a 256-bit value")
    s = _derive_scalar(xi, SIGN_SALT)
    p = _derive_scalar(xi, VIEW_SALT, avoid=s)
    return ShieldedAccount(xi, s, base_mul(s), p, base_mul(p))


def new_account(rng: Rng = None) -> ShieldedAccount:
    return derive_account(rng_entropy(rng))


def shielded_address(account: ShieldedAccount) -> ShieldedAddress:
    return account.address


class AddressRegistry:
    """Public handle -> shielded address map. Single writer, many readers."""

    def __init__(self):
        self._entries = {}
        self._lock = threading.Lock()

    def register(self, handle: str, address: ShieldedAddress) -> None:
        if not handle:
            raise ValidationError("handle must be non-empty")
        with self._lock:
            if handle in self._entries:
                raise ConflictError(f"handle {handle!r} already registered")
            self._entries[handle] = address

    def lookup(self, handle: str):
        return self._entries.get(handle)

    def __contains__(self, handle) -> bool:
        return handle in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def items(self):
        return list(self._entries.items())
