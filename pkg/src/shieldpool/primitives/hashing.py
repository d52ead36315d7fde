"""Keccak-256 (pre-NIST padding, as used on Ethereum)."""

from Crypto.Hash import keccak

from .field import FIELD_PRIME


def keccak256(data: bytes) -> bytes:
    return keccak.new(digest_bits=256, data=bytes(data)).digest()


def keccak_to_field(data: bytes) -> int:
    return int.from_bytes(keccak256(data), "big") % FIELD_PRIME
