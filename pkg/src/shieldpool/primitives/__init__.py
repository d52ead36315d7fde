"""Field, curve, hash, signature, AEAD and secret-sharing primitives."""

from .aead import AEADError, aead_decrypt, aead_encrypt
from .babyjub import (
    G, IDENTITY, SUBGROUP_ORDER, CurveError, Point, base_mul, compress,
    decompress, in_subgroup, on_curve, point_add, scalar_mul,
)
from .field import FIELD_PRIME, FieldError
from .hashing import keccak256, keccak_to_field
from .poseidon import UnsupportedWidth, poseidon
from .rng import Rng, rng_entropy
from .schnorr import Signature, schnorr_sign, schnorr_verify
from .shamir import SecretShare, ShareError, shamir_combine, shamir_split

__all__ = [
    "AEADError", "aead_decrypt", "aead_encrypt", "G", "IDENTITY",
    "SUBGROUP_ORDER", "CurveError", "Point", "base_mul", "compress",
    "decompress", "in_subgroup", "on_curve", "point_add", "scalar_mul",
    "FIELD_PRIME", "FieldError", "keccak256", "keccak_to_field",
    "UnsupportedWidth", "poseidon", "Rng", "rng_entropy", "Signature",
    "schnorr_sign", "schnorr_verify", "SecretShare", "ShareError",
    "shamir_combine", "shamir_split",
]
