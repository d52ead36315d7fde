"""Trusted setup and the pluggable proof backend.

The default ``simulated`` backend is NOT a zkSNARK. The prover checks the
statement itself and then authenticates the canonical public inputs with a
secret bound to the setup ceremony. That keeps the pipeline shape,
completeness and binding to the public inputs. It gives no public
verifiability, and anyone holding the verifying key or the ceremony's toxic
waste can forge proofs. :func:`forge_proof` exists to show that hazard.
"""

import hmac
from dataclasses import dataclass
from typing import Optional

from .errors import StatementError, ValidationError
from .primitives import SUBGROUP_ORDER, G, Point, compress, keccak256, scalar_mul
from .primitives.babyjub import decompress
from .transaction import PrivateInputs, PublicInputs, statement_failures

PROOF_BYTES = 256
SIMULATED = "simulated-v1"


@dataclass(frozen=True)
class Proof:
    data: bytes
    backend: str = SIMULATED

    def hex(self) -> str:
        return self.data.hex()


@dataclass(frozen=True)
class ProvingKey:
    backend: str
    binding: bytes
    tree_depth: Optional[int] = None


@dataclass(frozen=True)
class VerifyingKey:
    backend: str
    binding: bytes
    commitment: Point


@dataclass(frozen=True)
class SetupKeys:
    proving_key: ProvingKey
    verifying_key: VerifyingKey
    transcript: tuple
    toxic_waste: Optional[tuple] = None

    def to_json(self) -> dict:
        return {
            "backend": self.proving_key.backend,
            "binding": self.proving_key.binding.hex(),
            "commitment": compress(self.verifying_key.commitment).hex(),
            "tree_depth": self.proving_key.tree_depth,
            "transcript": [d.hex() for d in self.transcript],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SetupKeys":
        binding = bytes.fromhex(data["binding"])
        return cls(
            ProvingKey(data["backend"], binding, data.get("tree_depth")),
            VerifyingKey(data["backend"], binding, decompress(bytes.fromhex(data["commitment"]))),
            tuple(bytes.fromhex(d) for d in data["transcript"]),
        )


def _binding_from_accumulator(acc: Point) -> bytes:
    return keccak256(b"zkfi/binding" + compress(acc))


def setup_ceremony(contributions, tree_depth: int = None,
                   keep_toxic_waste: bool = False) -> SetupKeys:
    """Chain each participant's secret into a curve accumulator.

    Participant i receives the previous point A and publishes s_i * A; the
    transcript records a digest of every intermediate point.
    """
    contributions = list(contributions)
    if not contributions:
        raise ValidationError("ceremony needs at least one contribution")
    acc = G
    transcript = []
    for s in contributions:
        if not 0 < s < SUBGROUP_ORDER:
            raise ValidationError("contribution must be a non-zero scalar")
        acc = scalar_mul(s, acc)
        transcript.append(keccak256(compress(acc)))
    binding = _binding_from_accumulator(acc)
    return SetupKeys(
        ProvingKey(SIMULATED, binding, tree_depth),
        VerifyingKey(SIMULATED, binding, acc),
        tuple(transcript),
        tuple(contributions) if keep_toxic_waste else None,
    )


def _expand(tag: bytes) -> bytes:
    out = tag
    counter = 1
    while len(out) < PROOF_BYTES:
        out += keccak256(tag + counter.to_bytes(4, "big"))
        counter += 1
    return out[:PROOF_BYTES]


def _simulated_proof(binding: bytes, rho: PublicInputs) -> bytes:
    return _expand(keccak256(binding + rho.canonical()))


class SimulatedBackend:
    name = SIMULATED

    def prove(self, pk: ProvingKey, rho: PublicInputs, w: PrivateInputs) -> Proof:
        fails = statement_failures(rho, w, pk.tree_depth, stop_early=True)
        if fails:
            raise StatementError(f"refusing to prove a false statement: {fails[0]}")
        return Proof(_simulated_proof(pk.binding, rho), self.name)

    def verify(self, vk: VerifyingKey, proof: Proof, rho: PublicInputs) -> bool:
        data = getattr(proof, "data", None)
        if not isinstance(data, (bytes, bytearray)) or len(data) != PROOF_BYTES:
            return False
        return hmac.compare_digest(bytes(data), _simulated_proof(vk.binding, rho))


_BACKENDS = {SIMULATED: SimulatedBackend()}


def register_backend(backend) -> None:
    _BACKENDS[backend.name] = backend


def _backend(name: str):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValidationError(f"unknown proof backend {name!r}") from None


def prove(pk: ProvingKey, rho: PublicInputs, w: PrivateInputs) -> Proof:
    return _backend(pk.backend).prove(pk, rho, w)


def verify(vk: VerifyingKey, proof: Proof, rho: PublicInputs) -> bool:
    """Check ``proof`` against the public inputs. Never sees the witness."""
    if getattr(proof, "backend", None) != vk.backend:
        return False
    try:
        return bool(_backend(vk.backend).verify(vk, proof, rho))
    except (ValueError, TypeError, AttributeError):
        return False


def forge_proof(toxic_waste, rho: PublicInputs) -> Proof:
    """Produce an accepting proof for any ``rho`` from the ceremony secrets."""
    tau = 1
    for s in toxic_waste:
        tau = tau * s % SUBGROUP_ORDER
    binding = _binding_from_accumulator(scalar_mul(tau, G))
    return Proof(_simulated_proof(binding, rho), SIMULATED)
