import pytest

from shieldpool.account import new_account
from shieldpool.errors import ValidationError
from shieldpool.primitives import FIELD_PRIME, Rng, compress, keccak256, poseidon, scalar_mul
from shieldpool.stealth import (
    SCAN_ADDRESS, SCAN_AEAD, SCAN_OK, SCAN_TAG, AuxData, NoteSecrets, create_stealth_output,
    ownership_witness, scan, scan_stage, stealth_address, view_tag,
)
from shieldpool.stealth import _aead_key, _nonce
from shieldpool.primitives import aead_encrypt


@pytest.fixture(scope="module")
def alice():
    return new_account(Rng(100))


@pytest.fixture(scope="module")
def bob():
    return new_account(Rng(200))


def test_round_trip(alice):
    out = create_stealth_output(alice.address, 7, 12345, Rng(1))
    secrets = scan(out.aux, alice.p, alice.S)
    assert secrets == NoteSecrets(out.delta, 7, 12345)
    assert out.x == poseidon([alice.S.x, alice.S.y, out.delta])
    K = scalar_mul(alice.p, out.Q)
    assert out.tag == keccak256(compress(K))[0]


def test_ephemeral_scalar_is_248_bits(alice):
    class Spy(Rng):
        def randbits(self, k):
            self.requested = k
            return super().randbits(k)

    rng = Spy(3)
    create_stealth_output(alice.address, 1, 1, rng)
    assert rng.requested == 248


def test_aux_layout(alice):
    out = create_stealth_output(alice.address, 1, 5, Rng(2))
    raw = out.aux.to_bytes()
    assert raw[0] == out.tag
    assert int.from_bytes(raw[1:33], "big") == out.x
    assert raw[33:65] == compress(out.Q)
    assert raw[65:] == out.C and len(out.C) == 12 + 66 + 16
    assert out.C[:12] == keccak256(compress(out.Q) + b"nonce")[:12]
    assert AuxData.from_bytes(raw) == out.aux
    with pytest.raises(ValidationError):
        AuxData.from_bytes(raw[:60])


def test_distinct_addresses(alice):
    rng = Rng(4)
    xs = {create_stealth_output(alice.address, 1, 1, rng).x for _ in range(1000)}
    assert len(xs) == 1000
    assert alice.S.x not in xs and alice.S.y not in xs


def test_non_receiver(alice, bob):
    out = create_stealth_output(alice.address, 1, 1, Rng(5))
    assert scan(out.aux, bob.p, bob.S) is None


def forced_tag_fixture(alice, bob, seed):
    """An output to alice whose tag was chosen to match bob's scan."""
    rng = Rng(seed)
    out = create_stealth_output(alice.address, 1, 10, rng)
    K_bob = scalar_mul(bob.p, out.Q)
    return AuxData(view_tag(K_bob), out.x, out.Q, out.C), K_bob, out


def test_forced_tag_collision_rejected_after_tag(alice, bob):
    for seed in range(20):
        aux, _, _ = forced_tag_fixture(alice, bob, seed)
        stage, secrets = scan_stage(aux, bob.p, bob.S)
        assert stage == SCAN_AEAD and secrets is None


def test_address_guard(alice, bob):
    # ciphertext decrypts for bob, but the delta inside does not rebuild x
    out = create_stealth_output(alice.address, 1, 10, Rng(6))
    K = scalar_mul(bob.p, out.Q)
    nonce = _nonce(out.Q)
    ct = aead_encrypt(_aead_key(K), nonce, NoteSecrets(out.delta, 1, 10).to_bytes(),
                      out.x.to_bytes(32, "big"))
    aux = AuxData(view_tag(K), out.x, out.Q, nonce + ct)
    assert scan_stage(aux, bob.p, bob.S) == (SCAN_ADDRESS, None)
    assert scan_stage(out.aux, alice.p, alice.S)[0] == SCAN_OK


def test_tag_stage_reported(alice, bob):
    stages = {scan_stage(create_stealth_output(alice.address, 1, 1, Rng(i)).aux, bob.p, bob.S)[0]
              for i in range(10)}
    assert SCAN_TAG in stages


def test_ownership_witness(alice, bob):
    out = create_stealth_output(alice.address, 1, 1, Rng(7))
    assert ownership_witness(out.x, alice.S, out.delta) == (alice.S, out.delta)
    with pytest.raises(ValidationError):
        ownership_witness(out.x, alice.S, (out.delta + 1) % FIELD_PRIME)
    with pytest.raises(ValidationError):
        ownership_witness(out.x, bob.S, out.delta)


def test_stealth_address_formula(alice):
    assert stealth_address(alice.S, 5) == poseidon([alice.S.x, alice.S.y, 5])


def test_note_secrets_layout():
    raw = NoteSecrets(3, 0xABCDEF, 2**247).to_bytes()
    assert len(raw) == 66
    assert raw[:32] == (3).to_bytes(32, "big")
    assert raw[32:35] == bytes.fromhex("abcdef")
    assert NoteSecrets.from_bytes(raw) == NoteSecrets(3, 0xABCDEF, 2**247)
