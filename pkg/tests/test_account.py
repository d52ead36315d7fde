import pytest

from shieldpool.account import (
    SIGN_SALT, VIEW_SALT, AddressRegistry, ShieldedAccount, ShieldedAddress,
    derive_account, new_account, shielded_address,
)
from shieldpool.errors import ConflictError, ValidationError
from shieldpool.primitives import (
    FIELD_PRIME, SUBGROUP_ORDER, Rng, base_mul, in_subgroup, keccak256, poseidon,
    schnorr_sign, schnorr_verify,
)


def test_salts_are_keccak_of_labels():
    assert SIGN_SALT == int.from_bytes(keccak256(b"zkfi/sign"), "big") % FIELD_PRIME
    assert VIEW_SALT == int.from_bytes(keccak256(b"zkfi/view"), "big") % FIELD_PRIME


def test_derivation_is_deterministic_and_consistent():
    a, b = derive_account(2**255 + 12345), derive_account(2**255 + 12345)
    assert a == b
    assert a.S == base_mul(a.s) and a.P == base_mul(a.p)
    xi = (2**255 + 12345) % FIELD_PRIME
    assert a.s == poseidon([xi, SIGN_SALT]) % SUBGROUP_ORDER
    assert a.p == poseidon([xi, VIEW_SALT]) % SUBGROUP_ORDER
    assert in_subgroup(a.S) and in_subgroup(a.P)


def test_sign_and_view_keys_differ():
    rng = Rng(11)
    for _ in range(1000):
        acct = derive_account(rng.entropy())
        assert acct.s != acct.p and acct.s != 0 and acct.p != 0


def test_entropy_range():
    with pytest.raises(ValidationError):
        derive_account(1 << 256)
    with pytest.raises(ValidationError):
        derive_account(-1)


def test_address_projection_and_wire():
    acct = new_account(Rng(1))
    addr = shielded_address(acct)
    assert (addr.S, addr.P) == (acct.S, acct.P)
    assert ShieldedAddress.from_bytes(addr.to_bytes()) == addr
    assert ShieldedAddress.from_hex(addr.hex()) == addr
    assert len(addr.to_bytes()) == 64
    assert new_account(Rng(2)).address != addr


def test_view_key_cannot_authorize_spends():
    acct = new_account(Rng(5))
    forged = schnorr_sign(777, acct.p)
    assert not schnorr_verify(777, acct.S, forged)
    assert schnorr_verify(777, acct.S, schnorr_sign(777, acct.s))


def test_key_file_round_trip(tmp_path):
    acct = new_account(Rng(9))
    path = tmp_path / "k.json"
    acct.save(path)
    assert ShieldedAccount.load(path) == acct
    data = acct.to_json()
    assert set(data) == {"xi", "s", "S", "p", "P"}
    data["s"] = "00" * 31 + "01"
    with pytest.raises(ValidationError):
        ShieldedAccount.from_json(data)


def test_registry():
    reg = AddressRegistry()
    a, b = new_account(Rng(1)).address, new_account(Rng(2)).address
    reg.register("alice", a)
    assert reg.lookup("alice") == a
    assert reg.lookup("unknown") is None
    with pytest.raises(ConflictError):
        reg.register("alice", b)
    with pytest.raises(ValidationError):
        reg.register("", b)
    assert "alice" in reg and len(reg) == 1
