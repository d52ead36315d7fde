import json

import pytest

from shieldpool.account import ShieldedAccount
from shieldpool.cli import main
from shieldpool.errors import ChannelError
from shieldpool.pool import TransactionPayload, UserOperation
from shieldpool.primitives import base_mul
from shieldpool.sim import Chain, LedgerEvent


def test_bundler_double_spend_in_one_batch(world):
    chain, alice, bob = world
    op1, _ = alice.transfer(bob.account.address, 1, 10, submit=False)
    op2, _ = alice.transfer(bob.account.address, 1, 20, submit=False)
    chain.bundler_submit(op1)
    chain.bundler_submit(op2)
    first, second = chain.flush()
    assert first.error is None
    assert second.error["category"] == "double-spend"


def test_deposit_not_accepted_by_bundler(world):
    chain, alice, _ = world
    op, _ = alice.transfer(alice.account.address, 1, 1, submit=False)
    deposit = UserOperation(TransactionPayload("deposit", op.payload.public, op.payload.proof),
                            op.fee, "bundler")
    with pytest.raises(ChannelError):
        chain.bundler_submit(deposit)
    assert len(chain.bundler) == 0


def test_queue_order_preserved(world):
    chain, alice, bob = world
    for _ in range(10):
        alice.deposit(1, 20, "alice-wallet")
    alice.wallet.sync(chain.pool)
    # ten independent single-note spends, each built against a disjoint note
    notes = [n for n in alice.wallet.unspent(chain.pool) if n.value == 20]
    ops = []
    for note in notes[:10]:
        alice.wallet.notes = {note.leaf_index: note}
        alice.wallet.cursor = chain.pool.size()
        op, tx = alice.withdraw(1, 5, "out", submit=False)
        ops.append(op)
    for op in ops:
        chain.bundler_submit(op)
    events = chain.flush()
    assert [e.payload["op"] for e in events] == [o.to_json() for o in ops]
    assert all(e.error is None for e in events)
    assert [e.seq for e in events] == sorted(e.seq for e in events)


def test_replay_from_disk(tmp_path, world):
    chain, alice, bob = world
    path = tmp_path / "ledger.jsonl"
    disk = Chain(chain.config, chain.setup, path)
    disk.replay(chain.events)
    path.write_text(disk.ledger_text())
    alice.chain = disk
    alice.wallet.cursor = 0
    alice.wallet.notes = {}
    alice.transfer(bob.account.address, 1, 50, fee_asset=2)
    alice.withdraw(2, 10, "pub")
    with pytest.raises(Exception):
        alice.deposit(1, 10**6, "alice-wallet")
    reloaded = Chain.load(chain.config, path)
    assert reloaded.state_hash() == disk.state_hash()
    lines = path.read_text().splitlines()
    assert [LedgerEvent.from_json(json.loads(x)).seq for x in lines] == list(range(len(lines)))


def run(tmp_path, *argv):
    import contextlib
    import io
    out = io.StringIO()
    base = ["--config", str(tmp_path / "pool.json"), "--ledger", str(tmp_path / "ledger.jsonl")]
    with contextlib.redirect_stdout(out):
        code = main(base + list(argv))
    return code, json.loads(out.getvalue())


def test_cli_end_to_end(tmp_path):
    alice, bob, rev = (str(tmp_path / f"{n}.json") for n in ("alice", "bob", "rev"))
    assert run(tmp_path, "--seed", "1", "init", "--depth", "10")[0] == 0
    for i, k in enumerate((alice, bob, rev)):
        code, out = run(tmp_path, "--keys", k, "--seed", str(10 + i), "keygen")
        assert code == 0
    acct = ShieldedAccount.load(alice)
    assert acct.S == base_mul(acct.s)
    run(tmp_path, "--keys", bob, "register", "bob")
    run(tmp_path, "--seed", "5", "guardian-keygen", "--t", "2", "--n", "3",
        "--revoker-keys", rev, "--out-dir", str(tmp_path / "g"))
    assert run(tmp_path, "--keys", alice, "deposit", "--asset", "1", "--value", "100")[0] == 0
    assert run(tmp_path, "--keys", alice, "balance")[1] == {"balances": {"1": 100}}
    run(tmp_path, "--keys", alice, "deposit", "--asset", "2", "--value", "50")
    code, tx = run(tmp_path, "--keys", alice, "transfer", "--to", "bob", "--asset", "1",
                   "--value", "60", "--fee-asset", "2")
    assert code == 0
    assert run(tmp_path, "--keys", alice, "balance")[1]["balances"]["1"] == 40
    assert run(tmp_path, "--keys", bob, "balance")[1] == {"balances": {"1": 60}}

    # the ledger carries no plaintext link between alice and bob
    ledger = (tmp_path / "ledger.jsonl").read_text()
    bob_acct = ShieldedAccount.load(bob)
    transfer_events = [line for line in ledger.splitlines() if '"kind": "operation"' in line]
    for secret in (acct.to_json()["S"], acct.to_json()["P"], acct.to_json()["s"],
                   acct.to_json()["p"], bob_acct.to_json()["S"], bob_acct.to_json()["P"],
                   bob_acct.to_json()["p"]):
        assert all(secret not in line for line in transfer_events)

    # view-key-only balance
    run(tmp_path, "--keys", alice, "export-viewkey", "--out", str(tmp_path / "view.json"))
    assert run(tmp_path, "balance", "--viewkey", str(tmp_path / "view.json"))[1] == \
        {"balances": {"1": 40, "2": 50 - tx["receipt"]["fee"]["value"]}}

    # error categories surface as exit codes
    code, out = run(tmp_path, "--keys", alice, "transfer", "--to", "bob", "--asset", "1",
                    "--value", "1000")
    assert (code, out["error"]) == (10, "funding")
    code, out = run(tmp_path, "--keys", alice, "deposit", "--asset", "1", "--value", "5",
                    "--source", "nobody", "--to", "carol")
    assert (code, out["error"]) == (4, "not-found")

    # involuntary de-anonymization
    code, req = run(tmp_path, "--keys", rev, "request-deanon", "--tx", tx["tx_id"],
                    "--justification", "court order")
    assert code == 0
    run(tmp_path, "guardian-approve", "--request", req["request_id"],
        "--share", str(tmp_path / "g" / "guardian-2.json"))
    code, out = run(tmp_path, "--keys", rev, "reveal", "--request", req["request_id"])
    assert (code, out["error"]) == (30, "compliance")
    run(tmp_path, "guardian-approve", "--request", req["request_id"],
        "--share", str(tmp_path / "g" / "guardian-3.json"))
    code, out = run(tmp_path, "--keys", rev, "reveal", "--request", req["request_id"])
    assert code == 0
    assert out["record"]["sender"] == acct.address.hex()
    assert sorted(o["value"] for o in out["record"]["outputs"] if o["asset"] == 1) == [40, 60]
    # alice is not the revoker: her signature is refused
    code, out = run(tmp_path, "--keys", alice, "request-deanon", "--tx", tx["tx_id"],
                    "--justification", "curious")
    assert out["error"] == "compliance"
    assert (tmp_path / "ledger.jsonl.requests.jsonl").read_text().count("\n") == 1


def test_cli_requires_init(tmp_path):
    code, out = run(tmp_path, "--keys", str(tmp_path / "k.json"), "balance")
    assert code == 4 and out["error"] == "not-found"


def test_guardian_setup_midway_is_replayed_in_order(tmp_path):
    alice, bob, rev = (str(tmp_path / f"{n}.json") for n in ("alice", "bob", "rev"))
    run(tmp_path, "--seed", "1", "init", "--depth", "8")
    for i, k in enumerate((alice, bob, rev)):
        run(tmp_path, "--keys", k, "--seed", str(20 + i), "keygen")
    run(tmp_path, "--keys", bob, "register", "bob")
    run(tmp_path, "--keys", alice, "deposit", "--asset", "1", "--value", "100")
    _, early = run(tmp_path, "--keys", alice, "transfer", "--to", "bob", "--asset", "1",
                   "--value", "10")
    code, setup = run(tmp_path, "--seed", "2", "guardian-keygen", "--t", "1", "--n", "1",
                      "--revoker-keys", rev, "--out-dir", str(tmp_path / "g"))
    assert code == 0
    code, _ = run(tmp_path, "--seed", "3", "guardian-keygen", "--t", "1", "--n", "1",
                  "--revoker-keys", rev, "--out-dir", str(tmp_path / "g2"))
    assert code == 3
    # replay applies the earlier transfer under the old rules and the later one under the new
    code, late = run(tmp_path, "--keys", alice, "transfer", "--to", "bob", "--asset", "1",
                     "--value", "5")
    assert code == 0 and late["seq"] > setup["seq"] > early["seq"]
    code, out = run(tmp_path, "--keys", rev, "request-deanon", "--tx", early["tx_id"],
                    "--justification", "before setup")
    assert out["error"] == "validation"
    assert run(tmp_path, "--keys", bob, "balance")[1] == {"balances": {"1": 15}}
