from fractions import Fraction

import pytest

from shieldpool.errors import (
    ChannelError, ConflictError, ConvertError, DoubleSpendError, LimitError,
    NotFoundError, PaymasterError, QuoteError, ScreeningError, StaleRootError,
)
from shieldpool.pool import (
    DIRECT, ConvertRequest, Pool, PoolConfig, UserOperation, gas_estimate, required_fee,
)
from shieldpool.proxies import MockStake, MockSwap
from shieldpool.stealth import create_stealth_output


def test_fee_arithmetic():
    assert required_fee(100, 2, Fraction(1, 10)) == 220
    assert required_fee(100, 2, 0) == 200
    assert required_fee(1, Fraction(1, 10**6), 0) == 1
    assert gas_estimate(2, 3) == 50_000 + 20_000 + 60_000


def test_deposit_rules(world):
    chain, alice, _ = world
    pool = chain.pool
    size, custody = pool.size(), pool.custody[1]
    alice.deposit(1, 100, "alice-wallet")
    assert pool.size() == size + 1 and pool.custody[1] == custody + 100
    before = pool.state_hash()
    with pytest.raises(LimitError):
        alice.deposit(1, 1001, "alice-wallet")
    with pytest.raises(ScreeningError):
        alice.deposit(1, 1, "mallory")
    with pytest.raises(NotFoundError):
        alice.deposit(77, 1, "alice-wallet")
    assert pool.state_hash() == before
    alice.deposit(1, 5000, "treasury")


def test_epoch_cap(world):
    chain, alice, _ = world
    for _ in range(9):
        alice.deposit(1, 500, "w")
    # 500 from the fixture + 9 * 500 = 5000 reached
    with pytest.raises(LimitError):
        alice.deposit(1, 1, "w")
    chain.advance_block(1000)
    alice.deposit(1, 1, "w")


def test_transfer_grows_state_by_n_and_m(world):
    chain, alice, bob = world
    pool = chain.pool
    nf, size, fees = len(pool.nullifiers), pool.size(), pool.fees_collected[2]
    ev, tx = alice.transfer(bob.account.address, 1, 200, fee_asset=2)
    assert ev.error is None
    real_outputs = sum(1 for c in tx.public.commitments if c)
    assert len(pool.nullifiers) == nf + tx.public.n
    assert pool.size() == size + real_outputs
    assert pool.fees_collected[2] > fees
    assert bob.balance() == {1: 200}


def test_replay_rejected_atomically(world):
    chain, alice, bob = world
    op, _ = alice.transfer(bob.account.address, 1, 10, submit=False)
    chain.bundler_submit(op)
    assert chain.flush()[0].error is None
    before = chain.state_hash()
    chain.bundler_submit(op)
    ev = chain.flush()[0]
    assert ev.error["category"] == "double-spend"
    assert chain.state_hash() == before
    with pytest.raises(DoubleSpendError):
        chain.pool.submit_operation(op)


def test_stale_root(world):
    chain, alice, bob = world
    op, _ = alice.transfer(bob.account.address, 1, 10, submit=False)
    for _ in range(64):
        bob.deposit(2, 1, "bob-wallet")
    before = chain.state_hash()
    with pytest.raises(StaleRootError):
        chain.pool.submit_operation(op)
    assert chain.state_hash() == before


def test_root_within_window_still_valid(world):
    chain, alice, bob = world
    op, _ = alice.transfer(bob.account.address, 1, 10, submit=False)
    for _ in range(63):
        bob.deposit(2, 1, "bob-wallet")
    chain.pool.submit_operation(op)


def test_paymaster(world):
    chain, alice, bob = world
    op, tx = alice.transfer(bob.account.address, 1, 10, fee_asset=2, submit=False)
    pool = chain.pool
    needed = pool.quote(2, tx.public.n, tx.public.m)
    assert op.fee == (2, needed)
    assert pool.paymaster_validate(op)
    cheap = UserOperation(op.payload, (2, needed - 1), op.channel)
    assert not pool.paymaster_validate(cheap)
    with pytest.raises(PaymasterError):
        pool.submit_operation(cheap)
    with pytest.raises(QuoteError):
        pool.gas_price_oracle(99)


def test_exact_fee_with_zero_margin(world):
    chain, alice, bob = world
    chain.pool.config.paymaster_margin = Fraction(0)
    op, tx = alice.transfer(bob.account.address, 1, 10, fee_asset=2, submit=False)
    gas = gas_estimate(tx.public.n, tx.public.m)
    assert op.fee[1] == required_fee(gas, chain.pool.gas_price_oracle(2), 0)
    chain.pool.submit_operation(op)


def test_channels(world):
    chain, alice, bob = world
    op, _ = alice.transfer(bob.account.address, 1, 10, submit=False)
    with pytest.raises(ChannelError):
        chain.pool.submit_operation(UserOperation(op.payload, op.fee, DIRECT))


def test_withdraw_credits_public_recipient(world):
    chain, alice, _ = world
    ev, _ = alice.withdraw(1, 120, "alice-public", fee_asset=2)
    assert ev.error is None
    assert chain.pool.public_accounts["alice-public"][1] == 120
    assert alice.balance()[1] == 380
    assert chain.pool.custody_identity_holds()


def test_swap_example(world):
    chain, alice, _ = world
    ev, tx = alice.convert("swap", 1, 100, fee_asset=2)
    assert ev.error is None
    (asset, value), = ev.receipt["outputs"]
    fee = ev.receipt["fee"]["value"]
    assert asset == 2 and value == 90 - fee
    assert chain.pool.proxies["swap"].reserves == {1: 1100, 2: 910}
    assert alice.balance() == {1: 400, 2: 300 + 90 - fee}


def test_stake_example(world):
    chain, alice, _ = world
    ev, _ = alice.convert("stake", 1, 50, fee_asset=1)
    assert ev.error is None
    fee = ev.receipt["fee"]["value"]
    assert sorted(map(tuple, ev.receipt["outputs"])) == [(1, 0), (3, 50 - fee)]
    assert MockStake(1, 3).convert((1,), (50,), 2, 5) == ((3,), (50,))


def test_proxy_without_fee_asset_rejected(world):
    chain, alice, _ = world
    before = chain.state_hash()
    ev, _ = alice.convert("stake", 1, 50, fee_asset=2)
    assert ev.error["category"] == "convert"
    assert chain.state_hash() == before


def test_proxy_registry_and_arguments(world):
    chain, alice, _ = world
    seen = []

    class Spy:
        def convert(self, e, v, e_f, v_f, d):
            seen.append((e, v, e_f, v_f, d))
            return (1,), (v[0],)

    chain.pool.register_proxy("spy", Spy())
    with pytest.raises(ConflictError):
        chain.pool.register_proxy("spy", Spy())
    ev, _ = alice.convert("spy", 1, 60, fee_asset=1, data=b"\x01\x02")
    assert ev.error is None
    fee = ev.receipt["fee"]["value"]
    assert seen == [((1,), (60,), 1, fee, b"\x01\x02")]
    ev, _ = alice.convert("nope", 1, 60, fee_asset=1)
    assert ev.error["category"] == "not-found"


def test_failing_proxy_restores_state(world):
    chain, alice, _ = world

    class Boom:
        touched = 0

        def convert(self, e, v, e_f, v_f, d):
            self.touched += 1
            raise RuntimeError("external protocol reverted")

    chain.pool.register_proxy("boom", Boom())
    before = chain.state_hash()
    ev, _ = alice.convert("boom", 1, 10, fee_asset=1)
    assert ev.error["category"] == "convert"
    assert chain.state_hash() == before
    assert chain.pool.proxies["boom"].touched == 0


def test_convert_request_invariants():
    with pytest.raises(ValueError):
        ConvertRequest("swap", (1,), (), 1, 1)
    with pytest.raises(ValueError):
        ConvertRequest("swap", (1,), (5,), 1, 0)


def test_swap_slippage():
    swap = MockSwap(1, 2, 1000, 1000)
    assert swap.amount_out(1, 100) == 90
    with pytest.raises(ConvertError):
        swap.convert((1,), (100,), 2, 1, (91).to_bytes(32, "big"))
    assert swap.reserves == {1: 1000, 2: 1000}


def test_config_json_round_trip():
    from conftest import make_config
    cfg = {k: v for k, v in make_config().items() if k != "proxies"}
    pc = PoolConfig.from_json(cfg)
    assert PoolConfig.from_json(pc.to_json()).to_json() == pc.to_json()
