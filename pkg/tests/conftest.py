import pytest

from shieldpool.account import derive_account
from shieldpool.primitives import Rng
from shieldpool.sim import Chain, Client, default_config


def make_config(depth=10, **overrides):
    cfg = default_config(depth)
    cfg["assets"][0]["deposit_cap"] = 1000
    cfg["assets"][0]["epoch_cap"] = 5000
    cfg["deny_list"] = ["mallory"]
    cfg["limit_exempt"] = ["treasury"]
    cfg["proxies"] = [
        {"id": "swap", "type": "mock-swap", "args": [1, 2, 1000, 1000]},
        {"id": "stake", "type": "mock-stake", "args": [1, 3]},
    ]
    cfg.update(overrides)
    return cfg


@pytest.fixture()
def world():
    """A fresh chain with two funded clients, alice and bob."""
    rng = Rng(42)
    chain = Chain.create(make_config(), rng)
    alice = Client(derive_account(1), chain, Rng(1))
    bob = Client(derive_account(2), chain, Rng(2))
    alice.deposit(1, 500, "alice-wallet")
    alice.deposit(2, 300, "alice-wallet")
    return chain, alice, bob
