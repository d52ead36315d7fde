"""In-process chain simulator: event log, bundler queue and a wallet client.

Every accepted action becomes one ledger event and one simulated block.
Rejections are logged too, but never change state, and replay skips them.
"""

import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .account import AddressRegistry, ShieldedAccount, ShieldedAddress
from .compliance import ComplianceEnvelope, encrypt_for_compliance
from .errors import ChannelError, ConflictError, PoolError, ValidationError
from .ledger import DEFAULT_DEPTH
from .pool import (
    BUNDLER, DIRECT, ConvertRequest, Pool, PoolConfig, TransactionPayload,
    UserOperation,
)
from .primitives import Rng, SUBGROUP_ORDER, decompress, keccak256
from .proving import SetupKeys, setup_ceremony
from .proxies import MockStake, MockSwap
from .stealth import create_stealth_output
from .transaction import Intent, Payment
from .wallet import Wallet

PROXY_TYPES = {"mock-swap": MockSwap, "mock-stake": MockStake}


def default_config(tree_depth: int = DEFAULT_DEPTH) -> dict:
    return {
        "tree_depth": tree_depth,
        "root_history": 64,
        "assets": [
            {"id": 1, "symbol": "TKA", "decimals": 18, "deposit_cap": 1_000_000,
             "epoch_cap": 10_000_000, "gas_price": "1/10000"},
            {"id": 2, "symbol": "TKB", "decimals": 18, "deposit_cap": 1_000_000,
             "epoch_cap": 10_000_000, "gas_price": "1/10000"},
            {"id": 3, "symbol": "sTKA", "decimals": 18, "deposit_cap": 0,
             "epoch_cap": 0, "gas_price": "1/10000"},
        ],
        "deny_list": [],
        "limit_exempt": [],
        "paymaster_margin": "1/10",
        "epoch_length": 1000,
        "guardians": None,
        "revoker": None,
        "proxies": [
            {"id": "swap", "type": "mock-swap", "args": [1, 2, 1_000_000, 1_000_000]},
            {"id": "stake", "type": "mock-stake", "args": [1, 3]},
        ],
    }


def tx_id(public) -> bytes:
    return keccak256(public.canonical())


@dataclass
class LedgerEvent:
    seq: int
    block: int
    kind: str
    payload: dict
    receipt: Optional[dict] = None
    error: Optional[dict] = None

    def to_json(self) -> dict:
        out = {"seq": self.seq, "block": self.block, "kind": self.kind, "payload": self.payload}
        if self.receipt is not None:
            out["receipt"] = self.receipt
        if self.error is not None:
            out["error"] = self.error
        return out

    @classmethod
    def from_json(cls, d: dict) -> "LedgerEvent":
        return cls(d["seq"], d["block"], d["kind"], d["payload"], d.get("receipt"), d.get("error"))


@dataclass
class QueuedOp:
    op: UserOperation
    convert: Optional[ConvertRequest] = None


class BundlerQueue:
    """FIFO of pending user operations. Deposits never enter it."""

    def __init__(self):
        self.pending = deque()

    def submit(self, op: UserOperation, convert: ConvertRequest = None) -> None:
        if op.channel != BUNDLER or op.payload.kind == "deposit":
            raise ChannelError("deposits are sent directly, not through the bundler")
        self.pending.append(QueuedOp(op, convert))

    def __len__(self) -> int:
        return len(self.pending)


class Chain:
    def __init__(self, config: dict, setup: SetupKeys, ledger_path=None):
        cfg = {k: v for k, v in config.items() if k not in ("proxies", "setup")}
        self.config = config
        self.setup = setup
        self.pool = Pool(PoolConfig.from_json(cfg), setup.verifying_key)
        for spec in config.get("proxies", []):
            self.pool.register_proxy(spec["id"], PROXY_TYPES[spec["type"]](*spec.get("args", [])))
        self.registry = AddressRegistry()
        self.bundler = BundlerQueue()
        self.events = []
        self.ledger_path = Path(ledger_path) if ledger_path else None
        self._replaying = False

    # -- persistence ------------------------------------------------------

    @classmethod
    def create(cls, config: dict, rng: Rng = None, ledger_path=None, participants: int = 3):
        rng = rng or Rng()
        contributions = [1 + rng.randbelow(SUBGROUP_ORDER - 1) for _ in range(participants)]
        setup = setup_ceremony(contributions, config.get("tree_depth", DEFAULT_DEPTH))
        config = dict(config, setup=setup.to_json())
        return cls(config, setup, ledger_path)

    @classmethod
    def load(cls, config: dict, ledger_path=None) -> "Chain":
        chain = cls(config, SetupKeys.from_json(config["setup"]), ledger_path)
        if chain.ledger_path and chain.ledger_path.exists():
            text = chain.ledger_path.read_text()
            if not text.endswith("\n"):
                # a write torn by a crash never committed; drop it
                text = text[:text.rfind("\n") + 1]
                chain.ledger_path.write_text(text)
            events = [LedgerEvent.from_json(json.loads(line))
                      for line in text.splitlines() if line.strip()]
            chain.replay(events)
        return chain

    def replay(self, events) -> None:
        self._replaying = True
        try:
            for ev in events:
                self._replay_one(ev)
        finally:
            self._replaying = False

    def _replay_one(self, ev: LedgerEvent) -> None:
        if ev.error is None:
            p = ev.payload
            if ev.kind == "deposit":
                self.deposit(p["asset"], p["value"], bytes.fromhex(p["aux"]), p["source"])
            elif ev.kind == "operation":
                self._apply(UserOperation.from_json(p["op"]), None)
            elif ev.kind == "convert":
                self._apply(UserOperation.from_json(p["op"]), ConvertRequest.from_json(p["request"]))
            elif ev.kind == "registry":
                self.register(p["handle"], ShieldedAddress.from_hex(p["address"]))
            elif ev.kind == "compliance-setup":
                self.setup_compliance(p["guardians"], p["revoker"])
            else:
                self._log(ev.kind, p)
        else:
            self._log(ev.kind, ev.payload, error=ev.error)
        if self.events[-1].to_json() != ev.to_json():
            raise ValidationError(f"replay diverged at event {ev.seq}")

    def _log(self, kind: str, payload: dict, receipt=None, error=None) -> LedgerEvent:
        if error is None and kind != "rejection":
            self.pool.advance_block()
        ev = LedgerEvent(len(self.events), self.pool.block, kind, payload, receipt, error)
        self.events.append(ev)
        if self.ledger_path and not self._replaying:
            with self.ledger_path.open("a") as fh:
                fh.write(json.dumps(ev.to_json(), sort_keys=True) + "\n")
        return ev

    # -- actions ----------------------------------------------------------

    def register(self, handle: str, address: ShieldedAddress) -> LedgerEvent:
        self.registry.register(handle, address)
        return self._log("registry", {"handle": handle, "address": address.hex()})

    def deposit(self, asset: int, value: int, aux: bytes, source: str) -> LedgerEvent:
        payload = {"asset": asset, "value": value, "aux": bytes(aux).hex(), "source": source}
        try:
            receipt = self.pool.deposit(asset, value, aux, source)
        except PoolError as exc:
            self._log("rejection", dict(payload, attempted="deposit"),
                      error={"category": exc.category, "message": str(exc)})
            raise
        return self._log("deposit", payload, receipt.to_json())

    def setup_compliance(self, guardians: dict, revoker: str) -> LedgerEvent:
        """Install the guardian key and revoker address from this point of the
        ledger on. Earlier transactions are unaffected."""
        cfg = self.pool.config
        if cfg.guardians or cfg.revoker:
            raise ConflictError("compliance keys are already configured")
        decompress(bytes.fromhex(guardians["collective"]))
        ShieldedAddress.from_hex(revoker)
        cfg.guardians, cfg.revoker = dict(guardians), revoker
        return self._log("compliance-setup", {"guardians": cfg.guardians, "revoker": revoker})

    def bundler_submit(self, op: UserOperation, convert: ConvertRequest = None) -> None:
        self.bundler.submit(op, convert)

    def flush(self) -> list:
        """Apply queued operations in order. Returns one event per operation;
        a rejection does not stop the queue."""
        results = []
        while self.bundler.pending:
            item = self.bundler.pending.popleft()
            results.append(self._apply(item.op, item.convert))
        return results

    def _apply(self, op: UserOperation, convert: Optional[ConvertRequest]) -> LedgerEvent:
        kind = "convert" if convert is not None else "operation"
        payload = {"op": op.to_json(), "tx_id": tx_id(op.payload.public).hex()}
        if convert is not None:
            payload["request"] = convert.to_json()
        try:
            if convert is not None:
                receipt = self.pool.convert(convert, op)
            else:
                receipt = self.pool.submit_operation(op)
        except PoolError as exc:
            return self._log("rejection", dict(payload, attempted=kind),
                             error={"category": exc.category, "message": str(exc)})
        return self._log(kind, payload, receipt.to_json())

    def advance_block(self, count: int = 1) -> int:
        return self.pool.advance_block(count)

    def log_compliance(self, kind: str, payload: dict) -> LedgerEvent:
        return self._log(kind, payload)

    # -- queries ----------------------------------------------------------

    def envelope(self, txid: bytes) -> ComplianceEnvelope:
        for ev in self.events:
            if ev.error is None and ev.kind in ("operation", "convert"):
                if ev.payload["tx_id"] == txid.hex():
                    comp = ev.payload["op"]["payload"].get("compliance")
                    if comp:
                        return ComplianceEnvelope.from_bytes(bytes.fromhex(comp))
        raise ValidationError(f"no compliance envelope for transaction {txid.hex()}")

    def state_hash(self) -> str:
        return self.pool.state_hash()

    def ledger_text(self) -> str:
        return "".join(json.dumps(ev.to_json(), sort_keys=True) + "\n" for ev in self.events)


@dataclass
class Client:
    """Wallet-side helper that builds, proves and submits transactions."""

    account: ShieldedAccount
    chain: Chain
    rng: Rng = field(default_factory=Rng)

    def __post_init__(self):
        self.wallet = Wallet(self.account)

    @property
    def pool(self) -> Pool:
        return self.chain.pool

    def balance(self) -> dict:
        self.wallet.sync(self.pool)
        return self.wallet.balance(self.pool)

    def deposit(self, asset: int, value: int, source: str, to: ShieldedAddress = None):
        out = create_stealth_output(to or self.account.address, asset, value, self.rng)
        return self.chain.deposit(asset, value, out.aux.to_bytes(), source)

    def _compliance(self, tx) -> Optional[bytes]:
        cfg = self.pool.config
        if not (cfg.guardians and cfg.revoker):
            return None
        record = {
            "sender": self.account.address.hex(),
            "inputs": [{"asset": n.asset, "value": n.value, "x": f"{n.x:064x}"} for n in tx.inputs],
            "outputs": [{"asset": e, "value": v, "x": f"{x:064x}"}
                        for e, v, x in zip(tx.private.e_out, tx.private.v_out, tx.private.x_out) if e],
        }
        revoker = ShieldedAddress.from_hex(cfg.revoker)
        collective = decompress(bytes.fromhex(cfg.guardians["collective"]))
        env = encrypt_for_compliance(json.dumps(record, sort_keys=True).encode(),
                                     tx_id(tx.public), revoker.P, collective, self.rng)
        return env.to_bytes()

    def _prepare(self, intent_for_fee, fee_asset: int, extra_outputs: int = 0):
        """Build with a fee that covers the paymaster quote for the final shape."""
        fee = 1
        for _ in range(4):
            intent = intent_for_fee(fee)
            tx, proof = self.wallet.prepare(intent, self.pool, self.setup_pk, self.rng)
            needed = self.pool.quote(fee_asset, tx.public.n, tx.public.m + extra_outputs)
            if needed <= fee:
                return tx, proof, fee
            fee = needed
        raise ValidationError("fee quote did not converge")

    @property
    def setup_pk(self):
        return self.chain.setup.proving_key

    def _operation(self, tx, proof, fee, recipient=None, convert=False) -> UserOperation:
        payload = TransactionPayload(
            "operation", tx.public, proof, tuple(a.to_bytes() for a in tx.aux_data),
            None if convert else fee, recipient, self._compliance(tx),
        )
        return UserOperation(payload, fee, BUNDLER)

    def transfer(self, recipient: ShieldedAddress, asset: int, value: int,
                 fee_asset: int = None, submit: bool = True):
        fee_asset = asset if fee_asset is None else fee_asset
        tx, proof, fee = self._prepare(
            lambda f: Intent([Payment(recipient, asset, value)], [], (fee_asset, f)), fee_asset)
        op = self._operation(tx, proof, (fee_asset, fee))
        return self._submit(op, None, submit), tx

    def withdraw(self, asset: int, value: int, recipient: str, fee_asset: int = None,
                 submit: bool = True):
        fee_asset = asset if fee_asset is None else fee_asset
        tx, proof, fee = self._prepare(
            lambda f: Intent([], [(asset, -value)], (fee_asset, f)), fee_asset)
        op = self._operation(tx, proof, (fee_asset, fee), recipient=recipient)
        return self._submit(op, None, submit), tx

    def convert(self, proxy: str, asset: int, value: int, fee_asset: int,
                data: bytes = b"", outputs: int = 2, submit: bool = True):
        tx, proof, _ = self._prepare(lambda f: Intent([], [(asset, -value)], None),
                                     fee_asset, extra_outputs=outputs)
        fee = self.pool.quote(fee_asset, tx.public.n, tx.public.m + outputs)
        stealth = tuple(create_stealth_output(self.account.address, 0, 0, self.rng).aux
                        for _ in range(outputs))
        req = ConvertRequest(proxy, (asset,), (value,), fee_asset, fee, data, stealth)
        op = self._operation(tx, proof, (fee_asset, fee), convert=True)
        return self._submit(op, req, submit), tx

    def _submit(self, op, convert, submit: bool):
        if not submit:
            return op if convert is None else (op, convert)
        self.chain.bundler_submit(op, convert)
        return self.chain.flush()[-1]


__all__ = [
    "BundlerQueue", "Chain", "Client", "LedgerEvent", "default_config", "tx_id",
    "DIRECT",
]
