"""The multi-asset pool state machine.

All checks for an operation run before any state is touched, so a rejected
operation leaves the pool exactly as it was.
"""

import copy
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import (
    ChannelError, ConflictError, ConvertError, DoubleSpendError, LimitError,
    NotFoundError, PaymasterError, ProofError, QuoteError, ScreeningError,
    StaleRootError, ValidationError,
)
from .ledger import DEFAULT_DEPTH, DEFAULT_HISTORY, NoteLedger, check_asset, commitment_of
from .primitives import keccak256
from .proving import Proof, VerifyingKey, verify
from .stealth import AuxData
from .transaction import PublicInputs
from .wallet import OutputRecord

GAS_BASE = 50_000
GAS_PER_INPUT = 10_000
GAS_PER_OUTPUT = 20_000
DEFAULT_MARGIN = Fraction(1, 10)
EPOCH_BLOCKS = 1000

BUNDLER = "bundler"
DIRECT = "direct"


def _fraction(value) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(str(value))


@dataclass
class AssetInfo:
    id: int
    symbol: str
    decimals: int = 18
    deposit_cap: Optional[int] = None
    epoch_cap: Optional[int] = None
    gas_price: Optional[Fraction] = None

    def __post_init__(self):
        check_asset(self.id)
        if self.id == 0:
            raise ValidationError("asset id 0 is reserved for dummy notes")
        if self.gas_price is not None:
            self.gas_price = _fraction(self.gas_price)

    def to_json(self) -> dict:
        return {
            "id": self.id, "symbol": self.symbol, "decimals": self.decimals,
            "deposit_cap": self.deposit_cap, "epoch_cap": self.epoch_cap,
            "gas_price": None if self.gas_price is None else str(self.gas_price),
        }


@dataclass
class PoolConfig:
    tree_depth: int = DEFAULT_DEPTH
    root_history: int = DEFAULT_HISTORY
    assets: list = field(default_factory=list)
    deny_list: list = field(default_factory=list)
    limit_exempt: list = field(default_factory=list)
    paymaster_margin: Fraction = DEFAULT_MARGIN
    epoch_length: int = EPOCH_BLOCKS
    guardians: Optional[dict] = None
    revoker: Optional[str] = None

    def __post_init__(self):
        self.paymaster_margin = _fraction(self.paymaster_margin)
        self.assets = [a if isinstance(a, AssetInfo) else AssetInfo(**a) for a in self.assets]

    def to_json(self) -> dict:
        return {
            "tree_depth": self.tree_depth,
            "root_history": self.root_history,
            "assets": [a.to_json() for a in self.assets],
            "deny_list": list(self.deny_list),
            "limit_exempt": list(self.limit_exempt),
            "paymaster_margin": str(self.paymaster_margin),
            "epoch_length": self.epoch_length,
            "guardians": self.guardians,
            "revoker": self.revoker,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PoolConfig":
        return cls(**data)


@dataclass(frozen=True)
class TransactionPayload:
    """Wire envelope for a shielded transaction."""

    kind: str
    public: PublicInputs
    proof: Proof
    aux_data: tuple = ()
    fee: Optional[tuple] = None
    recipient: Optional[str] = None
    compliance: Optional[bytes] = None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "public_inputs": self.public.to_json(),
            "proof": {"backend": self.proof.backend, "data": self.proof.hex()},
            "aux_data": [bytes(a).hex() for a in self.aux_data],
            "fee": None if self.fee is None else {"asset": self.fee[0], "value": self.fee[1]},
            "recipient": self.recipient,
            "compliance": None if self.compliance is None else self.compliance.hex(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TransactionPayload":
        try:
            fee = data.get("fee")
            comp = data.get("compliance")
            return cls(
                data["kind"],
                PublicInputs.from_json(data["public_inputs"]),
                Proof(bytes.fromhex(data["proof"]["data"]), data["proof"]["backend"]),
                tuple(bytes.fromhex(a) for a in data.get("aux_data", [])),
                None if fee is None else (int(fee["asset"]), int(fee["value"])),
                data.get("recipient"),
                None if comp is None else bytes.fromhex(comp),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed payload: {exc}") from None


@dataclass(frozen=True)
class UserOperation:
    payload: TransactionPayload
    fee: tuple
    channel: str = BUNDLER

    def to_json(self) -> dict:
        return {"payload": self.payload.to_json(),
                "fee": {"asset": self.fee[0], "value": self.fee[1]},
                "channel": self.channel}

    @classmethod
    def from_json(cls, data: dict) -> "UserOperation":
        return cls(TransactionPayload.from_json(data["payload"]),
                   (int(data["fee"]["asset"]), int(data["fee"]["value"])), data["channel"])


@dataclass(frozen=True)
class ConvertRequest:
    proxy: str
    assets: tuple
    values: tuple
    fee_asset: int
    fee_value: int
    data: bytes = b""
    outputs: tuple = ()   # AuxData (or raw bytes) for each expected output

    def __post_init__(self):
        if len(self.assets) != len(self.values):
            raise ValidationError("assets and values must align")
        if self.fee_value <= 0:
            raise ValidationError("convert fee must be positive")

    def to_json(self) -> dict:
        return {
            "proxy": self.proxy, "assets": list(self.assets), "values": list(self.values),
            "fee_asset": self.fee_asset, "fee_value": self.fee_value, "data": self.data.hex(),
            "outputs": [_aux_bytes(o).hex() for o in self.outputs],
        }

    @classmethod
    def from_json(cls, d: dict) -> "ConvertRequest":
        return cls(d["proxy"], tuple(d["assets"]), tuple(d["values"]), d["fee_asset"],
                   d["fee_value"], bytes.fromhex(d["data"]),
                   tuple(bytes.fromhex(o) for o in d["outputs"]))


@dataclass
class Receipt:
    kind: str
    leaf_indices: list = field(default_factory=list)
    nullifiers: list = field(default_factory=list)
    fee: Optional[tuple] = None
    outputs: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "leaf_indices": self.leaf_indices,
            "nullifiers": [f"{n:064x}" for n in self.nullifiers],
            "fee": None if self.fee is None else {"asset": self.fee[0], "value": self.fee[1]},
            "outputs": [list(o) for o in self.outputs],
        }


def _aux_bytes(aux) -> bytes:
    if isinstance(aux, (bytes, bytearray)):
        return bytes(aux)
    if hasattr(aux, "aux"):
        aux = aux.aux
    return aux.to_bytes()


def gas_estimate(n_inputs: int, n_outputs: int) -> int:
    return GAS_BASE + GAS_PER_INPUT * n_inputs + GAS_PER_OUTPUT * n_outputs


def required_fee(gas: int, price, margin=DEFAULT_MARGIN) -> int:
    """Smallest whole fee covering ``gas * price * (1 + margin)``."""
    return max(1, math.ceil(gas * _fraction(price) * (1 + _fraction(margin))))


class DenyListScreening:
    """Screening client backed by a static deny list."""

    def __init__(self, handles=()):
        self.denied = set(handles)

    def is_denied(self, handle: str) -> bool:
        return handle in self.denied


class Pool:
    def __init__(self, config: PoolConfig, verifying_key: VerifyingKey, screening=None):
        self.config = config
        self.vk = verifying_key
        self.screening = screening or DenyListScreening(config.deny_list)
        self.assets = {a.id: a for a in config.assets}
        self.notes = NoteLedger(config.tree_depth, config.root_history)
        self.nullifiers = set()
        self.records = []
        self.custody = defaultdict(int)
        self.epoch_volume = defaultdict(int)
        self.public_accounts = defaultdict(lambda: defaultdict(int))
        self.fees_collected = defaultdict(int)
        self.totals = defaultdict(lambda: defaultdict(int))
        self.proxies = {}
        self.block = 0

    # -- ledger view ------------------------------------------------------

    def root(self) -> int:
        return self.notes.root()

    def root_history_contains(self, root: int) -> bool:
        return self.notes.root_history_contains(root)

    def size(self) -> int:
        return len(self.notes)

    def open(self, index: int) -> list:
        return self.notes.open(index)

    def outputs(self, start: int = 0) -> list:
        return self.records[start:]

    def is_spent(self, nf: int) -> bool:
        return nf in self.nullifiers

    # -- helpers ----------------------------------------------------------

    def advance_block(self, count: int = 1) -> int:
        self.block += count
        return self.block

    @property
    def epoch(self) -> int:
        return self.block // self.config.epoch_length

    def asset(self, asset_id: int) -> AssetInfo:
        try:
            return self.assets[asset_id]
        except KeyError:
            raise NotFoundError(f"asset {asset_id} is not registered") from None

    def gas_price_oracle(self, asset_id: int) -> Fraction:
        info = self.assets.get(asset_id)
        if info is None or info.gas_price is None:
            raise QuoteError(f"no gas price for asset {asset_id}")
        return info.gas_price

    def quote(self, asset_id: int, n_inputs: int, n_outputs: int) -> int:
        gas = gas_estimate(n_inputs, n_outputs)
        return required_fee(gas, self.gas_price_oracle(asset_id), self.config.paymaster_margin)

    def _op_outputs(self, op: UserOperation, extra_outputs: int = 0) -> int:
        return op.payload.public.m + extra_outputs

    def paymaster_validate(self, op: UserOperation, extra_outputs: int = 0) -> bool:
        try:
            self._paymaster_check(op, extra_outputs)
        except (PaymasterError, QuoteError):
            return False
        return True

    def _paymaster_check(self, op: UserOperation, extra_outputs: int = 0) -> int:
        asset, value = op.fee
        needed = self.quote(asset, op.payload.public.n, self._op_outputs(op, extra_outputs))
        if value < needed:
            raise PaymasterError(f"fee {value} below required {needed}")
        return needed

    def _check_spend(self, rho: PublicInputs, proof: Proof) -> None:
        if not self.root_history_contains(rho.root):
            raise StaleRootError("root is not in the recent history")
        if len(set(rho.nullifiers)) != len(rho.nullifiers):
            raise DoubleSpendError("nullifier repeated within the transaction")
        if any(nf in self.nullifiers for nf in rho.nullifiers):
            raise DoubleSpendError("nullifier already spent")
        if not verify(self.vk, proof, rho):
            raise ProofError("proof rejected")

    def _check_outputs(self, payload: TransactionPayload, extra: int = 0) -> list:
        leaves = [c for c in payload.public.commitments if c != 0]
        if len(payload.aux_data) != len(leaves):
            raise ValidationError("one aux blob is required per output note")
        for aux in payload.aux_data:
            AuxData.from_bytes(aux)
        if self.size() + len(leaves) + extra > self.notes.tree.capacity:
            raise ValidationError("tree capacity exceeded")
        if self.config.guardians and self.config.revoker and payload.compliance is None:
            raise ValidationError("compliance envelope required")
        return leaves

    def _append(self, c: int, aux: Optional[bytes], public=None) -> int:
        index = self.notes.append(c)
        self.records.append(OutputRecord(index, c, aux, public))
        return index

    # -- deposit ----------------------------------------------------------

    def deposit(self, asset_id: int, value: int, output, source: str) -> Receipt:
        """Direct deposit from a public wallet; the commitment is computed here
        from the public amount and the stealth address in the aux data."""
        info = self.asset(asset_id)
        if self.screening.is_denied(source):
            raise ScreeningError(f"source {source!r} failed screening")
        if not isinstance(value, int) or value <= 0:
            raise ValidationError("deposit value must be positive")
        exempt = source in self.config.limit_exempt
        if not exempt and info.deposit_cap is not None and value > info.deposit_cap:
            raise LimitError(f"deposit {value} exceeds per-deposit cap {info.deposit_cap}")
        key = (asset_id, self.epoch)
        if not exempt and info.epoch_cap is not None and self.epoch_volume[key] + value > info.epoch_cap:
            raise LimitError(f"deposit would exceed epoch volume cap {info.epoch_cap}")
        aux = _aux_bytes(output)
        x = AuxData.from_bytes(aux).x
        if self.size() >= self.notes.tree.capacity:
            raise ValidationError("tree capacity exceeded")
        c = commitment_of(asset_id, x, value)

        index = self._append(c, aux, (asset_id, value))
        self.custody[asset_id] += value
        self.epoch_volume[key] += value
        self.totals["deposits"][asset_id] += value
        return Receipt("deposit", [index], outputs=[(asset_id, value)])

    # -- shielded operations ------------------------------------------------

    def _flows(self, payload: TransactionPayload, fee):
        """Split the public flows into (fee_slot, withdrawals)."""
        rho = payload.public
        fee_slot = None
        withdrawals = []
        for i, (V, E) in enumerate(zip(rho.public_values, rho.public_assets)):
            if E == 0:
                continue
            self.asset(E)
            if V > 0:
                raise ChannelError("public inflow must use the direct deposit channel")
            if V == 0:
                continue
            if fee is not None and fee_slot is None and (E, -V) == tuple(fee):
                fee_slot = i
            else:
                withdrawals.append((E, -V))
        return fee_slot, withdrawals

    def submit_operation(self, op: UserOperation) -> Receipt:
        if op.channel != BUNDLER:
            raise ChannelError("shielded operations go through the bundler")
        payload = op.payload
        if payload.kind != "operation":
            raise ChannelError(f"{payload.kind!r} payloads cannot be submitted as operations")
        if payload.fee is None or tuple(payload.fee) != tuple(op.fee):
            raise PaymasterError("payload fee does not match the user operation")
        self._paymaster_check(op)
        rho = payload.public
        fee_slot, withdrawals = self._flows(payload, op.fee)
        if fee_slot is None:
            raise PaymasterError("transaction does not pay the quoted fee")
        if withdrawals and not payload.recipient:
            raise ValidationError("withdrawal needs a public recipient")
        self._check_spend(rho, payload.proof)
        outgoing = defaultdict(int)
        for asset_id, value in [*withdrawals, op.fee]:
            outgoing[asset_id] += value
        for asset_id, value in outgoing.items():
            if self.custody[asset_id] < value:
                raise ValidationError("pool custody cannot cover the outflow")
        leaves = self._check_outputs(payload)

        # apply
        self.nullifiers.update(rho.nullifiers)
        indices = [self._append(c, bytes(a)) for c, a in zip(leaves, payload.aux_data)]
        for asset_id, value in withdrawals:
            self.custody[asset_id] -= value
            self.public_accounts[payload.recipient][asset_id] += value
            self.totals["withdrawals"][asset_id] += value
        self._settle_fee(op.fee)
        return Receipt("operation", indices, list(rho.nullifiers), tuple(op.fee))

    def _settle_fee(self, fee) -> None:
        asset_id, value = fee
        self.custody[asset_id] -= value
        self.fees_collected[asset_id] += value
        self.totals["fees"][asset_id] += value

    # -- convert ----------------------------------------------------------

    def register_proxy(self, proxy_id: str, proxy) -> None:
        if proxy_id in self.proxies:
            raise ConflictError(f"proxy {proxy_id!r} already registered")
        if not callable(getattr(proxy, "convert", None)):
            raise ValidationError("proxy must expose convert()")
        self.proxies[proxy_id] = proxy

    def convert(self, req: ConvertRequest, op: UserOperation) -> Receipt:
        if op.channel != BUNDLER:
            raise ChannelError("convert goes through the bundler")
        payload = op.payload
        if payload.kind != "operation":
            raise ChannelError(f"{payload.kind!r} payloads cannot be converted")
        proxy = self.proxies.get(req.proxy)
        if proxy is None:
            raise NotFoundError(f"proxy {req.proxy!r} is not registered")
        if (req.fee_asset, req.fee_value) != tuple(op.fee):
            raise PaymasterError("convert fee does not match the user operation")
        self._paymaster_check(op, extra_outputs=len(req.outputs))
        self.asset(req.fee_asset)
        rho = payload.public
        fee_slot, released = self._flows(payload, None)
        if sorted(released) != sorted(zip(req.assets, req.values)):
            raise ConvertError("public values must release exactly the convert inputs")
        self._check_spend(rho, payload.proof)
        for asset_id, value in released:
            if self.custody[asset_id] < value:
                raise ValidationError("pool custody cannot cover the outflow")
        leaves = self._check_outputs(payload, extra=len(req.outputs))
        out_aux = [_aux_bytes(o) for o in req.outputs]
        xs = [AuxData.from_bytes(a).x for a in out_aux]

        snapshot = copy.deepcopy(proxy)
        try:
            e_out, v_out = proxy.convert(tuple(req.assets), tuple(req.values),
                                         req.fee_asset, req.fee_value, req.data)
            e_out, v_out = list(e_out), list(v_out)
            if len(e_out) != len(v_out):
                raise ConvertError("proxy returned misaligned outputs")
            if len(e_out) > len(xs):
                raise ConvertError("proxy returned more outputs than stealth addresses")
            for a, v in zip(e_out, v_out):
                self.asset(a)
                if not isinstance(v, int) or v < 0:
                    raise ConvertError("proxy returned a negative value")
            fee_at = next((i for i, (a, v) in enumerate(zip(e_out, v_out))
                           if a == req.fee_asset and v >= req.fee_value), None)
            if fee_at is None:
                raise ConvertError("proxy output does not cover the fee")
        except Exception as exc:
            self.proxies[req.proxy] = snapshot
            if isinstance(exc, ConvertError):
                raise
            raise ConvertError(f"proxy failed: {exc}") from exc

        # apply
        self.nullifiers.update(rho.nullifiers)
        indices = [self._append(c, bytes(a)) for c, a in zip(leaves, payload.aux_data)]
        for asset_id, value in released:
            self.custody[asset_id] -= value
            self.totals["converted_out"][asset_id] += value
        for a, v in zip(e_out, v_out):
            self.custody[a] += v
            self.totals["converted_in"][a] += v
        v_out[fee_at] -= req.fee_value
        self._settle_fee(op.fee)
        results = []
        for a, v, x, aux in zip(e_out, v_out, xs, out_aux):
            indices.append(self._append(commitment_of(a, x, v), aux, (a, v)))
            results.append((a, v))
        return Receipt("convert", indices, list(rho.nullifiers), tuple(op.fee), results)

    # -- audit ------------------------------------------------------------

    def custody_identity_holds(self) -> bool:
        """custody = deposits - withdrawals - converted_out + converted_in - fees."""
        t = self.totals
        ids = set(self.custody) | {a for d in t.values() for a in d}
        return all(
            self.custody[a] == t["deposits"][a] - t["withdrawals"][a]
            - t["converted_out"][a] + t["converted_in"][a] - t["fees"][a]
            for a in ids
        )

    def snapshot(self) -> dict:
        def plain(d):
            return {str(k): v for k, v in sorted(d.items()) if v}
        return {
            "block": self.block,
            "leaves": [f"{c:064x}" for c in self.notes.tree.leaves],
            "root": f"{self.root():064x}",
            "roots": [f"{r:064x}" for r in self.notes.history],
            "records": [[r.leaf_index, r.aux.hex() if r.aux else None,
                         list(r.public) if r.public else None] for r in self.records],
            "nullifiers": sorted(f"{n:064x}" for n in self.nullifiers),
            "custody": plain(self.custody),
            "epoch_volume": {f"{a}:{e}": v for (a, e), v in sorted(self.epoch_volume.items()) if v},
            "public_accounts": {h: plain(b) for h, b in sorted(self.public_accounts.items()) if plain(b)},
            "fees": plain(self.fees_collected),
            "totals": {k: plain(v) for k, v in sorted(self.totals.items()) if plain(v)},
            "proxies": {k: getattr(p, "state", lambda: None)() for k, p in sorted(self.proxies.items())},
            "compliance": [self.config.guardians, self.config.revoker],
        }

    def state_hash(self) -> str:
        blob = json.dumps(self.snapshot(), sort_keys=True, separators=(",", ":"))
        return keccak256(blob.encode()).hex()
