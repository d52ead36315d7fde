"""Shielded transactions: public/private inputs, the statement checker, and
building and signing transactions from a wallet's notes."""

from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional

from .account import ShieldedAccount, ShieldedAddress
from .errors import FundingError, StaleViewError, ValidationError
from .ledger import (
    ASSET_BITS, VALUE_BITS, commitment_of, nullifier, verify_opening,
)
from .primitives import FIELD_PRIME, Point, Rng, Signature, schnorr_sign, schnorr_verify
from .primitives.babyjub import check_point, compress, decompress
from .stealth import StealthOutput, create_stealth_output, stealth_address

MAX_INPUTS = 4
MAX_OUTPUTS = 4
PUBLIC_VALUE_BOUND = 1 << 52
WORD = 32


def _word(value: int) -> bytes:
    return (value % (1 << 256)).to_bytes(WORD, "big")


@dataclass(frozen=True)
class PublicInputs:
    root: int
    public_values: tuple
    public_assets: tuple
    nullifiers: tuple
    commitments: tuple

    def __post_init__(self):
        for name in ("public_values", "public_assets", "nullifiers", "commitments"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @property
    def n(self) -> int:
        return len(self.nullifiers)

    @property
    def m(self) -> int:
        return len(self.commitments)

    def canonical(self) -> bytes:
        """Length-prefixed 32-byte words: R, V (two's complement), E, eta, c_out."""
        out = [_word(self.root)]
        for seq in (self.public_values, self.public_assets, self.nullifiers, self.commitments):
            out.append(_word(len(seq)))
            out.extend(_word(v) for v in seq)
        return b"".join(out)

    def to_json(self) -> dict:
        return {
            "root": _word(self.root).hex(),
            "public_values": list(self.public_values),
            "public_assets": list(self.public_assets),
            "nullifiers": [_word(v).hex() for v in self.nullifiers],
            "commitments": [_word(v).hex() for v in self.commitments],
        }

    @classmethod
    def from_json(cls, data: dict) -> "PublicInputs":
        try:
            return cls(
                int(data["root"], 16),
                tuple(int(v) for v in data["public_values"]),
                tuple(int(v) for v in data["public_assets"]),
                tuple(int(v, 16) for v in data["nullifiers"]),
                tuple(int(v, 16) for v in data["commitments"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed public inputs: {exc}") from None


@dataclass
class PrivateInputs:
    """Witness for one transaction; list lengths are n (inputs) and m (outputs)."""

    e_in: list
    e_out: list
    v_in: list
    v_out: list
    delta_in: list
    S_in: list
    sigma_in: list
    x_out: list
    l_in: list
    o_in: list

    @property
    def n(self) -> int:
        return len(self.e_in)

    @property
    def m(self) -> int:
        return len(self.e_out)

    def input_commitments(self) -> list:
        return [
            commitment_of(e, stealth_address(S, d), v)
            for e, v, d, S in zip(self.e_in, self.v_in, self.delta_in, self.S_in)
        ]


def sele(public_assets, out_assets) -> list:
    """Public asset id where set, otherwise the output note's asset id."""
    return [E if E != 0 else e for E, e in zip(public_assets, out_assets)]


def selv(values, assets, asset) -> list:
    return [v for v, a in zip(values, assets) if a == asset]


def _structure_failures(rho: PublicInputs, w: PrivateInputs) -> list:
    n, m = rho.n, rho.m
    if n > MAX_INPUTS or m > MAX_OUTPUTS:
        return ["arity"]
    in_lists = (w.e_in, w.v_in, w.delta_in, w.S_in, w.sigma_in, w.l_in, w.o_in)
    out_lists = (w.e_out, w.v_out, w.x_out, rho.public_values, rho.public_assets)
    if any(len(x) != n for x in in_lists) or any(len(x) != m for x in out_lists):
        return ["lengths"]
    fails = []
    for e in (*w.e_in, *w.e_out, *rho.public_assets):
        if not isinstance(e, int) or not 0 <= e < 1 << ASSET_BITS:
            fails.append("asset-range")
            break
    if any(e == 0 for e in w.e_in):
        fails.append("input-asset-zero")
    for v in (*w.v_in, *w.v_out):
        if not isinstance(v, int) or not 0 <= v < 1 << VALUE_BITS:
            fails.append("value-range")
            break
    for V, E in zip(rho.public_values, rho.public_assets):
        if not isinstance(V, int) or not -PUBLIC_VALUE_BOUND < V < PUBLIC_VALUE_BOUND:
            fails.append("public-value-range")
            break
        if E == 0 and V != 0:
            fails.append("public-value-without-asset")
            break
    for x in (rho.root, *rho.nullifiers, *rho.commitments, *w.delta_in, *w.x_out):
        if not isinstance(x, int) or not 0 <= x < FIELD_PRIME:
            fails.append("field-range")
            break
    return fails


def statement_failures(rho: PublicInputs, w: PrivateInputs, depth: int = None,
                       stop_early: bool = False) -> list:
    """Names of the conjuncts that do not hold; empty when the statement is true."""
    fails = _structure_failures(rho, w)
    if fails:
        return fails

    def bad(name):
        fails.append(name)
        return stop_early

    for i in range(rho.n):
        try:
            S = check_point(w.S_in[i])
        except ValueError:
            if bad(f"owner-key[{i}]"):
                return fails
            continue
        x = stealth_address(S, w.delta_in[i])
        c = commitment_of(w.e_in[i], x, w.v_in[i])
        if rho.nullifiers[i] != nullifier(w.l_in[i], c, w.delta_in[i]):
            if bad(f"nullifier[{i}]"):
                return fails
        if w.sigma_in[i] is None or not schnorr_verify(c, S, w.sigma_in[i]):
            if bad(f"signature[{i}]"):
                return fails
        if not verify_opening(rho.root, w.l_in[i], c, w.o_in[i], depth):
            if bad(f"opening[{i}]"):
                return fails
    for i in range(rho.m):
        if w.e_out[i] == 0:
            # dummy slot: no note behind it
            ok = w.v_out[i] == 0 and rho.commitments[i] == 0
        else:
            ok = rho.commitments[i] == commitment_of(w.e_out[i], w.x_out[i], w.v_out[i])
        if not ok and bad(f"output-commitment[{i}]"):
            return fails
    assets = set(w.e_in) | set(sele(rho.public_assets, w.e_out)) | set(w.e_out)
    assets.discard(0)
    for a in sorted(assets):
        lhs = sum(selv(w.v_in, w.e_in, a)) + sum(selv(rho.public_values, rho.public_assets, a))
        if lhs != sum(selv(w.v_out, w.e_out, a)) and bad(f"conservation[{a}]"):
            return fails
    return fails


def check_statement(rho: PublicInputs, w: PrivateInputs, depth: int = None) -> bool:
    return not statement_failures(rho, w, depth, stop_early=True)


# -- building ---------------------------------------------------------------

@dataclass(frozen=True)
class Payment:
    recipient: ShieldedAddress
    asset: int
    value: int


@dataclass
class Intent:
    """What a transaction should do.

    ``public`` holds signed (asset, value) flows across the pool boundary:
    positive for value entering, negative for value leaving. The fee, if
    any, is added as one more outgoing flow.
    """

    payments: list = field(default_factory=list)
    public: list = field(default_factory=list)
    fee: Optional[tuple] = None

    def flows(self) -> list:
        flows = [(a, v) for a, v in self.public]
        if self.fee is not None:
            flows.append((self.fee[0], -self.fee[1]))
        return flows


@dataclass(frozen=True)
class OwnedNote:
    leaf_index: int
    commitment: int
    asset: int
    value: int
    x: int
    delta: int
    nullifier: int


@dataclass
class Transaction:
    public: PublicInputs
    private: PrivateInputs
    outputs: list          # StealthOutput per slot, None for dummies
    inputs: list           # OwnedNote per input
    fee: Optional[tuple] = None

    @property
    def aux_data(self) -> list:
        return [o.aux for o in self.outputs if o is not None]


def select_notes(notes, required: int) -> list:
    """Greedy largest-first; ties broken by lower leaf index."""
    chosen, total = [], 0
    for note in sorted(notes, key=lambda n: (-n.value, n.leaf_index)):
        if total >= required:
            break
        chosen.append(note)
        total += note.value
    if total < required:
        raise FundingError(f"insufficient balance: need {required}, have {total}")
    return chosen


def build_transaction(intent: Intent, account: ShieldedAccount, notes, view,
                      rng: Rng = None) -> Transaction:
    """Select inputs from ``notes`` (unspent, owned), create stealth outputs and
    the public/private inputs. ``view`` supplies the root and openings."""
    flows = intent.flows()
    required = defaultdict(int)
    for pay in intent.payments:
        if pay.value < 0:
            raise ValidationError("payment value must be non-negative")
        required[pay.asset] += pay.value
    for asset, value in flows:
        required[asset] -= value

    by_asset = defaultdict(list)
    for note in notes:
        by_asset[note.asset].append(note)

    inputs, change = [], []
    for asset in sorted(required):
        need = required[asset]
        chosen = select_notes(by_asset[asset], need) if need > 0 else []
        inputs.extend(chosen)
        surplus = sum(n.value for n in chosen) - need
        if surplus > 0:
            change.append(Payment(account.address, asset, surplus))
    if len(inputs) > MAX_INPUTS:
        raise FundingError(f"transaction would need {len(inputs)} input notes (max {MAX_INPUTS})")

    payments = [*intent.payments, *change]
    m = max(len(payments), len(flows))
    if m > MAX_OUTPUTS:
        raise ValidationError(f"transaction needs {m} output slots (max {MAX_OUTPUTS})")

    root = view.root()
    if not view.root_history_contains(root):
        raise StaleViewError("view has no recent root")
    if any(n.leaf_index >= view.size() for n in inputs):
        raise StaleViewError("note is not in the viewed tree")

    outputs, e_out, v_out, x_out, c_out = [], [], [], [], []
    for pay in payments:
        out = create_stealth_output(pay.recipient, pay.asset, pay.value, rng)
        outputs.append(out)
        e_out.append(pay.asset)
        v_out.append(pay.value)
        x_out.append(out.x)
        c_out.append(commitment_of(pay.asset, out.x, pay.value))
    for _ in range(m - len(payments)):
        outputs.append(None)
        e_out.append(0)
        v_out.append(0)
        x_out.append(0)
        c_out.append(0)
    V = [v for _, v in flows] + [0] * (m - len(flows))
    E = [a for a, _ in flows] + [0] * (m - len(flows))

    public = PublicInputs(root, V, E, [n.nullifier for n in inputs], c_out)
    private = PrivateInputs(
        e_in=[n.asset for n in inputs],
        e_out=e_out,
        v_in=[n.value for n in inputs],
        v_out=v_out,
        delta_in=[n.delta for n in inputs],
        S_in=[account.S for _ in inputs],
        sigma_in=[None for _ in inputs],
        x_out=x_out,
        l_in=[n.leaf_index for n in inputs],
        o_in=[view.open(n.leaf_index) for n in inputs],
    )
    return Transaction(public, private, outputs, list(inputs), intent.fee)


def sign_inputs(private: PrivateInputs, s: int) -> PrivateInputs:
    """Return a copy of ``private`` with every input commitment signed by ``s``."""
    sigs = [schnorr_sign(c, s) for c in private.input_commitments()]
    return replace(private, sigma_in=sigs)


# -- witness (de)serialisation, used by test fixtures and tooling ----------

def private_to_json(w: PrivateInputs) -> dict:
    return {
        "e_in": w.e_in, "e_out": w.e_out, "v_in": w.v_in, "v_out": w.v_out,
        "delta_in": [_word(d).hex() for d in w.delta_in],
        "S_in": [compress(S).hex() for S in w.S_in],
        "sigma_in": [s.to_bytes().hex() if s is not None else None for s in w.sigma_in],
        "x_out": [_word(x).hex() for x in w.x_out],
        "l_in": w.l_in,
        "o_in": [[_word(h).hex() for h in o] for o in w.o_in],
    }


def private_from_json(data: dict) -> PrivateInputs:
    return PrivateInputs(
        e_in=list(data["e_in"]), e_out=list(data["e_out"]),
        v_in=list(data["v_in"]), v_out=list(data["v_out"]),
        delta_in=[int(d, 16) for d in data["delta_in"]],
        S_in=[decompress(bytes.fromhex(S)) for S in data["S_in"]],
        sigma_in=[Signature.from_bytes(bytes.fromhex(s)) if s else None for s in data["sigma_in"]],
        x_out=[int(x, 16) for x in data["x_out"]],
        l_in=list(data["l_in"]),
        o_in=[[int(h, 16) for h in o] for o in data["o_in"]],
    )


__all__ = [
    "MAX_INPUTS", "MAX_OUTPUTS", "PublicInputs", "PrivateInputs", "Payment",
    "Intent", "OwnedNote", "Transaction", "StealthOutput", "Point", "sele", "selv",
    "statement_failures", "check_statement", "select_notes", "build_transaction",
    "sign_inputs", "private_to_json", "private_from_json",
]
