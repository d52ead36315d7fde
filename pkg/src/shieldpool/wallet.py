"""Owner-side view of the pool: scanning outputs, tracking notes, balances."""

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .account import ShieldedAccount
from .ledger import commitment_of, nullifier
from .primitives import Rng
from .proving import ProvingKey, prove
from .stealth import AuxData, scan
from .transaction import Intent, OwnedNote, Transaction, build_transaction, sign_inputs


@dataclass(frozen=True)
class OutputRecord:
    """One leaf as published on the ledger. ``public`` is the (asset, value)
    pair for outputs whose amount is public (deposits, convert results)."""

    leaf_index: int
    commitment: int
    aux: Optional[bytes]
    public: Optional[tuple] = None


class Wallet:
    def __init__(self, account: ShieldedAccount):
        self.account = account
        self.notes = {}
        self.cursor = 0

    def sync(self, view) -> int:
        """Scan outputs published since the last sync; returns notes found."""
        found = 0
        for rec in view.outputs(self.cursor):
            note = self.try_open(rec)
            if note is not None:
                self.notes[note.leaf_index] = note
                found += 1
        self.cursor = view.size()
        return found

    def try_open(self, rec: OutputRecord):
        if rec.aux is None:
            return None
        aux = AuxData.from_bytes(rec.aux)
        secrets = scan(aux, self.account.p, self.account.S)
        if secrets is None:
            return None
        asset, value = rec.public if rec.public is not None else (secrets.asset, secrets.value)
        if commitment_of(asset, aux.x, value) != rec.commitment:
            return None
        return OwnedNote(
            rec.leaf_index, rec.commitment, asset, value, aux.x, secrets.delta,
            nullifier(rec.leaf_index, rec.commitment, secrets.delta),
        )

    def unspent(self, view) -> list:
        return [n for _, n in sorted(self.notes.items()) if not view.is_spent(n.nullifier)]

    def balance(self, view) -> dict:
        totals = defaultdict(int)
        for note in self.unspent(view):
            totals[note.asset] += note.value
        return dict(totals)

    def prepare(self, intent: Intent, view, pk: ProvingKey, rng: Rng = None):
        """Build, sign and prove; returns (transaction, proof)."""
        self.sync(view)
        tx = build_transaction(intent, self.account, self.unspent(view), view, rng)
        tx.private = sign_inputs(tx.private, self.account.s)
        return tx, prove(pk, tx.public, tx.private)


__all__ = ["OutputRecord", "Wallet", "Transaction"]
