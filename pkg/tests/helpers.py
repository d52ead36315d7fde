"""Small fixtures shared by several test modules."""

from shieldpool.ledger import NoteLedger, commitment_of, nullifier
from shieldpool.stealth import stealth_address
from shieldpool.transaction import OwnedNote


class LedgerView:
    """Minimal ledger view over a bare note tree."""

    def __init__(self, depth=8):
        self.ledger = NoteLedger(depth)

    def root(self):
        return self.ledger.root()

    def root_history_contains(self, root):
        return self.ledger.root_history_contains(root)

    def size(self):
        return len(self.ledger)

    def open(self, index):
        return self.ledger.open(index)

    def add_note(self, account, asset, value, delta):
        x = stealth_address(account.S, delta)
        c = commitment_of(asset, x, value)
        index = self.ledger.append(c)
        return OwnedNote(index, c, asset, value, x, delta, nullifier(index, c, delta))
