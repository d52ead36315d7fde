import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import empty_root, merkle_root
from shieldpool.errors import CapacityError, ValidationError
from shieldpool.ledger import (
    ZERO_LEAF, MerkleTree, Note, NoteLedger, RootHistory, commitment, commitment_of,
    nullifier, verify_opening, zero_hashes,
)
from shieldpool.primitives import poseidon


def test_commitment_and_nullifier_formulas():
    note = Note(1, 22, 333, 4444)
    assert commitment(note) == poseidon([1, 22, 333]) == note.commitment
    assert commitment(Note(1, 22, 333, 5555)) == note.commitment
    assert commitment(Note(1, 22, 334, 4444)) != note.commitment
    c = note.commitment
    assert nullifier(0, c, 4444) == poseidon([0, c, 4444])
    assert nullifier(0, c, 4444) != nullifier(1, c, 4444)


def test_nullifier_needs_delta():
    # without delta, guessing over a small space finds nothing
    c = commitment_of(1, 99, 5)
    target = nullifier(3, c, 10**30 + 7)
    assert all(nullifier(3, c, d) != target for d in range(2000))


def test_note_validation():
    with pytest.raises(ValidationError):
        Note(1 << 24, 1, 1, 1)
    with pytest.raises(ValidationError):
        Note(1, 1, -1, 1)
    with pytest.raises(ValidationError):
        Note(1, 1, 1 << 248, 1)


def test_empty_root_structure():
    tree = MerkleTree(2)
    Z = poseidon([0, 0, 0])
    assert ZERO_LEAF == Z
    assert tree.root() == poseidon([poseidon([Z, Z]), poseidon([Z, Z])])
    assert zero_hashes(20)[20] == empty_root(20) == MerkleTree(20).root()


def test_append_open_verify_and_corruption():
    tree = MerkleTree(8)
    rng = random.Random(1)
    for _ in range(40):
        i = tree.append(rng.randrange(1, 1 << 200))
        o = tree.open(i)
        c = tree.leaves[i]
        assert verify_opening(tree.root(), i, c, o)
        assert merkle_root(i, c, o) == tree.root()
        bad = list(o)
        bad[rng.randrange(len(bad))] ^= 1
        assert not verify_opening(tree.root(), i, c, bad)
        assert not verify_opening(tree.root(), i ^ 1, c, o)
        assert not verify_opening(tree.root(), i, c, o, depth=7)


def test_open_out_of_range():
    tree = MerkleTree(3)
    tree.append(5)
    with pytest.raises(IndexError):
        tree.open(1)


def test_capacity():
    tree = MerkleTree(3)
    roots = {tree.root()}
    for k in range(8):
        assert tree.append(k + 100) == k
        roots.add(tree.root())
    assert len(roots) == 9
    with pytest.raises(CapacityError):
        tree.append(1)
    assert len(tree.leaves) == 8


def test_root_history():
    ledger = NoteLedger(depth=8, history=4)
    first = ledger.root()
    assert ledger.root_history_contains(first)
    roots = []
    for k in range(4):
        ledger.append(k + 1)
        roots.append(ledger.root())
    assert not ledger.root_history_contains(first)
    assert all(ledger.root_history_contains(r) for r in roots)
    assert not ledger.root_history_contains(12345)
    h = RootHistory(2)
    for r in (1, 2, 3):
        h.push(r)
    assert list(h) == [2, 3] and h.latest == 3


def test_old_openings_verify_against_their_roots():
    ledger = NoteLedger(depth=6, history=64)
    saved = []
    for k in range(20):
        i = ledger.append(1000 + k)
        saved.append((ledger.root(), i, 1000 + k, ledger.open(i)))
    for root, i, c, o in saved:
        assert ledger.root_history_contains(root)
        assert verify_opening(root, i, c, o)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(0, 2**250), min_size=1, max_size=12))
def test_root_matches_reference(leaves):
    tree = MerkleTree(4)
    for c in leaves:
        tree.append(c)
    for i, c in enumerate(leaves):
        assert merkle_root(i, c, tree.open(i)) == tree.root()
