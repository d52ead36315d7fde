"""Notes, commitments, nullifiers and the append-only Poseidon Merkle tree."""

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

from .errors import CapacityError, ValidationError
from .primitives import FIELD_PRIME, poseidon

ASSET_BITS = 24
VALUE_BITS = 248
DEFAULT_DEPTH = 20
DEFAULT_HISTORY = 64
ZERO_LEAF = poseidon((0, 0, 0))


@dataclass(frozen=True)
class Note:
    asset: int
    x: int
    value: int
    delta: int

    def __post_init__(self):
        check_asset(self.asset)
        check_value(self.value)
        if not 0 <= self.x < FIELD_PRIME or not 0 <= self.delta < FIELD_PRIME:
            raise ValidationError("note field element out of range")

    @property
    def commitment(self) -> int:
        return commitment(self)


def check_asset(asset: int) -> int:
    if not isinstance(asset, int) or not 0 <= asset < 1 << ASSET_BITS:
        raise ValidationError(f"asset id must fit in {ASSET_BITS} bits")
    return asset


def check_value(value: int) -> int:
    if not isinstance(value, int) or not 0 <= value < 1 << VALUE_BITS:
        raise ValidationError(f"value must be a non-negative {VALUE_BITS}-bit integer")
    return value


def commitment_of(asset: int, x: int, value: int) -> int:
    return poseidon((asset, x, value))


def commitment(note: Note) -> int:
    return commitment_of(note.asset, note.x, note.value)


def nullifier(leaf_index: int, c: int, delta: int) -> int:
    return poseidon((leaf_index, c, delta))


def _hash_pair(left: int, right: int) -> int:
    return poseidon((left, right))


@lru_cache(maxsize=None)
def zero_hashes(depth: int) -> tuple:
    zeros = [ZERO_LEAF]
    for _ in range(depth):
        zeros.append(_hash_pair(zeros[-1], zeros[-1]))
    return tuple(zeros)


class MerkleTree:
    """Append-only binary Poseidon tree.

    Every filled node is kept per level so appends and openings both cost
    ``depth`` hashes.
    """

    def __init__(self, depth: int = DEFAULT_DEPTH):
        if not 1 <= depth <= 32:
            raise ValidationError("tree depth must be in 1..32")
        self.depth = depth
        self.zeros = zero_hashes(depth)
        self.levels = [[] for _ in range(depth + 1)]

    @property
    def capacity(self) -> int:
        return 1 << self.depth

    @property
    def leaves(self) -> list:
        return self.levels[0]

    def __len__(self) -> int:
        return len(self.levels[0])

    def root(self) -> int:
        top = self.levels[self.depth]
        return top[0] if top else self.zeros[self.depth]

    def append(self, c: int) -> int:
        if len(self) >= self.capacity:
            raise CapacityError(f"tree of depth {self.depth} is full")
        if not 0 <= c < FIELD_PRIME:
            raise ValidationError("leaf out of range")
        index = i = len(self)
        node = c
        self.levels[0].append(c)
        for lvl in range(self.depth):
            if i & 1:
                node = _hash_pair(self.levels[lvl][i - 1], node)
            else:
                node = _hash_pair(node, self.zeros[lvl])
            i >>= 1
            above = self.levels[lvl + 1]
            if i < len(above):
                above[i] = node
            else:
                above.append(node)
        return index

    def open(self, index: int) -> list:
        """Sibling hashes from leaf level upwards."""
        if not 0 <= index < len(self):
            raise IndexError(f"leaf {index} out of range")
        path = []
        for lvl in range(self.depth):
            sib = index ^ 1
            level = self.levels[lvl]
            path.append(level[sib] if sib < len(level) else self.zeros[lvl])
            index >>= 1
        return path


def tree_root_from_opening(index: int, c: int, opening) -> int:
    node = c
    for sibling in opening:
        node = _hash_pair(sibling, node) if index & 1 else _hash_pair(node, sibling)
        index >>= 1
    return node


def verify_opening(root: int, index: int, c: int, opening, depth: int = None) -> bool:
    opening = list(opening)
    if depth is not None and len(opening) != depth:
        return False
    if not 0 <= index < 1 << len(opening):
        return False
    try:
        return tree_root_from_opening(index, c, opening) == root
    except (ValueError, TypeError):
        return False


class RootHistory:
    """The most recent ``capacity`` roots, evicted first-in first-out."""

    def __init__(self, capacity: int = DEFAULT_HISTORY):
        if capacity < 1:
            raise ValidationError("root history needs capacity >= 1")
        self.capacity = capacity
        self._roots = deque(maxlen=capacity)

    def push(self, root: int) -> None:
        self._roots.append(root)

    def __contains__(self, root) -> bool:
        return root in self._roots

    def __iter__(self):
        return iter(self._roots)

    def __len__(self) -> int:
        return len(self._roots)

    @property
    def latest(self) -> int:
        return self._roots[-1]


class NoteLedger:
    """Tree plus its window of recent roots."""

    def __init__(self, depth: int = DEFAULT_DEPTH, history: int = DEFAULT_HISTORY):
        self.tree = MerkleTree(depth)
        self.history = RootHistory(history)
        self.history.push(self.tree.root())

    def append(self, c: int) -> int:
        index = self.tree.append(c)
        self.history.push(self.tree.root())
        return index

    def root(self) -> int:
        return self.tree.root()

    def open(self, index: int) -> list:
        return self.tree.open(index)

    def root_history_contains(self, root: int) -> bool:
        return root in self.history

    def __len__(self) -> int:
        return len(self.tree)
