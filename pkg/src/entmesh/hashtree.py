"""Binary Merkle trees over byte-string leaves.

Leaf and interior hashes are domain-separated (``0x00`` / ``0x01`` prefixes)
so leaf bytes can never collide with an interior node preimage.  Trees whose
leaf count is not a power of two split at the largest power of two strictly
below the count; the unpaired remainder is promoted, never duplicated.  This
is the same shape discipline used by transparency logs, so inclusion proofs
stay stable when new leaves are appended on the right.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Callable, Iterable, Optional, Sequence

__all__ = [
    "DIGEST_SIZE",
    "Digest",
    "EmptyTreeError",
    "HashFn",
    "IndexOutOfRangeError",
    "InclusionProof",
    "MerkleTree",
    "Side",
    "ZERO_DIGEST",
    "fold_root",
    "leaf_hash",
    "node_hash",
    "root",
    "sha256",
    "verify_inclusion",
]

DIGEST_SIZE = 32
_LEAF_PREFIX = b"\x00"
_NODE_PREFIX = b"\x01"

HashFn = Callable[[bytes], bytes]


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


DEFAULT_HASH: HashFn = sha256


class Digest(bytes):
    """A 32-byte hash value.

    Subclasses ``bytes`` so digests sort bytewise and hash/compare like any
    other byte string; construction enforces the fixed size.  Text output
    should always use :meth:`hex` (lowercase).
    """

    __slots__ = ()

    def __new__(cls, value: bytes) -> "Digest":
        if len(value) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(value)}")
        return super().__new__(cls, value)

    def __repr__(self) -> str:
        return f"Digest({self.hex()})"


ZERO_DIGEST = Digest(b"\x00" * DIGEST_SIZE)


class EmptyTreeError(ValueError):
    """A tree needs at least one leaf."""


class IndexOutOfRangeError(IndexError):
    """Requested leaf index is not inside the tree."""


class Side(IntEnum):
    """Which side of the running hash an audit-path sibling sits on."""

    LEFT = 0
    RIGHT = 1


def leaf_hash(leaf: bytes, hash_fn: HashFn = DEFAULT_HASH) -> Digest:
    """Hash of a single leaf: H(0x00 || leaf)."""
    return Digest(hash_fn(_LEAF_PREFIX + leaf))


def node_hash(left: bytes, right: bytes, hash_fn: HashFn = DEFAULT_HASH) -> Digest:
    """Hash of an interior node: H(0x01 || left || right)."""
    return Digest(hash_fn(_NODE_PREFIX + left + right))


def _split_point(n: int) -> int:
    # Largest power of two strictly less than n (n >= 2).
    return 1 << ((n - 1).bit_length() - 1)


def _range_root(leaves: Sequence[bytes], hash_fn: HashFn) -> Digest:
    n = len(leaves)
    if n == 1:
        return leaf_hash(leaves[0], hash_fn)
    k = _split_point(n)
    return node_hash(_range_root(leaves[:k], hash_fn), _range_root(leaves[k:], hash_fn), hash_fn)


def root(leaves: Sequence[bytes], hash_fn: HashFn = DEFAULT_HASH) -> Digest:
    if len(leaves) == 0:
        raise EmptyTreeError("cannot build a tree with no leaves")
    return _range_root(leaves, hash_fn)


@dataclass(frozen=True)
class InclusionProof:
    """Audit path for one leaf.

    ``audit_path`` is ordered bottom-up: the first sibling combines directly
    with the leaf hash.  ``tree_size`` pins the shape; verification rejects
    any path whose structure does not match (leaf_index, tree_size).
    """

    leaf_index: int
    audit_path: tuple[tuple[Side, Digest], ...]
    tree_size: int


def _path_sides(index: int, size: int) -> list[Side]:
    # The side sequence is fully determined by (index, size).
    sides: list[Side] = []
    lo, hi = 0, size
    while hi - lo > 1:
        k = _split_point(hi - lo)
        if index < lo + k:
            sides.append(Side.RIGHT)
            hi = lo + k
        else:
            sides.append(Side.LEFT)
            lo = lo + k
    sides.reverse()
    return sides


class MerkleTree:
    """An immutable tree over an ordered list of byte-string leaves."""

    __slots__ = ("_leaves", "_hash_fn", "_root")

    def __init__(self, leaves: Iterable[bytes], hash_fn: HashFn = DEFAULT_HASH):
        self._leaves: tuple[bytes, ...] = tuple(bytes(x) for x in leaves)
        if not self._leaves:
            raise EmptyTreeError("cannot build a tree with no leaves")
        self._hash_fn = hash_fn
        self._root: Optional[Digest] = None

    @property
    def leaves(self) -> tuple[bytes, ...]:
        return self._leaves

    @property
    def size(self) -> int:
        return len(self._leaves)

    @property
    def root(self) -> Digest:
        if self._root is None:
            self._root = _range_root(self._leaves, self._hash_fn)
        return self._root

    def prove_inclusion(self, index: int) -> InclusionProof:
        if not 0 <= index < self.size:
            raise IndexOutOfRangeError(f"leaf index {index} not in tree of size {self.size}")
        path: list[tuple[Side, Digest]] = []
        leaves = self._leaves
        lo, hi = 0, self.size
        # Collect siblings top-down, then reverse so the path reads bottom-up.
        while hi - lo > 1:
            k = _split_point(hi - lo)
            if index < lo + k:
                path.append((Side.RIGHT, _range_root(leaves[lo + k : hi], self._hash_fn)))
                hi = lo + k
            else:
                path.append((Side.LEFT, _range_root(leaves[lo : lo + k], self._hash_fn)))
                lo = lo + k
        path.reverse()
        return InclusionProof(leaf_index=index, audit_path=tuple(path), tree_size=self.size)


def fold_root(leaf: bytes, proof: InclusionProof, hash_fn: HashFn = DEFAULT_HASH) -> Optional[Digest]:
    """Fold a leaf up an audit path; return the implied root.

    Returns None when the proof is structurally invalid for its claimed
    (leaf_index, tree_size): every serialized field must be load-bearing, so
    a path whose length or side sequence disagrees with the claimed position
    is rejected outright rather than folded anyway.
    """
    if not isinstance(proof.leaf_index, int) or not isinstance(proof.tree_size, int):
        return None
    if proof.tree_size < 1 or not 0 <= proof.leaf_index < proof.tree_size:
        return None
    expected = _path_sides(proof.leaf_index, proof.tree_size)
    if len(proof.audit_path) != len(expected):
        return None
    current = leaf_hash(leaf, hash_fn)
    for (side, sibling), want in zip(proof.audit_path, expected):
        if side != want or len(sibling) != DIGEST_SIZE:
            return None
        if side == Side.LEFT:
            current = node_hash(sibling, current, hash_fn)
        else:
            current = node_hash(current, sibling, hash_fn)
    return current


def verify_inclusion(
    leaf: bytes,
    proof: InclusionProof,
    expected_root: bytes,
    hash_fn: HashFn = DEFAULT_HASH,
) -> bool:
    """True iff the proof places ``leaf`` in a tree with ``expected_root``.

    Never raises on malformed input: bad proofs simply verify false.
    """
    try:
        implied = fold_root(leaf, proof, hash_fn)
    except Exception:
        return False
    return implied is not None and implied == expected_root
