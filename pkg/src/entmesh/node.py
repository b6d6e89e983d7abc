"""Single-writer node state machines.

Each node advances in discrete rounds.  A round's state is flattened into a
fixed leaf layout, committed as a Merkle root, and signed.  The first leaf
of every tree is the digest of the previous round's commitment, so the
per-round roots form a tamper-evident chain: substituting any historical
round breaks verification at the next one.

Leaf layout (tags distinguish every leaf kind; see docs/FORMATS.md):

    [0] prev-commitment digest     (zeros at round 0)
    [1] payload content address    (root of the payload expression tree)
    [2] manifest                   (sorted ids this node submits its root to)
    [.] one leaf per entangled submission, sorted
    [.] one leaf per evidence receipt, sorted
    [.] one leaf per credential digest, sorted        (optional)
    [.] revocation list                               (credential issuers only)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .hashtree import (
    DEFAULT_HASH,
    Digest,
    HashFn,
    InclusionProof,
    MerkleTree,
    ZERO_DIGEST,
    verify_inclusion,
)
from .keys import DEFAULT_SCHEME, KeyPair, NodeId, SignatureScheme, node_id_for_key
from .sexpr import Expr, encode_tree
from .wire import Reader, WireError, Writer, encode_inclusion_proof, read_inclusion_proof

__all__ = [
    "ChainEntry",
    "Commitment",
    "InvariantViolationError",
    "KeyDirectory",
    "Node",
    "NodeRecord",
    "NotEntangledError",
    "Receipt",
    "RoundState",
    "StaleSubmissionError",
    "Submission",
    "Verdict",
    "build_round",
    "commitment_digest",
    "round_leaves",
    "verify_chain_entries",
    "verify_commitment_chain",
]

LEAF_PREV = 0x01
LEAF_PAYLOAD = 0x02
LEAF_MANIFEST = 0x03
LEAF_ENTANGLED = 0x04
LEAF_EVIDENCE = 0x05
LEAF_CREDENTIAL = 0x06
LEAF_REVOCATION = 0x07

# A holder may lag its issuer by at most this many rounds at receipt time.
STALE_THRESHOLD = 1


class InvariantViolationError(ValueError):
    pass


class StaleSubmissionError(ValueError):
    pass


class NotEntangledError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    """Boolean verification outcome plus a machine-readable reason."""

    ok: bool
    reason: Optional[str] = None
    detail: Optional[str] = None

    def __bool__(self) -> bool:
        return self.ok

    @staticmethod
    def passed() -> "Verdict":
        return Verdict(True)

    @staticmethod
    def failed(reason: str, detail: Optional[str] = None) -> "Verdict":
        return Verdict(False, reason, detail)


def _signing_message(node_id: NodeId, round_no: int, root: Digest) -> bytes:
    return Writer().digest(node_id).u64(round_no).digest(root).getvalue()


def _commitment_message(node_id: NodeId, round_no: int, root: Digest, leaf_count: int) -> bytes:
    return Writer().digest(node_id).u64(round_no).digest(root).u64(leaf_count).getvalue()


@dataclass(frozen=True)
class Commitment:
    """A signed statement: at ``round``, this node's tree had ``leaf_count``
    leaves and root ``root``.

    The leaf count is signed alongside the root: a bare root does not pin
    the tree's shape, so inclusion proofs are checked against both.
    """

    node_id: NodeId
    round: int
    root: Digest
    leaf_count: int
    signature: bytes

    def message(self) -> bytes:
        return _commitment_message(self.node_id, self.round, self.root, self.leaf_count)

    def to_bytes(self) -> bytes:
        return (
            Writer()
            .digest(self.node_id)
            .u64(self.round)
            .digest(self.root)
            .u64(self.leaf_count)
            .blob(self.signature)
            .getvalue()
        )

    @staticmethod
    def read(r: Reader) -> "Commitment":
        return Commitment(
            node_id=r.digest(),
            round=r.u64(),
            root=r.digest(),
            leaf_count=r.u64(),
            signature=r.blob(max_len=256),
        )

    @staticmethod
    def from_bytes(data: bytes) -> "Commitment":
        r = Reader(data)
        c = Commitment.read(r)
        r.expect_eof()
        return c


def commitment_digest(commitment: Commitment, hash_fn: HashFn = DEFAULT_HASH) -> Digest:
    return Digest(hash_fn(commitment.to_bytes()))


@dataclass(frozen=True)
class Submission:
    """A holder's signed root, as handed to an issuer for entanglement."""

    holder_id: NodeId
    holder_round: int
    holder_root: Digest
    signature: bytes

    def message(self) -> bytes:
        return _signing_message(self.holder_id, self.holder_round, self.holder_root)

    def to_bytes(self) -> bytes:
        return (
            Writer()
            .digest(self.holder_id)
            .u64(self.holder_round)
            .digest(self.holder_root)
            .blob(self.signature)
            .getvalue()
        )

    @staticmethod
    def read(r: Reader) -> "Submission":
        return Submission(holder_id=r.digest(), holder_round=r.u64(), holder_root=r.digest(), signature=r.blob(max_len=256))

    @staticmethod
    def from_bytes(data: bytes) -> "Submission":
        r = Reader(data)
        sub = Submission.read(r)
        r.expect_eof()
        return sub

    def leaf_bytes(self) -> bytes:
        return bytes([LEAF_ENTANGLED]) + self.to_bytes()


@dataclass(frozen=True)
class Receipt:
    """An issuer's acknowledgement that a holder root is entangled.

    Carries the issuer's full commitment, the inclusion proof of the
    submission leaf, and a proof of the issuer's previous-commitment leaf,
    so a receipt alone lets the holder check the issuer's chain continuity
    round over round.  Receipts are retained as evidence leaves in the
    holder's tree two rounds after the submitted root's round.
    """

    holder_id: NodeId
    holder_round: int
    holder_root: Digest
    holder_signature: bytes
    issuer_commitment: Commitment
    inclusion: InclusionProof
    prev_digest: Digest
    prev_inclusion: InclusionProof

    @property
    def issuer_id(self) -> NodeId:
        return self.issuer_commitment.node_id

    @property
    def issuer_round(self) -> int:
        return self.issuer_commitment.round

    def submission(self) -> Submission:
        return Submission(
            holder_id=self.holder_id,
            holder_round=self.holder_round,
            holder_root=self.holder_root,
            signature=self.holder_signature,
        )

    def to_bytes(self) -> bytes:
        return (
            Writer()
            .digest(self.holder_id)
            .u64(self.holder_round)
            .digest(self.holder_root)
            .blob(self.holder_signature)
            .blob(self.issuer_commitment.to_bytes())
            .blob(encode_inclusion_proof(self.inclusion))
            .digest(self.prev_digest)
            .blob(encode_inclusion_proof(self.prev_inclusion))
            .getvalue()
        )

    @staticmethod
    def read(r: Reader) -> "Receipt":
        holder_id = r.digest()
        holder_round = r.u64()
        holder_root = r.digest()
        holder_signature = r.blob(max_len=256)
        commitment = Commitment.from_bytes(r.blob(max_len=4096))
        inner = Reader(r.blob(max_len=1 << 16))
        inclusion = read_inclusion_proof(inner)
        inner.expect_eof()
        prev_digest = r.digest()
        inner = Reader(r.blob(max_len=1 << 16))
        prev_inclusion = read_inclusion_proof(inner)
        inner.expect_eof()
        return Receipt(
            holder_id=holder_id,
            holder_round=holder_round,
            holder_root=holder_root,
            holder_signature=holder_signature,
            issuer_commitment=commitment,
            inclusion=inclusion,
            prev_digest=prev_digest,
            prev_inclusion=prev_inclusion,
        )

    @staticmethod
    def from_bytes(data: bytes) -> "Receipt":
        r = Reader(data)
        rcpt = Receipt.read(r)
        r.expect_eof()
        return rcpt

    def leaf_bytes(self) -> bytes:
        return bytes([LEAF_EVIDENCE]) + self.to_bytes()


def _manifest_leaf(manifest: Sequence[NodeId]) -> bytes:
    w = Writer().u8(LEAF_MANIFEST).u32(len(manifest))
    for node_id in manifest:
        w.digest(node_id)
    return w.getvalue()


def _revocation_leaf(revoked: Sequence[Digest]) -> bytes:
    w = Writer().u8(LEAF_REVOCATION).u32(len(revoked))
    for digest in revoked:
        w.digest(digest)
    return w.getvalue()


def parse_manifest_leaf(leaf: bytes) -> tuple[NodeId, ...]:
    r = Reader(leaf)
    if r.u8() != LEAF_MANIFEST:
        raise WireError("not a manifest leaf")
    count = r.u32()
    if count > 1 << 20:
        raise WireError("manifest too large")
    ids = tuple(r.digest() for _ in range(count))
    r.expect_eof()
    return ids


def parse_revocation_leaf(leaf: bytes) -> tuple[Digest, ...]:
    r = Reader(leaf)
    if r.u8() != LEAF_REVOCATION:
        raise WireError("not a revocation leaf")
    count = r.u32()
    if count > 1 << 20:
        raise WireError("revocation list too large")
    digests = tuple(r.digest() for _ in range(count))
    r.expect_eof()
    return digests


@dataclass(frozen=True)
class RoundState:
    """Everything a node commits to in one round."""

    node_id: NodeId
    round: int
    prev_commitment_digest: Digest
    payload: Expr
    manifest: tuple[NodeId, ...]
    entangled: tuple[Submission, ...]
    evidence: tuple[Receipt, ...]
    credentials: tuple[Digest, ...] = ()
    revocation: Optional[tuple[Digest, ...]] = None

    @property
    def entangled_roots(self) -> tuple[tuple[NodeId, Digest], ...]:
        return tuple((s.holder_id, s.holder_root) for s in self.entangled)


def _require_sorted_unique(items: Sequence, what: str) -> None:
    for a, b in zip(items, items[1:]):
        if not a < b:
            raise InvariantViolationError(f"{what} must be strictly ascending")


def validate_state(state: RoundState) -> None:
    if state.round < 0:
        raise InvariantViolationError("round must be non-negative")
    if state.round == 0 and state.prev_commitment_digest != ZERO_DIGEST:
        raise InvariantViolationError("round 0 must chain from the zero digest")
    _require_sorted_unique(state.manifest, "manifest")
    _require_sorted_unique([(s.holder_id, s.holder_round) for s in state.entangled], "entangled submissions")
    _require_sorted_unique([(r.issuer_id, r.holder_round) for r in state.evidence], "evidence receipts")
    _require_sorted_unique(state.credentials, "credential digests")
    if state.revocation is not None:
        _require_sorted_unique(state.revocation, "revocation list")


def round_leaves(state: RoundState, hash_fn: HashFn = DEFAULT_HASH) -> list[bytes]:
    """Flatten a round state into its normative leaf sequence."""
    leaves = [
        bytes([LEAF_PREV]) + state.prev_commitment_digest,
        bytes([LEAF_PAYLOAD]) + encode_tree(state.payload, hash_fn).root,
        _manifest_leaf(state.manifest),
    ]
    leaves.extend(s.leaf_bytes() for s in state.entangled)
    leaves.extend(r.leaf_bytes() for r in state.evidence)
    leaves.extend(bytes([LEAF_CREDENTIAL]) + d for d in state.credentials)
    if state.revocation is not None:
        leaves.append(_revocation_leaf(state.revocation))
    return leaves


MANIFEST_LEAF_INDEX = 2


def entangled_leaf_index(state: RoundState, holder_id: NodeId, holder_round: int) -> int:
    for pos, sub in enumerate(state.entangled):
        if sub.holder_id == holder_id and sub.holder_round == holder_round:
            return 3 + pos
    raise NotEntangledError(f"no submission from {holder_id.hex()} round {holder_round}")


def evidence_leaf_index(state: RoundState, issuer_id: NodeId, holder_round: int) -> int:
    for pos, rcpt in enumerate(state.evidence):
        if rcpt.issuer_id == issuer_id and rcpt.holder_round == holder_round:
            return 3 + len(state.entangled) + pos
    raise NotEntangledError(f"no evidence from {issuer_id.hex()} for round {holder_round}")


def credential_leaf_index(state: RoundState, digest: Digest) -> int:
    base = 3 + len(state.entangled) + len(state.evidence)
    for pos, d in enumerate(state.credentials):
        if d == digest:
            return base + pos
    raise NotEntangledError(f"credential {digest.hex()} not committed in round {state.round}")


def revocation_leaf_index(state: RoundState) -> int:
    if state.revocation is None:
        raise NotEntangledError("state carries no revocation list")
    return 3 + len(state.entangled) + len(state.evidence) + len(state.credentials)


def build_round(state: RoundState, keypair: KeyPair, hash_fn: HashFn = DEFAULT_HASH) -> tuple[MerkleTree, Commitment]:
    """Build and sign one round.  Deterministic in the state's field values."""
    validate_state(state)
    tree = MerkleTree(round_leaves(state, hash_fn), hash_fn)
    signature = keypair.sign(_commitment_message(state.node_id, state.round, tree.root, tree.size))
    return tree, Commitment(
        node_id=state.node_id, round=state.round, root=tree.root, leaf_count=tree.size, signature=signature
    )


class KeyDirectory:
    """Verification keys by node id, with round-scoped rebinding.

    A node id is the fingerprint of its genesis key.  Key recovery rebinds
    the id to a new key from a given round onward without changing the id,
    so old commitments still verify under the key that signed them.
    """

    def __init__(self, scheme: SignatureScheme = DEFAULT_SCHEME):
        self.scheme = scheme
        self._bindings: dict[NodeId, list[tuple[int, bytes]]] = {}

    def register(self, node_id: NodeId, verify_key: bytes) -> None:
        if node_id_for_key(verify_key) != node_id:
            raise InvariantViolationError("node id is not the fingerprint of the key")
        self._bindings[node_id] = [(0, bytes(verify_key))]

    def rebind(self, node_id: NodeId, verify_key: bytes, from_round: int) -> None:
        bindings = self._bindings.setdefault(node_id, [])
        bindings.append((from_round, bytes(verify_key)))
        bindings.sort(key=lambda item: item[0])

    def key_at(self, node_id: NodeId, round_no: int) -> Optional[bytes]:
        bindings = self._bindings.get(node_id)
        if not bindings:
            return None
        key = None
        for from_round, vk in bindings:
            if from_round <= round_no:
                key = vk
        return key

    def known_ids(self) -> list[NodeId]:
        return sorted(self._bindings)

    def bindings_of(self, node_id: NodeId) -> tuple[tuple[int, bytes], ...]:
        return tuple(self._bindings.get(node_id, ()))

    def verify_commitment(self, c: Commitment) -> bool:
        key = self.key_at(c.node_id, c.round)
        return key is not None and self.scheme.verify(key, c.message(), c.signature)

    def verify_submission(self, s: Submission) -> bool:
        key = self.key_at(s.holder_id, s.holder_round)
        return key is not None and self.scheme.verify(key, s.message(), s.signature)


def verify_commitment_chain(
    commitments: Sequence[Commitment],
    trees: Sequence[MerkleTree],
    directory: KeyDirectory,
    hash_fn: HashFn = DEFAULT_HASH,
) -> Verdict:
    """Check a contiguous run of (commitment, tree) pairs.

    Reasons: BadSignature (a commitment fails under the bound key),
    RoundGap (rounds are not consecutive), ChainBreak (a tree's first leaf
    does not match the previous commitment's digest, or a root disagrees
    with its commitment).
    """
    if len(commitments) != len(trees) or not commitments:
        return Verdict.failed("ChainBreak", "empty or mismatched inputs")
    previous: Optional[Commitment] = None
    for commitment, tree in zip(commitments, trees):
        if previous is not None and commitment.round != previous.round + 1:
            return Verdict.failed("RoundGap", f"round {commitment.round} after {previous.round}")
        if not directory.verify_commitment(commitment):
            return Verdict.failed("BadSignature", f"round {commitment.round}")
        if tree.root != commitment.root or tree.size != commitment.leaf_count:
            return Verdict.failed("ChainBreak", f"tree disagrees with commitment at round {commitment.round}")
        expect = commitment_digest(previous, hash_fn) if previous is not None else None
        first = tree.leaves[0]
        if len(first) != 33 or first[0] != LEAF_PREV:
            return Verdict.failed("ChainBreak", f"bad first leaf at round {commitment.round}")
        if previous is not None and first[1:] != expect:
            return Verdict.failed("ChainBreak", f"round {commitment.round} does not chain")
        if previous is None and commitment.round == 0 and first[1:] != ZERO_DIGEST:
            return Verdict.failed("ChainBreak", "round 0 must chain from the zero digest")
        previous = commitment
    return Verdict.passed()


@dataclass(frozen=True)
class ChainEntry:
    """A commitment plus the proof of its tree's first (prev-digest) leaf.

    The minimal witness for chain contiguity when full trees are not
    shipped: consecutive entries are linked by checking each entry's
    prev digest against the digest of the previous entry's commitment.
    """

    commitment: Commitment
    prev_digest: Digest
    first_leaf_proof: InclusionProof

    def to_bytes(self) -> bytes:
        return (
            Writer()
            .blob(self.commitment.to_bytes())
            .digest(self.prev_digest)
            .blob(encode_inclusion_proof(self.first_leaf_proof))
            .getvalue()
        )

    @staticmethod
    def read(r: Reader) -> "ChainEntry":
        commitment = Commitment.from_bytes(r.blob(max_len=4096))
        prev_digest = r.digest()
        inner = Reader(r.blob(max_len=1 << 16))
        proof = read_inclusion_proof(inner)
        inner.expect_eof()
        return ChainEntry(commitment=commitment, prev_digest=prev_digest, first_leaf_proof=proof)


def chain_entry_for(record: "NodeRecord", hash_fn: HashFn = DEFAULT_HASH) -> ChainEntry:
    if record.state is None or record.tree is None:
        raise InvariantViolationError("record was pruned; no tree available")
    return ChainEntry(
        commitment=record.commitment,
        prev_digest=record.state.prev_commitment_digest,
        first_leaf_proof=record.tree.prove_inclusion(0),
    )


def verify_chain_entries(
    entries: Sequence[ChainEntry],
    directory: KeyDirectory,
    hash_fn: HashFn = DEFAULT_HASH,
) -> Verdict:
    """Tree-free variant of verify_commitment_chain, used inside proofs."""
    if not entries:
        return Verdict.failed("ChainBreak", "empty chain")
    previous: Optional[Commitment] = None
    for entry in entries:
        c = entry.commitment
        if previous is not None and c.round != previous.round + 1:
            return Verdict.failed("RoundGap", f"round {c.round} after {previous.round}")
        if not directory.verify_commitment(c):
            return Verdict.failed("BadSignature", f"round {c.round}")
        if entry.first_leaf_proof.leaf_index != 0 or entry.first_leaf_proof.tree_size != c.leaf_count:
            return Verdict.failed("ChainBreak", f"first-leaf proof at wrong position, round {c.round}")
        leaf = bytes([LEAF_PREV]) + entry.prev_digest
        if not verify_inclusion(leaf, entry.first_leaf_proof, c.root, hash_fn):
            return Verdict.failed("ChainBreak", f"first leaf unproven at round {c.round}")
        if previous is not None and entry.prev_digest != commitment_digest(previous, hash_fn):
            return Verdict.failed("ChainBreak", f"round {c.round} does not chain")
        if previous is None and c.round == 0 and entry.prev_digest != ZERO_DIGEST:
            return Verdict.failed("ChainBreak", "round 0 must chain from the zero digest")
        previous = c
    return Verdict.passed()


@dataclass
class NodeRecord:
    """One committed round.  Pruned records keep only root and commitment."""

    commitment: Commitment
    state: Optional[RoundState] = None
    tree: Optional[MerkleTree] = None
    received_receipts: tuple[Receipt, ...] = ()

    @property
    def round(self) -> int:
        return self.commitment.round

    @property
    def root(self) -> Digest:
        return self.commitment.root


class Node:
    """A single-writer state machine: queue inputs, build, exchange, repeat.

    The engine (or a test) drives the cycle per round:
      1. ``build`` the round tree from queued submissions/receipts,
      2. ``make_submission`` and deliver to the manifest partners,
      3. partners ``issue_receipt`` against their next tree,
      4. ``receive_receipt`` queues evidence for the round after next.
    """

    def __init__(
        self,
        label: str,
        keypair: KeyPair,
        hash_fn: HashFn = DEFAULT_HASH,
        prune_states: bool = False,
    ):
        self.label = label
        self.keypair = keypair
        self.node_id: NodeId = keypair.node_id
        self.hash_fn = hash_fn
        self.prune_states = prune_states
        self.manifest: tuple[NodeId, ...] = ()
        self.records: list[NodeRecord] = []
        self._pending_submissions: dict[tuple[NodeId, int], Submission] = {}
        self._pending_receipts: dict[tuple[NodeId, int], Receipt] = {}
        self._receipts_this_round: list[Receipt] = []
        self.receipt_log: dict[tuple[NodeId, int], Receipt] = {}

    @property
    def next_round(self) -> int:
        return len(self.records)

    @property
    def latest(self) -> NodeRecord:
        if not self.records:
            raise InvariantViolationError("node has not built any round yet")
        return self.records[-1]

    def record_at(self, round_no: int) -> NodeRecord:
        if not 0 <= round_no < len(self.records):
            raise InvariantViolationError(f"no record for round {round_no}")
        return self.records[round_no]

    def prev_digest(self) -> Digest:
        if not self.records:
            return ZERO_DIGEST
        return commitment_digest(self.records[-1].commitment, self.hash_fn)

    def set_manifest(self, ids: Iterable[NodeId]) -> None:
        self.manifest = tuple(sorted(set(ids)))

    def compose_state(
        self,
        payload: Expr,
        credentials: Sequence[Digest] = (),
        revocation: Optional[Sequence[Digest]] = None,
    ) -> RoundState:
        return RoundState(
            node_id=self.node_id,
            round=self.next_round,
            prev_commitment_digest=self.prev_digest(),
            payload=payload,
            manifest=self.manifest,
            entangled=tuple(self._pending_submissions[k] for k in sorted(self._pending_submissions)),
            evidence=tuple(self._pending_receipts[k] for k in sorted(self._pending_receipts)),
            credentials=tuple(sorted(credentials)),
            revocation=None if revocation is None else tuple(sorted(revocation)),
        )

    def build(
        self,
        payload: Expr,
        credentials: Sequence[Digest] = (),
        revocation: Optional[Sequence[Digest]] = None,
    ) -> NodeRecord:
        state = self.compose_state(payload, credentials, revocation)
        tree, commitment = build_round(state, self.keypair, self.hash_fn)
        record = NodeRecord(commitment=commitment, state=state, tree=tree)
        self.records.append(record)
        self._pending_submissions.clear()
        self._pending_receipts.clear()
        return record

    def attach_received(self) -> None:
        # Called at round end: pin the receipts that arrived during this
        # round onto the round's record so ledgers capture them verbatim.
        if self.records:
            self.records[-1].received_receipts = tuple(self._receipts_this_round)
        self._receipts_this_round = []

    def prune_record(self, round_no: int) -> None:
        # Trust-anchor storage mode: keep only the root and the commitment.
        record = self.record_at(round_no)
        record.state = None
        record.tree = None

    def make_submission(self) -> Submission:
        latest = self.latest
        signature = self.keypair.sign(_signing_message(self.node_id, latest.round, latest.root))
        return Submission(
            holder_id=self.node_id, holder_round=latest.round, holder_root=latest.root, signature=signature
        )

    def receive_submission(self, sub: Submission, directory: KeyDirectory) -> Verdict:
        if not directory.verify_submission(sub):
            return Verdict.failed("BadSignature", f"submission from {sub.holder_id.hex()}")
        self._pending_submissions[(sub.holder_id, sub.holder_round)] = sub
        return Verdict.passed()

    def issue_receipt(self, sub: Submission) -> Receipt:
        """Acknowledge a submission entangled in the current round's tree."""
        record = self.latest
        if record.state is None or record.tree is None:
            raise InvariantViolationError("cannot issue receipts from a pruned record")
        if record.round - sub.holder_round > STALE_THRESHOLD:
            raise StaleSubmissionError(
                f"submission round {sub.holder_round} too old for issuer round {record.round}"
            )
        index = entangled_leaf_index(record.state, sub.holder_id, sub.holder_round)
        entangled = record.state.entangled[index - 3]
        if entangled.holder_root != sub.holder_root:
            raise NotEntangledError("entangled root differs from the submission")
        return Receipt(
            holder_id=sub.holder_id,
            holder_round=sub.holder_round,
            holder_root=sub.holder_root,
            holder_signature=entangled.signature,
            issuer_commitment=record.commitment,
            inclusion=record.tree.prove_inclusion(index),
            prev_digest=record.state.prev_commitment_digest,
            prev_inclusion=record.tree.prove_inclusion(0),
        )

    def verify_receipt(self, receipt: Receipt, directory: KeyDirectory) -> Verdict:
        """Holder-side check of a fresh receipt, including issuer continuity."""
        c = receipt.issuer_commitment
        if not directory.verify_commitment(c):
            return Verdict.failed("BadSignature", f"issuer {c.node_id.hex()}")
        if receipt.holder_id != self.node_id:
            return Verdict.failed("HolderMismatch", "receipt addressed to another node")
        try:
            expected_root = self.record_at(receipt.holder_round).root
        except InvariantViolationError:
            return Verdict.failed("HolderMismatch", f"no local round {receipt.holder_round}")
        if receipt.holder_root != expected_root:
            return Verdict.failed("ReceiptMismatch", "receipt attests a root this node never committed")
        if receipt.inclusion.tree_size != c.leaf_count or not verify_inclusion(
            receipt.submission().leaf_bytes(), receipt.inclusion, c.root, self.hash_fn
        ):
            return Verdict.failed("ReceiptInvalid", "submission leaf unproven")
        leaf = bytes([LEAF_PREV]) + receipt.prev_digest
        if (
            receipt.prev_inclusion.leaf_index != 0
            or receipt.prev_inclusion.tree_size != c.leaf_count
            or not verify_inclusion(leaf, receipt.prev_inclusion, c.root, self.hash_fn)
        ):
            return Verdict.failed("ReceiptInvalid", "prev-commitment leaf unproven")
        prior = self.receipt_log.get((c.node_id, receipt.holder_round - 1))
        if prior is not None and prior.issuer_round + 1 == c.round:
            if commitment_digest(prior.issuer_commitment, self.hash_fn) != receipt.prev_digest:
                return Verdict.failed("ChainBreak", f"issuer {c.node_id.hex()} broke its chain")
        return Verdict.passed()

    def receive_receipt(self, receipt: Receipt, directory: KeyDirectory) -> Verdict:
        verdict = self.verify_receipt(receipt, directory)
        if verdict:
            self._pending_receipts[(receipt.issuer_id, receipt.holder_round)] = receipt
            self._receipts_this_round.append(receipt)
            self.receipt_log[(receipt.issuer_id, receipt.holder_round)] = receipt
        return verdict
