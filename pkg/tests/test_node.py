"""Node state machine: leaf layout, commitments, receipts, chaining."""

import dataclasses

import pytest

from entmesh.hashtree import ZERO_DIGEST, sha256
from entmesh.keys import keypair_from_seed
from entmesh.node import (
    LEAF_ENTANGLED,
    LEAF_EVIDENCE,
    LEAF_MANIFEST,
    LEAF_PAYLOAD,
    LEAF_PREV,
    MANIFEST_LEAF_INDEX,
    Commitment,
    InvariantViolationError,
    KeyDirectory,
    Node,
    NotEntangledError,
    Receipt,
    RoundState,
    StaleSubmissionError,
    Submission,
    commitment_digest,
    chain_entry_for,
    entangled_leaf_index,
    evidence_leaf_index,
    parse_manifest_leaf,
    round_leaves,
    validate_state,
    verify_chain_entries,
    verify_commitment_chain,
)
from entmesh.sexpr import encode_tree
from entmesh.wire import WireError


def solo_node(label="solo"):
    return Node(label, keypair_from_seed(f"key:{label}"))


class TestLeafLayout:
    def test_round_zero_chains_from_zero(self):
        node = solo_node()
        record = node.build(("genesis",))
        leaves = record.tree.leaves
        assert leaves[0] == bytes([LEAF_PREV]) + ZERO_DIGEST
        assert leaves[1] == bytes([LEAF_PAYLOAD]) + encode_tree(("genesis",)).root
        assert leaves[2][0] == LEAF_MANIFEST

    def test_prev_leaf_is_commitment_digest(self):
        node = solo_node()
        first = node.build(("r0",))
        second = node.build(("r1",))
        expected = commitment_digest(first.commitment)
        assert second.tree.leaves[0] == bytes([LEAF_PREV]) + expected

    def test_manifest_leaf_round_trips(self):
        node = solo_node()
        ids = [keypair_from_seed(f"peer:{i}").node_id for i in range(3)]
        node.set_manifest(ids)
        record = node.build(("x",))
        leaf = record.tree.leaves[MANIFEST_LEAF_INDEX]
        assert parse_manifest_leaf(leaf) == tuple(sorted(ids))

    def test_manifest_sorted_and_deduped(self):
        node = solo_node()
        ids = [keypair_from_seed(f"peer:{i}").node_id for i in range(3)]
        node.set_manifest([ids[2], ids[0], ids[2], ids[1]])
        assert node.manifest == tuple(sorted(ids))

    def test_entangled_and_evidence_sections(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(4)
        issuer_state = net.nodes["b"].record_at(2).state
        sub_leaf = issuer_state.entangled[0].leaf_bytes()
        assert sub_leaf[0] == LEAF_ENTANGLED
        index = entangled_leaf_index(issuer_state, net.id_of("a"), 1)
        assert issuer_state.entangled[index - 3].holder_round == 1

        holder_state = net.nodes["a"].record_at(3).state
        assert holder_state.evidence, "receipt must be retained as evidence"
        receipt = holder_state.evidence[0]
        assert receipt.leaf_bytes()[0] == LEAF_EVIDENCE
        # Lag: round-r submission's receipt lands in the round r+2 tree.
        assert receipt.holder_round == 1
        ev_index = evidence_leaf_index(holder_state, net.id_of("b"), 1)
        leaves = round_leaves(holder_state)
        assert leaves[ev_index] == receipt.leaf_bytes()

    def test_unknown_lookup_raises(self):
        node = solo_node()
        record = node.build(("x",))
        with pytest.raises(NotEntangledError):
            entangled_leaf_index(record.state, node.node_id, 0)


class TestStateValidation:
    def test_round_zero_must_use_zero_digest(self):
        node = solo_node()
        state = node.compose_state(("x",))
        bad = dataclasses.replace(state, prev_commitment_digest=sha256(b"nope"))
        with pytest.raises(InvariantViolationError):
            validate_state(bad)

    def test_unsorted_manifest_rejected(self):
        node = solo_node()
        ids = sorted(keypair_from_seed(f"p:{i}").node_id for i in range(2))
        state = node.compose_state(("x",))
        bad = dataclasses.replace(state, manifest=(ids[1], ids[0]))
        with pytest.raises(InvariantViolationError):
            validate_state(bad)

    def test_duplicate_credentials_rejected(self):
        node = solo_node()
        d = sha256(b"cred")
        state = node.compose_state(("x",))
        bad = dataclasses.replace(state, credentials=(d, d))
        with pytest.raises(InvariantViolationError):
            validate_state(bad)

    def test_negative_round_rejected(self):
        node = solo_node()
        state = node.compose_state(("x",))
        with pytest.raises(InvariantViolationError):
            validate_state(dataclasses.replace(state, round=-1))


class TestDeterminism:
    def test_identical_histories_identical_commitments(self):
        histories = []
        for _ in range(2):
            node = Node("twin", keypair_from_seed("key:twin"))
            for r in range(3):
                node.build(("payload", r))
            histories.append([rec.commitment.to_bytes() for rec in node.records])
        assert histories[0] == histories[1]

    def test_different_payload_different_root(self):
        a, b = solo_node("p"), Node("p", keypair_from_seed("key:p"))
        assert a.build(("one",)).root != b.build(("two",)).root


class TestWireForms:
    def test_commitment_round_trip(self):
        node = solo_node()
        c = node.build(("x",)).commitment
        assert Commitment.from_bytes(c.to_bytes()) == c
        assert len(c.to_bytes()) == 148

    def test_submission_round_trip_and_signature(self):
        node = solo_node()
        node.build(("x",))
        directory = KeyDirectory()
        directory.register(node.node_id, node.keypair.verify_key)
        sub = node.make_submission()
        assert directory.verify_submission(sub)
        data = sub.to_bytes()
        assert Submission.from_bytes(data) == sub

    def test_receipt_round_trip(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(3)
        receipt = net.nodes["a"].receipt_log[(net.id_of("b"), 1)]
        assert Receipt.from_bytes(receipt.to_bytes()) == receipt

    def test_trailing_bytes_rejected(self):
        node = solo_node()
        c = node.build(("x",)).commitment
        with pytest.raises(WireError):
            Commitment.from_bytes(c.to_bytes() + b"\x00")


class TestReceiptFlow:
    def test_receipt_references_next_issuer_round(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(4)
        for holder_round in (0, 1, 2):
            receipt = net.nodes["a"].receipt_log[(net.id_of("b"), holder_round)]
            assert receipt.issuer_round == holder_round + 1
            assert receipt.holder_root == net.nodes["a"].record_at(holder_round).root

    def test_no_receipt_failures_in_honest_run(self, manual_net):
        net = manual_net(["a", "b", "c"], [("a", "b"), ("b", "c")]).run(5)
        assert net.receipt_failures == []

    def test_stale_submission_rejected(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(1)
        old_sub = net.nodes["a"].make_submission()  # round 0
        net.run(2)  # issuer now at round 2
        with pytest.raises(StaleSubmissionError):
            net.nodes["b"].issue_receipt(old_sub)

    def test_unentangled_submission_rejected(self):
        issuer, holder = solo_node("i"), solo_node("h")
        issuer.build(("x",))
        holder.build(("y",))
        with pytest.raises(NotEntangledError):
            issuer.issue_receipt(holder.make_submission())

    def test_tampered_submission_root_rejected(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(2)
        sub = net.nodes["a"].make_submission()  # round 1, already entangled
        forged = dataclasses.replace(sub, holder_root=sha256(b"forged"))
        with pytest.raises(NotEntangledError):
            net.nodes["b"].issue_receipt(forged)

    def test_receipt_to_wrong_holder_rejected(self, manual_net):
        net = manual_net(["a", "b", "c"], [("a", "c"), ("b", "c")]).run(3)
        receipt = net.nodes["a"].receipt_log[(net.id_of("c"), 1)]
        verdict = net.nodes["b"].verify_receipt(receipt, net.directory)
        assert not verdict and verdict.reason == "HolderMismatch"

    def test_receipt_for_unknown_root_rejected(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(3)
        receipt = net.nodes["a"].receipt_log[(net.id_of("b"), 1)]
        forged = dataclasses.replace(receipt, holder_root=sha256(b"other"))
        verdict = net.nodes["a"].verify_receipt(forged, net.directory)
        assert not verdict and verdict.reason == "ReceiptMismatch"

    def test_receipt_with_unsigned_commitment_rejected(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(3)
        receipt = net.nodes["a"].receipt_log[(net.id_of("b"), 1)]
        bad_commitment = dataclasses.replace(receipt.issuer_commitment, round=9)
        forged = dataclasses.replace(receipt, issuer_commitment=bad_commitment)
        verdict = net.nodes["a"].verify_receipt(forged, net.directory)
        assert not verdict and verdict.reason == "BadSignature"

    def test_issuer_fork_detected_as_chain_break(self, manual_net):
        # Replay the issuer under the same key, diverge one round early,
        # then hand the holder a receipt from the divergent branch.
        net = manual_net(["a", "b"], [("a", "b")]).run(3)
        holder, issuer = net.nodes["a"], net.nodes["b"]

        def holder_submission(r):
            c = holder.record_at(r).commitment
            sub = Submission(holder_id=c.node_id, holder_round=c.round, holder_root=c.root, signature=b"")
            return dataclasses.replace(sub, signature=holder.keypair.sign(sub.message()))

        fork = Node("b", keypair_from_seed("net:b"))
        for r in range(3):
            payload = ("data", "b", r) if r < 2 else ("divergent", r)
            fork.build(payload)
            assert fork.receive_submission(holder_submission(r), net.directory)
        fork.build(("divergent", 3))
        fork_receipt = fork.issue_receipt(holder_submission(2))

        verdict = holder.verify_receipt(fork_receipt, net.directory)
        assert not verdict and verdict.reason == "ChainBreak"


class TestCommitmentChains:
    def test_full_chain_verifies(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(4)
        records = net.nodes["a"].records
        verdict = verify_commitment_chain(
            [r.commitment for r in records], [r.tree for r in records], net.directory
        )
        assert verdict

    def test_gap_detected(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(4)
        records = net.nodes["a"].records
        verdict = verify_commitment_chain(
            [records[0].commitment, records[2].commitment],
            [records[0].tree, records[2].tree],
            net.directory,
        )
        assert verdict.reason == "RoundGap"

    def test_unknown_signer_detected(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(2)
        records = net.nodes["a"].records
        verdict = verify_commitment_chain(
            [r.commitment for r in records], [r.tree for r in records], KeyDirectory()
        )
        assert verdict.reason == "BadSignature"

    def test_chain_entries_match_full_check(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(4)
        entries = [chain_entry_for(r) for r in net.nodes["a"].records]
        assert verify_chain_entries(entries, net.directory)

    def test_substituted_history_breaks_entries(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(4)
        other = manual_net(["a", "b"], [("a", "b")], seed="net2").run(4)
        entries = [chain_entry_for(r) for r in net.nodes["a"].records]
        foreign = chain_entry_for(other.nodes["a"].records[2])
        spliced = entries[:2] + [foreign] + entries[3:]
        verdict = verify_chain_entries(spliced, net.directory)
        assert not verdict
        assert verdict.reason in ("BadSignature", "ChainBreak")

    def test_tampered_prev_digest_breaks(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(3)
        entries = [chain_entry_for(r) for r in net.nodes["a"].records]
        bad = dataclasses.replace(entries[1], prev_digest=sha256(b"lie"))
        verdict = verify_chain_entries([entries[0], bad, entries[2]], net.directory)
        assert verdict.reason == "ChainBreak"


class TestPruning:
    def test_pruned_record_keeps_commitment(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(3)
        node = net.nodes["b"]
        root_before = node.record_at(0).root
        node.prune_record(0)
        record = node.record_at(0)
        assert record.state is None and record.tree is None
        assert record.root == root_before

    def test_pruned_record_cannot_prove(self, manual_net):
        net = manual_net(["a", "b"], [("a", "b")]).run(3)
        node = net.nodes["b"]
        node.prune_record(1)
        with pytest.raises(InvariantViolationError):
            chain_entry_for(node.record_at(1))


class TestKeyDirectory:
    def test_rebind_switches_at_round(self):
        directory = KeyDirectory()
        old, new = keypair_from_seed("old"), keypair_from_seed("new")
        node_id = old.node_id
        directory.register(node_id, old.verify_key)
        directory.rebind(node_id, new.verify_key, from_round=5)
        assert directory.key_at(node_id, 0) == old.verify_key
        assert directory.key_at(node_id, 4) == old.verify_key
        assert directory.key_at(node_id, 5) == new.verify_key
        assert directory.key_at(node_id, 9) == new.verify_key

    def test_unknown_id(self):
        assert KeyDirectory().key_at(sha256(b"ghost"), 0) is None

    def test_bindings_listing(self):
        directory = KeyDirectory()
        old, new = keypair_from_seed("old"), keypair_from_seed("new")
        directory.register(old.node_id, old.verify_key)
        directory.rebind(old.node_id, new.verify_key, from_round=3)
        assert directory.bindings_of(old.node_id) == ((0, old.verify_key), (3, new.verify_key))
