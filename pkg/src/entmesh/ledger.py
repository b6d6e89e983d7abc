"""Run artifacts on disk: JSONL ledgers and the trust bundle.

Ledger files are line-delimited JSON: a header record first, data records
after.  Binary values travel as lowercase hex.  Output is deterministic:
compact separators, sorted keys, no timestamps, so two runs with the same
seed produce byte-identical files.

A truncated final line (a crash mid-append) is tolerated: the intact
prefix loads and a warning is logged.  Corruption anywhere else is an
error.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

from .keys import NodeId
from .node import Commitment, KeyDirectory

__all__ = [
    "LedgerError",
    "TrustBundle",
    "commitment_from_row",
    "commitment_row",
    "load_trust_bundle",
    "read_ledger",
    "write_ledger",
    "write_trust_bundle",
]

logger = logging.getLogger("entmesh.ledger")

_FORMAT = "entmesh-ledger"
_VERSION = 1


class LedgerError(ValueError):
    pass


def _dump(row: dict) -> str:
    return json.dumps(row, separators=(",", ":"), sort_keys=True)


def write_ledger(path: "Path | str", kind: str, rows: Iterable[dict], meta: Optional[dict] = None) -> None:
    header = {"format": _FORMAT, "version": _VERSION, "kind": kind}
    if meta:
        header.update(meta)
    lines = [_dump(header)]
    lines.extend(_dump(row) for row in rows)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ledger(path: "Path | str", expected_kind: Optional[str] = None) -> tuple[dict, list[dict]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise LedgerError(f"{path}: empty ledger")
    rows: list[dict] = []
    for i, line in enumerate(lines):
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            if i == len(lines) - 1:
                logger.warning("%s: dropping truncated final record", path)
                break
            raise LedgerError(f"{path}: malformed record on line {i + 1}")
        if not isinstance(row, dict):
            raise LedgerError(f"{path}: record on line {i + 1} is not an object")
        rows.append(row)
    if not rows:
        raise LedgerError(f"{path}: no intact records")
    header, records = rows[0], rows[1:]
    if header.get("format") != _FORMAT:
        raise LedgerError(f"{path}: not a ledger file")
    if expected_kind is not None and header.get("kind") != expected_kind:
        raise LedgerError(f"{path}: kind {header.get('kind')!r}, expected {expected_kind!r}")
    return header, records


def commitment_row(label: str, commitment: Commitment) -> dict:
    return {
        "node": label,
        "node_id": commitment.node_id.hex(),
        "round": commitment.round,
        "root": commitment.root.hex(),
        "commitment": commitment.to_bytes().hex(),
    }


def commitment_from_row(row: dict) -> Commitment:
    try:
        c = Commitment.from_bytes(bytes.fromhex(row["commitment"]))
    except (KeyError, ValueError) as exc:
        raise LedgerError(f"bad commitment record: {exc}")
    if c.node_id.hex() != row.get("node_id") or c.round != row.get("round") or c.root.hex() != row.get("root"):
        raise LedgerError("commitment record fields disagree with the encoded bytes")
    return c


@dataclass
class TrustBundle:
    """What a verifier needs: keys and the anchor commitment logs."""

    seed: int
    topology: str
    directory: KeyDirectory
    node_ids: dict[str, NodeId]
    anchor_commitments: dict[str, dict[int, Commitment]]

    def label_of(self, node_id: NodeId) -> Optional[str]:
        for label, known in self.node_ids.items():
            if known == node_id:
                return label
        return None

    def trusted_for(self, anchor: str) -> dict[int, Commitment]:
        if anchor not in self.anchor_commitments:
            raise LedgerError(f"no anchor log for {anchor!r}")
        return self.anchor_commitments[anchor]


def write_trust_bundle(path: "Path | str", sim, out_indent: int = 2) -> None:
    """Extract the verification material from a finished simulation."""
    keys = {}
    for label in sim.topology.labels:
        node_id = sim.nodes[label].node_id
        keys[label] = {
            "node_id": node_id.hex(),
            "bindings": [
                {"from_round": from_round, "verify_key": vk.hex()}
                for from_round, vk in sim.directory.bindings_of(node_id)
            ],
        }
    anchors = {}
    for label in sim.topology.anchors:
        anchors[label] = [
            commitment_row(label, record.commitment) for record in sim.nodes[label].records
        ]
    bundle = {
        "format": "entmesh-trust",
        "version": _VERSION,
        "seed": sim.seed,
        "topology": sim.topology.name,
        "keys": keys,
        "anchors": anchors,
    }
    Path(path).write_text(json.dumps(bundle, indent=out_indent, sort_keys=True) + "\n", encoding="utf-8")


def load_trust_bundle(path: "Path | str") -> TrustBundle:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LedgerError(f"{path}: not valid JSON: {exc}")
    if not isinstance(raw, dict) or raw.get("format") != "entmesh-trust":
        raise LedgerError(f"{path}: not a trust bundle")
    directory = KeyDirectory()
    node_ids: dict[str, NodeId] = {}
    for label, entry in sorted(raw.get("keys", {}).items()):
        try:
            node_id = NodeId(bytes.fromhex(entry["node_id"]))
            bindings = entry["bindings"]
            first = bindings[0]
            directory.register(node_id, bytes.fromhex(first["verify_key"]))
            for binding in bindings[1:]:
                directory.rebind(node_id, bytes.fromhex(binding["verify_key"]), int(binding["from_round"]))
        except (KeyError, IndexError, ValueError) as exc:
            raise LedgerError(f"{path}: bad key entry for {label!r}: {exc}")
        node_ids[label] = node_id
    anchors: dict[str, dict[int, Commitment]] = {}
    for label, rows in sorted(raw.get("anchors", {}).items()):
        log = {}
        for row in rows:
            c = commitment_from_row(row)
            if not directory.verify_commitment(c):
                raise LedgerError(f"{path}: anchor log for {label!r} has a bad signature at round {c.round}")
            log[c.round] = c
        anchors[label] = log
    return TrustBundle(
        seed=int(raw.get("seed", 0)),
        topology=str(raw.get("topology", "")),
        directory=directory,
        node_ids=node_ids,
        anchor_commitments=anchors,
    )
