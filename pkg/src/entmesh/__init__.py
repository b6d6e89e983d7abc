"""entmesh: entangled Merkle commitments for mutually auditable nodes.

Nodes commit their state to per-round Merkle roots, entangle those roots
into each other's trees, and exchange signed receipts.  The package covers
the primitive layers (hash trees, canonical s-expressions, signed rounds),
the proof objects built on them (links, hubs, chains, digest paths), an
identity layer (credentials, revocation, guardian key recovery), and a
deterministic network simulator with a CLI.
"""

from .hashtree import (
    Digest,
    EmptyTreeError,
    InclusionProof,
    MerkleTree,
    Side,
    ZERO_DIGEST,
    fold_root,
    leaf_hash,
    node_hash,
    root,
    sha256,
    verify_inclusion,
)
from .sexpr import EvalError, Expr, ParseError, encode_tree, evaluate, parse, tokens_of, unparse
from .keys import Ed25519Scheme, KeyPair, NodeId, keypair_from_seed, node_id_for_key
from .node import (
    ChainEntry,
    Commitment,
    KeyDirectory,
    Node,
    NodeRecord,
    Receipt,
    RoundState,
    Submission,
    Verdict,
    build_round,
    chain_entry_for,
    commitment_digest,
    round_leaves,
    verify_chain_entries,
    verify_commitment_chain,
)
from .entangle import (
    ChainProof,
    HubProof,
    LinkProof,
    MissingReceiptError,
    RootPath,
    build_chain_proof,
    build_hub_proof,
    build_link_proof,
    build_root_path,
    decode_proof,
    encode_proof,
    issue_receipt,
    verify_chain,
    verify_hub,
    verify_link,
    verify_root_path,
)
from .identity import (
    Credential,
    CredentialMode,
    CredentialRegistry,
    RecoveryCertificate,
    RecoveryPolicy,
    apply_recovery,
    endorse_recovery,
    verify_recovery,
)

__version__ = "0.1.0"

__all__ = [
    "ChainEntry",
    "ChainProof",
    "Commitment",
    "Credential",
    "CredentialMode",
    "CredentialRegistry",
    "Digest",
    "Ed25519Scheme",
    "EmptyTreeError",
    "EvalError",
    "Expr",
    "HubProof",
    "InclusionProof",
    "KeyDirectory",
    "KeyPair",
    "LinkProof",
    "MerkleTree",
    "MissingReceiptError",
    "Node",
    "NodeId",
    "NodeRecord",
    "ParseError",
    "Receipt",
    "RecoveryCertificate",
    "RecoveryPolicy",
    "RootPath",
    "RoundState",
    "Side",
    "Submission",
    "Verdict",
    "ZERO_DIGEST",
    "apply_recovery",
    "build_chain_proof",
    "build_hub_proof",
    "build_link_proof",
    "build_root_path",
    "build_round",
    "chain_entry_for",
    "commitment_digest",
    "decode_proof",
    "encode_proof",
    "endorse_recovery",
    "evaluate",
    "encode_tree",
    "fold_root",
    "issue_receipt",
    "keypair_from_seed",
    "leaf_hash",
    "node_hash",
    "node_id_for_key",
    "parse",
    "root",
    "round_leaves",
    "sha256",
    "tokens_of",
    "unparse",
    "verify_chain",
    "verify_chain_entries",
    "verify_commitment_chain",
    "verify_hub",
    "verify_inclusion",
    "verify_link",
    "verify_recovery",
    "verify_root_path",
]
