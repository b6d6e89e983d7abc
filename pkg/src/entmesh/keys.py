"""Signature scheme abstraction and node identifiers.

The default scheme is Ed25519 via ``cryptography``.  Key material derives
from an explicit 32-byte seed so whole simulations are reproducible; node
identifiers are the hash of the verification key, which makes the id
self-authenticating against any presented key.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from .hashtree import Digest, sha256

__all__ = ["Ed25519Scheme", "KeyPair", "NodeId", "SignatureScheme", "node_id_for_key"]

# A node id is just a digest: the fingerprint of the verification key.
NodeId = Digest


def node_id_for_key(verify_key: bytes) -> NodeId:
    return Digest(sha256(verify_key))


class SignatureScheme(Protocol):
    name: str

    def keypair_from_seed(self, seed: bytes) -> "KeyPair": ...

    def verify(self, verify_key: bytes, message: bytes, signature: bytes) -> bool: ...


class Ed25519Scheme:
    name = "ed25519"
    signature_size = 64

    def keypair_from_seed(self, seed: bytes) -> "KeyPair":
        if len(seed) != 32:
            raise ValueError("ed25519 seed must be 32 bytes")
        private = Ed25519PrivateKey.from_private_bytes(seed)
        public = private.public_key().public_bytes_raw()
        return KeyPair(scheme=self, verify_key=public, _private=private)

    def verify(self, verify_key: bytes, message: bytes, signature: bytes) -> bool:
        if len(verify_key) != 32 or len(signature) != 64:
            return False
        try:
            Ed25519PublicKey.from_public_bytes(bytes(verify_key)).verify(bytes(signature), message)
            return True
        except (InvalidSignature, ValueError):
            return False


DEFAULT_SCHEME = Ed25519Scheme()


@dataclass
class KeyPair:
    scheme: SignatureScheme
    verify_key: bytes
    _private: Ed25519PrivateKey = field(repr=False)

    def sign(self, message: bytes) -> bytes:
        return self._private.sign(message)

    @property
    def node_id(self) -> NodeId:
        return node_id_for_key(self.verify_key)


def keypair_from_seed(seed: "bytes | str", scheme: SignatureScheme = DEFAULT_SCHEME) -> KeyPair:
    """Derive a keypair from an arbitrary seed string or byte string.

    Anything that is not already a 32-byte seed is hashed down to one, so
    human-readable labels make valid deterministic seeds.
    """
    if isinstance(seed, str):
        seed = seed.encode("utf-8")
    if len(seed) != 32:
        seed = sha256(seed)
    return scheme.keypair_from_seed(seed)
