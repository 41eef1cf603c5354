"""Credential provisioning, signing, and hashing primitives.

A trusted central control provisions every robot with a signing keypair
and a certificate binding (robot_id, verify_key) under the central key.
The concrete algorithms (Ed25519 signatures, SHA-256 digests) are an
internal detail of this module: callers treat signatures and digests as
opaque bytes, so the scheme can be swapped without touching the rest of
the code.

Key material is derived deterministically from the provisioning seed, so
a swarm provisioned twice with the same (n, seed) is byte-identical.
Private keys live only inside :class:`SigningIdentity` and are never
serialized.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

DIGEST_SIZE = 32

_KEY_DOMAIN = b"swarmchain:key:v1:"
_CRED_DOMAIN = b"swarmchain:cred:v1:"


@dataclass(frozen=True, eq=False)
class Digest:
    """Fixed-length hash output; equal inputs always hash to equal digests."""

    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != DIGEST_SIZE:
            raise ValueError(f"digest must be {DIGEST_SIZE} bytes, got {len(self.value)}")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Digest) and self.value == other.value

    def __hash__(self) -> int:
        return hash(self.value)

    def hex(self) -> str:
        return self.value.hex()

    @classmethod
    def from_hex(cls, text: str) -> "Digest":
        return cls(bytes.fromhex(text))


def digest(message: bytes) -> Digest:
    """Hash arbitrary bytes to a fixed-length digest."""
    return Digest(hashlib.sha256(message).digest())


@dataclass(frozen=True)
class Credential:
    """A robot's public identity: id, verification key, central certificate."""

    robot_id: int
    verify_key: bytes
    cert: bytes


@dataclass(frozen=True)
class SigningIdentity:
    """A robot's credential plus its private signing key.

    The signing key is held only by the robot (and central control); it
    is excluded from repr output and must never enter traces or reports.
    """

    credential: Credential
    signing_key: bytes = field(repr=False)

    @property
    def robot_id(self) -> int:
        return self.credential.robot_id


def _derive_private_key(material: bytes) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(hashlib.sha256(_KEY_DOMAIN + material).digest())


def _public_bytes(key: Ed25519PrivateKey) -> bytes:
    from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

    return key.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)


def _private_bytes(key: Ed25519PrivateKey) -> bytes:
    from cryptography.hazmat.primitives.serialization import (
        Encoding,
        NoEncryption,
        PrivateFormat,
    )

    return key.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())


@lru_cache(maxsize=4096)
def _load_public(verify_key: bytes) -> Ed25519PublicKey | None:
    try:
        return Ed25519PublicKey.from_public_bytes(verify_key)
    except (ValueError, TypeError):
        return None


def credential_message(robot_id: int, verify_key: bytes) -> bytes:
    """Canonical bytes certified by central control for one robot."""
    return _CRED_DOMAIN + robot_id.to_bytes(4, "big") + verify_key


def provision_swarm(n: int, seed: int) -> tuple[bytes, list[SigningIdentity]]:
    """Provision a swarm of ``n`` robots with ids 1..n.

    Returns the central verification key and one identity per robot,
    each carrying a certificate valid under the central key.  Pure in
    (n, seed).
    """
    if n < 1:
        raise ValueError(f"swarm size must be >= 1, got {n}")
    central = _derive_private_key(f"central:{seed}".encode())
    central_vk = _public_bytes(central)
    identities = []
    for robot_id in range(1, n + 1):
        key = _derive_private_key(f"robot:{seed}:{robot_id}".encode())
        vk = _public_bytes(key)
        cert = central.sign(credential_message(robot_id, vk))
        cred = Credential(robot_id=robot_id, verify_key=vk, cert=cert)
        identities.append(SigningIdentity(credential=cred, signing_key=_private_bytes(key)))
    return central_vk, identities


@lru_cache(maxsize=1024)
def _load_private(signing_key: bytes) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(signing_key)


def sign(identity: SigningIdentity, message: bytes) -> bytes:
    """Sign a message; the result verifies under ``identity.credential``."""
    return _load_private(identity.signing_key).sign(message)


@lru_cache(maxsize=1 << 16)
def _verify_cached(verify_key: bytes, message: bytes, signature: bytes) -> bool:
    public = _load_public(verify_key)
    if public is None:
        return False
    try:
        public.verify(signature, message)
        return True
    except InvalidSignature:
        return False
    except (ValueError, TypeError):
        return False


def verify(credential: Credential, message: bytes, signature: bytes) -> bool:
    """True iff ``signature`` was produced over ``message`` by the matching key.

    Malformed signatures or keys are rejected, not raised.  Verification
    is a pure function, so results are memoized process-wide.
    """
    return _verify_cached(credential.verify_key, bytes(message), bytes(signature))


def verify_credential(credential: Credential, central_verify_key: bytes) -> bool:
    """Check the central-control certificate on a credential."""
    return _verify_cached(
        central_verify_key,
        credential_message(credential.robot_id, credential.verify_key),
        credential.cert,
    )
