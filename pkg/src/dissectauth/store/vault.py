"""Sealing of base secrets under a service master key (AES-GCM).

Profiles never hold plaintext; they hold a SealedBox that only turns back into
the secret inside rule verification, through a handle scoped to that call.
"""

from __future__ import annotations

import base64
import hashlib
import os
from dataclasses import dataclass

from cryptography.hazmat.primitives.ciphers.aead import AESGCM


@dataclass(frozen=True)
class SealedBox:
    key_id: str
    nonce: bytes
    ciphertext: bytes

    def to_dict(self) -> dict:
        return {
            "key_id": self.key_id,
            "nonce": base64.b64encode(self.nonce).decode(),
            "ciphertext": base64.b64encode(self.ciphertext).decode(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SealedBox":
        return cls(
            key_id=doc["key_id"],
            nonce=base64.b64decode(doc["nonce"]),
            ciphertext=base64.b64decode(doc["ciphertext"]),
        )


@dataclass(frozen=True)
class VaultHandle:
    """SecretHandle implementation bound to one box and one vault."""

    _vault: "SecretVault"
    _box: SealedBox

    def unseal(self) -> str:
        return self._vault.open(self._box)


class SecretVault:
    """AES-GCM sealing under a 32-byte master key.

    Key rotation is out of scope, but every box records the key id it was
    sealed under so rotated deployments can refuse stale boxes loudly.
    """

    def __init__(self, master_key: bytes):
        if len(master_key) != 32:
            raise ValueError("master key must be exactly 32 bytes")
        self._key = master_key
        self._aead = AESGCM(master_key)
        self.key_id = hashlib.sha256(master_key).hexdigest()[:8]

    def seal(self, plaintext: str) -> SealedBox:
        nonce = os.urandom(12)
        ct = self._aead.encrypt(nonce, plaintext.encode("utf-8"), b"dissectauth-secret")
        return SealedBox(key_id=self.key_id, nonce=nonce, ciphertext=ct)

    def open(self, box: SealedBox) -> str:
        if box.key_id != self.key_id:
            raise ValueError(f"sealed under key {box.key_id}, vault holds {self.key_id}")
        pt = self._aead.decrypt(box.nonce, box.ciphertext, b"dissectauth-secret")
        return pt.decode("utf-8")

    def handle(self, box: SealedBox) -> VaultHandle:
        return VaultHandle(self, box)


def master_key_from_hex(hex_key: str) -> bytes:
    key = bytes.fromhex(hex_key)
    if len(key) != 32:
        raise ValueError("master key must be 32 bytes (64 hex chars)")
    return key
