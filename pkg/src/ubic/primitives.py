"""Classical primitives behind a single cipher-suite interface.

Suite 1 (the only one registered):

* hash ``H``: SHA-256
* signature ``DS``: Ed25519
* public-key encryption ``Pi_pke``: ECIES over X25519 with HKDF-SHA256 and
  AES-256-GCM
* private-key encryption ``Pi_priv``: AES-256-GCM (authenticated, so a
  damaged ciphertext is detected rather than silently garbled)

Keys are plain byte strings.  Every randomized operation draws its
randomness from an explicit ``random.Random`` handle, so seeded runs are
reproducible end to end; pass ``None`` to use the OS CSPRNG.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from .errors import Rejected

SUITE_ID = 1
SUITE_NAME = "SHA256-Ed25519-X25519ECIES-AES256GCM"
DIGEST_SIZE = 32
SYM_KEY_SIZE = 32
GCM_NONCE_SIZE = 12
PKE_OVERHEAD = 32 + 16
SYM_OVERHEAD = GCM_NONCE_SIZE + 16

_RAW = (serialization.Encoding.Raw, serialization.PublicFormat.Raw)


class AuthenticationError(Rejected):
    code = "crypto.auth-failed"


def _rng(rng: random.Random | None) -> random.Random:
    return rng if rng is not None else random.SystemRandom()


def random_bytes(n: int, rng: random.Random | None = None) -> bytes:
    return _rng(rng).randbytes(n)


# -- hash -------------------------------------------------------------------

def hash_block(did: bytes, m: bytes, i: int) -> bytes:
    """``H(did, m_i, i)`` over ``len(did)|did|len(m)|m|i`` (8-byte lengths, 4-byte index)."""
    if i < 1:
        raise ValueError("block index must be >= 1")
    return hashlib.sha256(block_encoding(did, m, i)).digest()


def block_encoding(did: bytes, m: bytes, i: int) -> bytes:
    return struct.pack(">Q", len(did)) + did + struct.pack(">Q", len(m)) + m + struct.pack(">I", i)


# -- signatures -------------------------------------------------------------

@dataclass(frozen=True)
class SigKeyPair:
    sk: bytes
    vk: bytes


def sig_keygen(rng: random.Random | None = None) -> SigKeyPair:
    seed = random_bytes(32, rng)
    vk = Ed25519PrivateKey.from_private_bytes(seed).public_key().public_bytes(*_RAW)
    return SigKeyPair(seed, vk)


def sign(sk: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(sk).sign(message)


def verify(vk: bytes, message: bytes, signature: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(vk).verify(signature, message)
    except (InvalidSignature, ValueError):
        return False
    return True


# -- public-key encryption --------------------------------------------------

@dataclass(frozen=True)
class PkeKeyPair:
    dk: bytes
    ek: bytes


def pke_keygen(rng: random.Random | None = None) -> PkeKeyPair:
    dk = random_bytes(32, rng)
    ek = X25519PrivateKey.from_private_bytes(dk).public_key().public_bytes(*_RAW)
    return PkeKeyPair(dk, ek)


def _ecies_key(shared: bytes, eph: bytes, ek: bytes) -> bytes:
    return HKDF(algorithm=hashes.SHA256(), length=SYM_KEY_SIZE, salt=eph + ek,
                info=b"ubic/pke/v1").derive(shared)


def pke_encrypt(ek: bytes, m: bytes, rng: random.Random | None = None, aad: bytes = b"") -> bytes:
    eph_sk = X25519PrivateKey.from_private_bytes(random_bytes(32, rng))
    eph = eph_sk.public_key().public_bytes(*_RAW)
    shared = eph_sk.exchange(X25519PublicKey.from_public_bytes(ek))
    key = _ecies_key(shared, eph, ek)
    # the key is fresh per message, so a fixed nonce is safe
    return eph + AESGCM(key).encrypt(bytes(GCM_NONCE_SIZE), m, aad)


def pke_decrypt(dk: bytes, c: bytes, aad: bytes = b"") -> bytes:
    if len(c) < PKE_OVERHEAD:
        raise AuthenticationError("public-key ciphertext too short")
    sk = X25519PrivateKey.from_private_bytes(dk)
    eph = c[:32]
    try:
        shared = sk.exchange(X25519PublicKey.from_public_bytes(eph))
        key = _ecies_key(shared, eph, sk.public_key().public_bytes(*_RAW))
        return AESGCM(key).decrypt(bytes(GCM_NONCE_SIZE), c[32:], aad)
    except (InvalidTag, ValueError):
        raise AuthenticationError("public-key decryption failed") from None


# -- private-key encryption -------------------------------------------------

def sym_keygen(rng: random.Random | None = None) -> bytes:
    return random_bytes(SYM_KEY_SIZE, rng)


def sym_encrypt(k: bytes, m: bytes, rng: random.Random | None = None, aad: bytes = b"") -> bytes:
    nonce = random_bytes(GCM_NONCE_SIZE, rng)
    return nonce + AESGCM(k).encrypt(nonce, m, aad)


def sym_decrypt(k: bytes, c: bytes, aad: bytes = b"") -> bytes:
    if len(c) < SYM_OVERHEAD:
        raise AuthenticationError("ciphertext too short")
    try:
        return AESGCM(k).decrypt(c[:GCM_NONCE_SIZE], c[GCM_NONCE_SIZE:], aad)
    except InvalidTag:
        raise AuthenticationError("authenticated decryption failed") from None


# -- hybrid -----------------------------------------------------------------

def chunk_aad(prefix: bytes, index: int) -> bytes:
    return prefix + struct.pack(">I", index)


def split_chunks(m: bytes, chunk_size: int) -> list[bytes]:
    if chunk_size < 1:
        raise ValueError("chunk size must be positive")
    return [m[i:i + chunk_size] for i in range(0, len(m), chunk_size)]


@dataclass(frozen=True)
class HybridCiphertext:
    key: bytes
    chunks: tuple[bytes, ...]


def hybrid_encrypt(ek: bytes, m: bytes, chunk_size: int = 512,
                   rng: random.Random | None = None, aad: bytes = b"") -> HybridCiphertext:
    """Wrap a fresh key under ``ek`` and encrypt ``m`` chunk by chunk.

    Chunk ``i`` (1-based) is authenticated together with ``aad`` and its
    index, so chunks cannot be reordered without detection.
    """
    if not m:
        raise ValueError("message must be nonempty")
    k = sym_keygen(rng)
    key = pke_encrypt(ek, k, rng, aad)
    chunks = tuple(sym_encrypt(k, part, rng, chunk_aad(aad, i))
                   for i, part in enumerate(split_chunks(m, chunk_size), start=1))
    return HybridCiphertext(key, chunks)


def hybrid_decrypt(dk: bytes, hc: HybridCiphertext, aad: bytes = b"") -> list[bytes | AuthenticationError]:
    """Per-chunk plaintexts; a damaged chunk yields its error instead of aborting."""
    k = pke_decrypt(dk, hc.key, aad)
    out: list[bytes | AuthenticationError] = []
    for i, c in enumerate(hc.chunks, start=1):
        try:
            out.append(sym_decrypt(k, c, chunk_aad(aad, i)))
        except AuthenticationError as exc:
            out.append(exc)
    return out
