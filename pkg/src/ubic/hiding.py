"""Content hiding: documents printed as a header code plus encrypted chunk codes.

A fresh document key ``k`` is wrapped in the header, either for one
recipient (public-key mode) or under an attribute vector with inner-product
predicate encryption (predicate mode).  In predicate mode the wrapped
value is a random element of G_T and ``k`` is its hash.  The header also
carries a short key-check value so a key that does not match is reported
at the header, before any chunk is touched.

Chunk ``i`` is AES-GCM encrypted under ``k`` with ``document nonce | i`` as
associated data, so each chunk decrypts on its own, damaged chunks are
reported individually, and a chunk moved to another position or document
fails authentication.
"""

from __future__ import annotations

import hashlib
import hmac
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import codec, ipe, primitives
from .bgroup import TargetElement
from .errors import Rejected, UbicError
from .tokens import (KEY_CHECK_LEN, NONCE_LEN, ChunkToken, HideHeader, TokenError,
                     decode_as)

# token overhead of a chunk code around the ciphertext: framework header + 2 TLV heads + index
CHUNK_TOKEN_OVERHEAD = 6 + 5 + 4 + 5 + primitives.SYM_OVERHEAD


class HeaderUnreadable(UbicError):
    code = "hiding.header-unreadable"


class WrongKey(Rejected):
    code = "hiding.wrong-key"


class ChunkDamaged(Rejected):
    code = "hiding.chunk-damaged"

    def __init__(self, indices: Sequence[int]):
        super().__init__("damaged chunk(s): " + ", ".join(map(str, indices)))
        self.indices = list(indices)


class ChunkStatus(Enum):
    OK = "ok"
    DAMAGED = "damaged"


@dataclass
class HiddenDocument:
    """Scanned codes of a hidden document; ``None`` marks an unreadable code."""

    header: bytes | None
    chunks: list[bytes | None]

    @property
    def predicate(self) -> bool:
        return decode_as(self.header, HideHeader).predicate


@dataclass
class Recovered:
    plaintexts: dict[int, bytes] = field(default_factory=dict)
    status: dict[int, ChunkStatus] = field(default_factory=dict)

    @property
    def damaged(self) -> list[int]:
        return sorted(i for i, s in self.status.items() if s is ChunkStatus.DAMAGED)

    def joined(self) -> bytes:
        """Concatenated plaintext; only meaningful when nothing is damaged."""
        return b"".join(self.plaintexts[i] for i in sorted(self.plaintexts))


def _key_check(k: bytes, nonce: bytes) -> bytes:
    return hmac.new(k, b"ubic/hide/key-check" + nonce, hashlib.sha256).digest()[:KEY_CHECK_LEN]


def key_from_element(m: TargetElement) -> bytes:
    return hashlib.sha256(b"ubic/hide/ipe-key" + m.to_bytes()).digest()


def _encrypt_chunks(k: bytes, nonce: bytes, m: bytes, chunk_size: int,
                    rng: random.Random) -> list[bytes]:
    return [ChunkToken(i, primitives.sym_encrypt(k, part, rng, primitives.chunk_aad(nonce, i))).encode()
            for i, part in enumerate(primitives.split_chunks(m, chunk_size), start=1)]


def _check_chunk_size(chunk_size: int, ec: codec.EcLevel | str):
    limit = codec.byte_capacity(ec) - CHUNK_TOKEN_OVERHEAD
    if not 1 <= chunk_size <= limit:
        raise ValueError(f"chunk size must be between 1 and {limit} bytes at level {codec.EcLevel(ec).value}")


def hide_encrypt(m: bytes, *, ek: bytes | None = None, mpk: ipe.IpePublicKey | None = None,
                 attribute: Sequence[int] | None = None,
                 chunk_size: int = codec.DEFAULT_CHUNK_SIZE, ec: codec.EcLevel | str = codec.EcLevel.M,
                 rng: random.Random | None = None) -> HiddenDocument:
    """Encrypt ``m`` for recipient key ``ek``, or for ``attribute`` under ``mpk``."""
    if not m:
        raise ValueError("nothing to hide")
    if (ek is None) == (mpk is None):
        raise ValueError("give exactly one of ek or mpk")
    _check_chunk_size(chunk_size, ec)
    rng = rng if rng is not None else random.SystemRandom()
    nonce = primitives.random_bytes(NONCE_LEN, rng)
    if ek is not None:
        k = primitives.sym_keygen(rng)
        wrapped = primitives.pke_encrypt(ek, k, rng, nonce)
    else:
        if mpk.mode is not ipe.Mode.MESSAGE:
            raise ValueError("predicate mode needs a message-mode public key")
        if attribute is None:
            raise ValueError("predicate mode needs an attribute vector")
        carrier = mpk.params.random_target(rng)
        k = key_from_element(carrier)
        wrapped = ipe.encode_ciphertext(ipe.encrypt(mpk, attribute, carrier, rng))
    chunks = _encrypt_chunks(k, nonce, m, chunk_size, rng)
    header = HideHeader(nonce, len(chunks), mpk is not None, wrapped, _key_check(k, nonce))
    return HiddenDocument(header.encode(), chunks)


def _unwrap(header: HideHeader, dk: bytes | None, sk) -> bytes:
    if not header.predicate:
        if dk is None:
            raise WrongKey("document is encrypted for a recipient key")
        try:
            k = primitives.pke_decrypt(dk, header.key, header.doc_nonce)
        except primitives.AuthenticationError:
            raise WrongKey("document key does not decrypt") from None
        if not hmac.compare_digest(_key_check(k, header.doc_nonce), header.key_check):
            raise WrongKey("document key check failed")
        return k
    if sk is None:
        raise WrongKey("document is encrypted under an attribute")
    try:
        c = ipe.decode_ciphertext(header.key)
    except TokenError as exc:
        raise HeaderUnreadable(f"predicate ciphertext unreadable: {exc}") from None
    keys = [sk] if isinstance(sk, ipe.IpeSecretKey) else list(sk)
    for key in keys:
        if key.params != c.params or key.n != c.n or key.mode is not c.mode:
            continue
        k = key_from_element(ipe.decrypt(key, c))
        if hmac.compare_digest(_key_check(k, header.doc_nonce), header.key_check):
            return k
    raise WrongKey("no key satisfies the document's attribute")


def hide_decrypt(doc: HiddenDocument, *, dk: bytes | None = None,
                 sk: ipe.IpeSecretKey | Iterable[ipe.IpeSecretKey] | None = None,
                 wanted: Iterable[int] | None = None) -> Recovered:
    """Recover the document key from the header, then decrypt the ``wanted`` chunks.

    A damaged header is fatal; a damaged chunk only marks that chunk.
    """
    if doc.header is None:
        raise HeaderUnreadable("header code is missing")
    try:
        header = decode_as(doc.header, HideHeader)
    except TokenError as exc:
        raise HeaderUnreadable(str(exc)) from None
    k = _unwrap(header, dk, sk)
    indices = range(1, header.chunk_count + 1) if wanted is None else sorted(set(wanted))
    out = Recovered()
    for i in indices:
        if not 1 <= i <= header.chunk_count:
            raise ValueError(f"chunk {i} does not exist (document has {header.chunk_count})")
        data = doc.chunks[i - 1] if i <= len(doc.chunks) else None
        try:
            if data is None:
                raise TokenError("chunk code is missing")
            token = decode_as(data, ChunkToken)
            if token.index != i:
                raise TokenError(f"chunk code claims index {token.index}")
            out.plaintexts[i] = primitives.sym_decrypt(k, token.ciphertext,
                                                       primitives.chunk_aad(header.doc_nonce, i))
            out.status[i] = ChunkStatus.OK
        except (TokenError, primitives.AuthenticationError):
            out.status[i] = ChunkStatus.DAMAGED
    return out


# -- on-disk format -----------------------------------------------------------

def save_hidden(doc: HiddenDocument, path: str | Path, transport=None) -> Path:
    """Write ``header`` and ``chunk-<i>`` codes into directory ``path``."""
    transport = transport or codec.LoopbackTransport()
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    transport.write(doc.header, path / "header")
    for i, chunk in enumerate(doc.chunks, start=1):
        transport.write(chunk, path / f"chunk-{i}")
    return path


def _scan(stem: Path) -> bytes | None:
    try:
        return codec.read_token_file(codec.find_token(stem))
    except (OSError, codec.DecodeError):
        return None


def load_hidden(path: str | Path) -> HiddenDocument:
    """Scan a saved hidden document; missing or unreadable codes become ``None``."""
    path = Path(path)
    header = _scan(path / "header")
    try:
        count = decode_as(header, HideHeader).chunk_count if header else 0
    except TokenError:
        count = 0
    if not count:
        count = len({p.stem for p in path.glob("chunk-*")})
    return HiddenDocument(header, [_scan(path / f"chunk-{i}") for i in range(1, count + 1)])


# -- clearance policy ---------------------------------------------------------

def attribute_value(name: str, N: int) -> int:
    return int.from_bytes(hashlib.sha256(b"ubic/attr/" + name.encode()).digest(), "big") % N


def attribute_vector(name: str, N: int) -> tuple[int, int]:
    return ipe.equality_attribute(attribute_value(name, N), N)


def predicate_vector(name: str, N: int) -> tuple[int, int]:
    return ipe.equality_predicate(attribute_value(name, N), N)


TOY_POLICY: Mapping[str, frozenset[str]] = {
    "Prof": frozenset({"Prof", "Emp", "Stud"}),
    "Emp": frozenset({"Emp"}),
    "Stud": frozenset({"Stud"}),
}


def clearance_keys(msk: ipe.IpeMasterSecret, role: str,
                   policy: Mapping[str, frozenset[str]] = TOY_POLICY,
                   rng: random.Random | None = None) -> list[ipe.IpeSecretKey]:
    """One equality key per attribute ``role`` may read."""
    N = msk.params.N
    return [ipe.keygen(msk, predicate_vector(attr, N), rng) for attr in sorted(policy[role])]
