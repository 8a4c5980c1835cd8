"""VeriDoc: physical documents with per-block signatures.

Signing draws a random document id ``did``, signs a header carrying the
signer id, ``did``, the block count and layout hints, and then signs every
block as ``Sig(sk, H(did, m_i, i))``.  Because ``did``, the position ``i``
and the block count are all under a signature, blocks cannot be mixed in
from other documents, reordered or dropped.

Verification reads each block through a :class:`TextExtractor` (the
OCR-plus-barcode stage) and rejects on the first block that does not
verify.  Extraction errors are rejections; nothing is auto-corrected.
"""

from __future__ import annotations

import json
import random
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol, Sequence

from . import codec, primitives
from .directory import Directory, Role, UnknownIdentity
from .errors import Rejected, UbicError
from .tokens import (BlockToken, LayoutInfo, SignedStatement, TokenError, VeriDocHeader,
                     decode_as)

DID_LEN = 16


class VerificationError(Rejected):
    code = "veridoc.rejected"


class UnknownSigner(VerificationError):
    code = "veridoc.unknown-signer"


class HeaderForged(VerificationError):
    code = "veridoc.header-forged"


class BlockMismatch(VerificationError):
    code = "veridoc.block-mismatch"

    def __init__(self, index: int, why: str = ""):
        super().__init__(f"block {index} does not verify" + (f": {why}" if why else ""))
        self.index = index


class MissingBlock(VerificationError):
    code = "veridoc.missing-block"

    def __init__(self, index: int):
        super().__init__(f"block {index} is missing")
        self.index = index


class ExtractionError(UbicError):
    code = "veridoc.extraction-failed"


def canonical_text(text: str) -> bytes:
    """UTF-8 of the NFC normal form; whitespace is significant."""
    return unicodedata.normalize("NFC", text).encode("utf-8")


def block_digest(did: bytes, text: str, index: int) -> bytes:
    return primitives.hash_block(did, canonical_text(text), index)


@dataclass(frozen=True)
class SignedBlock:
    text: str
    token: BlockToken

    @property
    def token_bytes(self) -> bytes:
        return self.token.encode()


@dataclass(frozen=True)
class VeriDocBundle:
    header: VeriDocHeader
    blocks: tuple[SignedBlock, ...]

    @property
    def header_bytes(self) -> bytes:
        return self.header.encode()

    def physical_blocks(self) -> list[tuple[str, bytes]]:
        """Blocks as (printed text, signature code payload) pairs."""
        return [(b.text, b.token_bytes) for b in self.blocks]


class TextExtractor(Protocol):
    def extract(self, block: Any) -> tuple[str, bytes]:
        """Return the block's text and the payload of its signature code."""


class SidecarExtractor:
    """Ground-truth extractor: blocks are already ``(text, token bytes)`` pairs."""

    def extract(self, block: tuple[str, bytes]) -> tuple[str, bytes]:
        text, token = block
        if text is None or token is None:
            raise ExtractionError("block is unreadable")
        return text, token


def sign_document(sk: bytes, sid: bytes, blocks: Sequence[str], layout: LayoutInfo | None = None,
                  rng: random.Random | None = None) -> VeriDocBundle:
    if not blocks:
        raise ValueError("cannot sign an empty document")
    if any(not b for b in blocks):
        raise ValueError("document blocks must be nonempty")
    did = primitives.random_bytes(DID_LEN, rng)
    unsigned = VeriDocHeader(sid, did, len(blocks), layout or LayoutInfo())
    header = VeriDocHeader(sid, did, len(blocks), unsigned.layout,
                           primitives.sign(sk, unsigned.signed_bytes()))
    signed = tuple(SignedBlock(text, BlockToken(i, primitives.sign(sk, block_digest(did, text, i))))
                   for i, text in enumerate(blocks, start=1))
    return VeriDocBundle(header, signed)


def verify_header(directory: Directory, header_bytes: bytes) -> tuple[VeriDocHeader, bytes]:
    try:
        header = decode_as(header_bytes, VeriDocHeader)
    except TokenError as exc:
        raise HeaderForged(f"unreadable header: {exc}") from None
    try:
        vk = directory.lookup(header.sid, Role.SIGNER)
    except UnknownIdentity:
        raise UnknownSigner("signer is not in the directory") from None
    if not primitives.verify(vk, header.signed_bytes(), header.signature):
        raise HeaderForged("header signature does not verify")
    return header, vk


def verify_block(header: VeriDocHeader, vk: bytes, index: int, text: str, token_bytes: bytes):
    try:
        token = decode_as(token_bytes, BlockToken)
    except TokenError as exc:
        raise BlockMismatch(index, f"unreadable signature code ({exc})") from None
    if token.index != index:
        raise BlockMismatch(index, f"signature code belongs to block {token.index}")
    if not primitives.verify(vk, block_digest(header.did, text, index), token.signature):
        raise BlockMismatch(index, "signature does not match the text")


def verify_document(directory: Directory, header_bytes: bytes, blocks: Sequence[Any],
                    extractor: TextExtractor | None = None) -> VeriDocHeader:
    """Verify a scanned document; raise on the earliest failing block.

    ``blocks`` are whatever ``extractor`` understands, in reading order.
    Returns the verified header.
    """
    extractor = extractor or SidecarExtractor()
    header, vk = verify_header(directory, header_bytes)
    for index in range(1, header.block_count + 1):
        if index > len(blocks) or blocks[index - 1] is None:
            raise MissingBlock(index)
        try:
            text, token_bytes = extractor.extract(blocks[index - 1])
        except ExtractionError as exc:
            raise BlockMismatch(index, str(exc)) from None
        verify_block(header, vk, index, text, token_bytes)
    if len(blocks) > header.block_count:
        raise BlockMismatch(header.block_count + 1, "document has more blocks than its header declares")
    return header


def verify_bundle(directory: Directory, bundle: VeriDocBundle) -> VeriDocHeader:
    return verify_document(directory, bundle.header_bytes, bundle.physical_blocks())


# -- two-step verification ----------------------------------------------------

def sign_statement(sk: bytes, sid: bytes, text: str, rng: random.Random | None = None) -> bytes:
    """One code carrying header and block signature for a displayed statement."""
    bundle = sign_document(sk, sid, [text], rng=rng)
    return SignedStatement(bundle.header, bundle.blocks[0].token).encode()


def two_step_verify(directory: Directory, text: str, token: bytes) -> VeriDocHeader:
    try:
        stmt = decode_as(token, SignedStatement)
    except TokenError as exc:
        raise HeaderForged(f"unreadable statement code: {exc}") from None
    return verify_document(directory, stmt.header.encode(), [(text, stmt.block.encode())])


# -- on-disk format -----------------------------------------------------------

def save_document(bundle: VeriDocBundle, path: str | Path, transport=None) -> Path:
    """Write ``header``, ``block-<i>.txt`` and ``block-<i>`` codes plus ``index.json``."""
    transport = transport or codec.LoopbackTransport()
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    header_file = transport.write(bundle.header_bytes, path / "header")
    manifest = {"header": header_file.name, "blocks": []}
    for i, block in enumerate(bundle.blocks, start=1):
        (path / f"block-{i}.txt").write_bytes(canonical_text(block.text))
        code_file = transport.write(block.token_bytes, path / f"block-{i}")
        manifest["blocks"].append({"text": f"block-{i}.txt", "code": code_file.name})
    (path / "index.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return path


class DirectoryExtractor:
    """Reads ``block-<i>.txt`` and the matching code file from a saved document."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def extract(self, entry: dict) -> tuple[str, bytes]:
        try:
            text = (self.root / entry["text"]).read_bytes().decode("utf-8")
            token = codec.read_token_file(self.root / entry["code"])
        except (OSError, UnicodeDecodeError, codec.DecodeError) as exc:
            raise ExtractionError(str(exc)) from None
        return text, token


def load_document(path: str | Path) -> tuple[bytes, list[dict]]:
    """Header bytes and block entries of a saved document."""
    path = Path(path)
    manifest = json.loads((path / "index.json").read_text())
    return codec.read_token_file(path / manifest["header"]), list(manifest["blocks"])


def verify_saved(directory: Directory, path: str | Path) -> VeriDocHeader:
    header, entries = load_document(path)
    return verify_document(directory, header, entries, DirectoryExtractor(path))
