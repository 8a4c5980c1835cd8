"""Canonical binary encoding of ubic headers and tokens.

Every token starts with the 6-byte framework header::

    b"UBIC" | version (1 byte) | mode (1 byte: 1=IDENT, 2=VERIFY, 3=HIDE)

followed by the application fields as TLV records (1-byte tag, 4-byte
big-endian length, value) in a fixed order.  Integers are big-endian with
a fixed width.  The decoder accepts exactly the byte strings the encoder
produces, so ``encode_token(decode_token(b)) == b`` whenever decoding
succeeds; signatures are computed over these bytes and must not depend on
how a token was parsed.

Field layouts (tag: contents):

IdentHeader (mode 1)
    0x10 tid (16)  0x11 uid (16)  0x12 gps (int32 lat, int32 lon, micro-degrees)
    0x13 encrypted challenge (var)  0x14 timestamp (int64)  0x1F signature (var)
VeriDocHeader (mode 2)
    0x20 sid (16)  0x21 did (16)  0x22 block count (uint32)  0x23 layout (nested)
    0x2F signature (var)
    layout: 0x30 font (utf-8)  0x31 aspect ratios  0x32 language (utf-8)
    0x33 text/code ratios; ratio lists are packed (uint32 num, uint32 den) pairs
BlockToken (mode 2)
    0x28 index (uint32)  0x29 signature (var)
SignedStatement (mode 2)
    0x2A VeriDocHeader token (nested)  0x2B BlockToken token (nested)
HideHeader (mode 3)
    0x40 document nonce (16)  0x41 chunk count (uint32)  0x42 predicate flag (1)
    0x43 encrypted document key (var)  0x44 key check (16)
ChunkToken (mode 3)
    0x48 index (uint32)  0x49 ciphertext (var)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from fractions import Fraction
from math import gcd
from typing import Callable, Union

from .errors import UbicError

MAGIC = b"UBIC"
VERSION = 1
ID_LEN = 16
NONCE_LEN = 16
KEY_CHECK_LEN = 16
FRAMEWORK_HEADER_LEN = 6

LAT_RANGE = 90_000_000
LON_RANGE = 180_000_000


class Mode(IntEnum):
    IDENT = 1
    VERIFY = 2
    HIDE = 3


class Tag(IntEnum):
    TID = 0x10
    UID = 0x11
    GPS = 0x12
    ENC_CHALLENGE = 0x13
    TIMESTAMP = 0x14
    IDENT_SIG = 0x1F

    SID = 0x20
    DID = 0x21
    BLOCK_COUNT = 0x22
    LAYOUT = 0x23
    BLOCK_INDEX = 0x28
    BLOCK_SIG = 0x29
    STMT_HEADER = 0x2A
    STMT_BLOCK = 0x2B
    HEADER_SIG = 0x2F

    FONT = 0x30
    ASPECT = 0x31
    LANGUAGE = 0x32
    TEXT_RATIO = 0x33

    DOC_NONCE = 0x40
    CHUNK_COUNT = 0x41
    PREDICATE = 0x42
    DOC_KEY = 0x43
    KEY_CHECK = 0x44
    CHUNK_INDEX = 0x48
    CHUNK_CT = 0x49


class TokenError(UbicError, ValueError):
    code = "token.malformed"


# -- TLV primitives -------------------------------------------------------

def tlv(tag: int, value: bytes) -> bytes:
    return struct.pack(">BI", tag, len(value)) + value


def u32(v: int) -> bytes:
    if not 0 <= v < 2**32:
        raise TokenError(f"value {v} does not fit in uint32")
    return struct.pack(">I", v)


def read_u32(b: bytes) -> int:
    if len(b) != 4:
        raise TokenError("uint32 field must be 4 bytes")
    return struct.unpack(">I", b)[0]


class Reader:
    """Sequential TLV reader that enforces tag order."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def at_end(self) -> bool:
        return self.pos == len(self.data)

    def peek_tag(self) -> int:
        if self.at_end():
            raise TokenError("truncated input")
        return self.data[self.pos]

    def take(self, tag: int, size: int | None = None) -> bytes:
        if len(self.data) - self.pos < 5:
            raise TokenError("truncated input")
        got, length = struct.unpack_from(">BI", self.data, self.pos)
        if got != tag:
            raise TokenError(f"unknown type tag 0x{got:02x} (expected 0x{tag:02x})")
        start = self.pos + 5
        if len(self.data) - start < length:
            raise TokenError("truncated input")
        if size is not None and length != size:
            raise TokenError(f"field 0x{tag:02x} must be {size} bytes, got {length}")
        self.pos = start + length
        return self.data[start:self.pos]

    def finish(self):
        if not self.at_end():
            raise TokenError("trailing bytes")


def framework_header(mode: Mode) -> bytes:
    return MAGIC + bytes([VERSION, int(mode)])


def read_framework_header(data: bytes) -> Mode:
    if len(data) < FRAMEWORK_HEADER_LEN:
        raise TokenError("truncated input")
    if data[:4] != MAGIC:
        raise TokenError("bad magic")
    if data[4] != VERSION:
        raise TokenError(f"unsupported version {data[4]}")
    try:
        return Mode(data[5])
    except ValueError:
        raise TokenError(f"unknown mode {data[5]}") from None


def _utf8(b: bytes) -> str:
    try:
        return b.decode("utf-8")
    except UnicodeDecodeError:
        raise TokenError("invalid utf-8 in text field") from None


def _encode_ratios(ratios: tuple[Fraction, ...]) -> bytes:
    return b"".join(u32(f.numerator) + u32(f.denominator) for f in ratios)


def _decode_ratios(b: bytes) -> tuple[Fraction, ...]:
    if len(b) % 8:
        raise TokenError("ratio list length must be a multiple of 8")
    out = []
    for off in range(0, len(b), 8):
        num, den = struct.unpack_from(">II", b, off)
        if den == 0 or num == 0 or gcd(num, den) != 1:
            raise TokenError("ratio must be a positive fraction in lowest terms")
        out.append(Fraction(num, den))
    return tuple(out)


def _check_id(name: str, v: bytes, size: int = ID_LEN):
    if not isinstance(v, (bytes, bytearray)) or len(v) != size:
        raise TokenError(f"{name} must be {size} bytes")


# -- token types ----------------------------------------------------------

@dataclass(frozen=True)
class IdentHeader:
    tid: bytes
    uid: bytes
    gps: tuple[int, int]
    enc_challenge: bytes
    timestamp: int
    signature: bytes = b""

    mode = Mode.IDENT

    def __post_init__(self):
        _check_id("tid", self.tid)
        _check_id("uid", self.uid)
        lat, lon = self.gps
        if not (-LAT_RANGE <= lat <= LAT_RANGE and -LON_RANGE <= lon <= LON_RANGE):
            raise TokenError("gps coordinates out of range")
        if not -2**63 <= self.timestamp < 2**63:
            raise TokenError("timestamp out of range")

    def signed_bytes(self) -> bytes:
        lat, lon = self.gps
        return (framework_header(self.mode)
                + tlv(Tag.TID, self.tid)
                + tlv(Tag.UID, self.uid)
                + tlv(Tag.GPS, struct.pack(">ii", lat, lon))
                + tlv(Tag.ENC_CHALLENGE, self.enc_challenge)
                + tlv(Tag.TIMESTAMP, struct.pack(">q", self.timestamp)))

    def encode(self) -> bytes:
        return self.signed_bytes() + tlv(Tag.IDENT_SIG, self.signature)

    @classmethod
    def read(cls, rd: Reader) -> IdentHeader:
        tid = rd.take(Tag.TID, ID_LEN)
        uid = rd.take(Tag.UID, ID_LEN)
        lat, lon = struct.unpack(">ii", rd.take(Tag.GPS, 8))
        ch = rd.take(Tag.ENC_CHALLENGE)
        (ts,) = struct.unpack(">q", rd.take(Tag.TIMESTAMP, 8))
        sig = rd.take(Tag.IDENT_SIG)
        return cls(tid, uid, (lat, lon), ch, ts, sig)


@dataclass(frozen=True)
class LayoutInfo:
    """Scanning hints carried in the document header."""

    font: str = "DejaVu Sans"
    aspect_ratios: tuple[Fraction, ...] = ()
    language: str = "en"
    text_ratios: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "aspect_ratios", tuple(Fraction(f) for f in self.aspect_ratios))
        object.__setattr__(self, "text_ratios", tuple(Fraction(f) for f in self.text_ratios))
        if any(f <= 0 for f in self.aspect_ratios):
            raise TokenError("aspect ratios must be positive")
        if any(not 0 < f < 1 for f in self.text_ratios):
            raise TokenError("text/code ratios must lie in (0, 1)")

    def encode(self) -> bytes:
        return (tlv(Tag.FONT, self.font.encode())
                + tlv(Tag.ASPECT, _encode_ratios(self.aspect_ratios))
                + tlv(Tag.LANGUAGE, self.language.encode())
                + tlv(Tag.TEXT_RATIO, _encode_ratios(self.text_ratios)))

    @classmethod
    def decode(cls, b: bytes) -> LayoutInfo:
        rd = Reader(b)
        font = _utf8(rd.take(Tag.FONT))
        aspect = _decode_ratios(rd.take(Tag.ASPECT))
        lang = _utf8(rd.take(Tag.LANGUAGE))
        text = _decode_ratios(rd.take(Tag.TEXT_RATIO))
        rd.finish()
        return cls(font, aspect, lang, text)


@dataclass(frozen=True)
class VeriDocHeader:
    sid: bytes
    did: bytes
    block_count: int
    layout: LayoutInfo = field(default_factory=LayoutInfo)
    signature: bytes = b""

    mode = Mode.VERIFY

    def __post_init__(self):
        _check_id("sid", self.sid)
        _check_id("did", self.did)
        if self.block_count < 1:
            raise TokenError("a document needs at least one block")
        for name in ("aspect_ratios", "text_ratios"):
            if len(getattr(self.layout, name)) not in (0, self.block_count):
                raise TokenError(f"layout {name} must list one entry per block")

    def signed_bytes(self) -> bytes:
        return (framework_header(self.mode)
                + tlv(Tag.SID, self.sid)
                + tlv(Tag.DID, self.did)
                + tlv(Tag.BLOCK_COUNT, u32(self.block_count))
                + tlv(Tag.LAYOUT, self.layout.encode()))

    def encode(self) -> bytes:
        return self.signed_bytes() + tlv(Tag.HEADER_SIG, self.signature)

    @classmethod
    def read(cls, rd: Reader) -> VeriDocHeader:
        sid = rd.take(Tag.SID, ID_LEN)
        did = rd.take(Tag.DID, ID_LEN)
        count = read_u32(rd.take(Tag.BLOCK_COUNT))
        layout = LayoutInfo.decode(rd.take(Tag.LAYOUT))
        sig = rd.take(Tag.HEADER_SIG)
        return cls(sid, did, count, layout, sig)


@dataclass(frozen=True)
class BlockToken:
    index: int
    signature: bytes

    mode = Mode.VERIFY

    def __post_init__(self):
        if self.index < 1:
            raise TokenError("block indices start at 1")

    def encode(self) -> bytes:
        return (framework_header(self.mode)
                + tlv(Tag.BLOCK_INDEX, u32(self.index))
                + tlv(Tag.BLOCK_SIG, self.signature))

    @classmethod
    def read(cls, rd: Reader) -> BlockToken:
        index = read_u32(rd.take(Tag.BLOCK_INDEX))
        return cls(index, rd.take(Tag.BLOCK_SIG))


@dataclass(frozen=True)
class SignedStatement:
    """A one-block VeriDoc packed into a single code (two-step verification)."""

    header: VeriDocHeader
    block: BlockToken

    mode = Mode.VERIFY

    def __post_init__(self):
        if self.header.block_count != 1:
            raise TokenError("a signed statement has exactly one block")

    def encode(self) -> bytes:
        return (framework_header(self.mode)
                + tlv(Tag.STMT_HEADER, self.header.encode())
                + tlv(Tag.STMT_BLOCK, self.block.encode()))

    @classmethod
    def read(cls, rd: Reader) -> SignedStatement:
        header = decode_token(rd.take(Tag.STMT_HEADER))
        block = decode_token(rd.take(Tag.STMT_BLOCK))
        if not isinstance(header, VeriDocHeader) or not isinstance(block, BlockToken):
            raise TokenError("signed statement must nest a header and a block token")
        return cls(header, block)


@dataclass(frozen=True)
class HideHeader:
    doc_nonce: bytes
    chunk_count: int
    predicate: bool
    key: bytes
    key_check: bytes

    mode = Mode.HIDE

    def __post_init__(self):
        _check_id("doc_nonce", self.doc_nonce, NONCE_LEN)
        _check_id("key_check", self.key_check, KEY_CHECK_LEN)
        if self.chunk_count < 1:
            raise TokenError("a hidden document has at least one chunk")

    def encode(self) -> bytes:
        return (framework_header(self.mode)
                + tlv(Tag.DOC_NONCE, self.doc_nonce)
                + tlv(Tag.CHUNK_COUNT, u32(self.chunk_count))
                + tlv(Tag.PREDICATE, bytes([int(self.predicate)]))
                + tlv(Tag.DOC_KEY, self.key)
                + tlv(Tag.KEY_CHECK, self.key_check))

    @classmethod
    def read(cls, rd: Reader) -> HideHeader:
        nonce = rd.take(Tag.DOC_NONCE, NONCE_LEN)
        count = read_u32(rd.take(Tag.CHUNK_COUNT))
        flag = rd.take(Tag.PREDICATE, 1)[0]
        if flag not in (0, 1):
            raise TokenError("predicate flag must be 0 or 1")
        key = rd.take(Tag.DOC_KEY)
        check = rd.take(Tag.KEY_CHECK, KEY_CHECK_LEN)
        return cls(nonce, count, bool(flag), key, check)


@dataclass(frozen=True)
class ChunkToken:
    index: int
    ciphertext: bytes

    mode = Mode.HIDE

    def __post_init__(self):
        if self.index < 1:
            raise TokenError("chunk indices start at 1")

    def encode(self) -> bytes:
        return (framework_header(self.mode)
                + tlv(Tag.CHUNK_INDEX, u32(self.index))
                + tlv(Tag.CHUNK_CT, self.ciphertext))

    @classmethod
    def read(cls, rd: Reader) -> ChunkToken:
        index = read_u32(rd.take(Tag.CHUNK_INDEX))
        return cls(index, rd.take(Tag.CHUNK_CT))


Token = Union[IdentHeader, VeriDocHeader, BlockToken, SignedStatement, HideHeader, ChunkToken]

# (mode, first tag) -> token class
_DISPATCH: dict[tuple[Mode, int], Callable[[Reader], Token]] = {
    (Mode.IDENT, Tag.TID): IdentHeader.read,
    (Mode.VERIFY, Tag.SID): VeriDocHeader.read,
    (Mode.VERIFY, Tag.BLOCK_INDEX): BlockToken.read,
    (Mode.VERIFY, Tag.STMT_HEADER): SignedStatement.read,
    (Mode.HIDE, Tag.DOC_NONCE): HideHeader.read,
    (Mode.HIDE, Tag.CHUNK_INDEX): ChunkToken.read,
}


def encode_token(token: Token) -> bytes:
    return token.encode()


def decode_token(data: bytes) -> Token:
    """Parse any ubic token, rejecting every non-canonical byte string."""
    data = bytes(data)
    mode = read_framework_header(data)
    rd = Reader(data, FRAMEWORK_HEADER_LEN)
    reader = _DISPATCH.get((mode, rd.peek_tag()))
    if reader is None:
        raise TokenError(f"unknown type tag 0x{rd.peek_tag():02x} for mode {mode.name}")
    token = reader(rd)
    rd.finish()
    return token


def decode_as(data: bytes, cls: type) -> Token:
    token = decode_token(data)
    if not isinstance(token, cls):
        raise TokenError(f"expected {cls.__name__}, got {type(token).__name__}")
    return token
