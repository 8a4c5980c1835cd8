"""Signed public-key directory.

The directory maps ``(id, role)`` to a public key and stands in for the
trusted key database every protocol assumes.  On disk it is::

    b"UBDR" | version | suite id | TLV(0x6E, root vk) | TLV(0x60, record)* | TLV(0x6F, signature)

where each record nests ``0x61 id (16) | 0x62 role (1) | 0x63 key``.  The
signature is an Ed25519 signature by the root key over everything before
it.  Records are kept in sorted order so the encoding is canonical.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from . import primitives
from .errors import Rejected, UbicError
from .tokens import ID_LEN, Reader, TokenError, tlv

DIR_MAGIC = b"UBDR"
DIR_VERSION = 1


class Role(IntEnum):
    USER = 1
    TOKEN = 2
    SIGNER = 3
    PE_AUTHORITY = 4


class UnknownIdentity(UbicError, KeyError):
    code = "directory.unknown-id"

    def __str__(self):
        return self.args[0] if self.args else "unknown identity"


class DirectoryTampered(Rejected):
    code = "directory.bad-signature"


def make_id(name: str | bytes) -> bytes:
    """Fixed 16-byte identifier: the UTF-8 name, NUL-padded."""
    raw = name.encode() if isinstance(name, str) else bytes(name)
    if len(raw) > ID_LEN:
        raise ValueError(f"identifiers are at most {ID_LEN} bytes")
    return raw.ljust(ID_LEN, b"\0")


def id_name(ident: bytes) -> str:
    return ident.rstrip(b"\0").decode(errors="replace")


@dataclass(frozen=True)
class Record:
    id: bytes
    role: Role
    key: bytes


class Directory:
    def __init__(self, records=()):
        self._records: dict[tuple[bytes, Role], Record] = {}
        for rec in records:
            self.add(rec)

    def add(self, record: Record):
        if len(record.id) != ID_LEN:
            raise ValueError(f"record ids are {ID_LEN} bytes")
        self._records[(record.id, Role(record.role))] = record

    def register(self, ident: bytes, role: Role, key: bytes):
        self.add(Record(ident, Role(role), key))

    def lookup(self, ident: bytes, role: Role) -> bytes:
        try:
            return self._records[(ident, Role(role))].key
        except KeyError:
            raise UnknownIdentity(f"no {Role(role).name.lower()} key for {id_name(ident)!r}") from None

    def __contains__(self, item) -> bool:
        return item in self._records

    def ids(self) -> set[bytes]:
        return {ident for ident, _ in self._records}

    def records(self) -> list[Record]:
        return [self._records[k] for k in sorted(self._records)]

    def __len__(self):
        return len(self._records)

    def encode(self, root: primitives.SigKeyPair) -> bytes:
        body = DIR_MAGIC + bytes([DIR_VERSION, primitives.SUITE_ID]) + tlv(0x6E, root.vk)
        for rec in self.records():
            body += tlv(0x60, tlv(0x61, rec.id) + tlv(0x62, bytes([rec.role])) + tlv(0x63, rec.key))
        return body + tlv(0x6F, primitives.sign(root.sk, body))

    @classmethod
    def decode(cls, data: bytes, root_vk: bytes | None = None) -> Directory:
        """Parse and authenticate a directory; ``root_vk`` pins the expected root."""
        if data[:4] != DIR_MAGIC:
            raise TokenError("bad magic")
        if len(data) < 6:
            raise TokenError("truncated input")
        if data[4] != DIR_VERSION or data[5] != primitives.SUITE_ID:
            raise TokenError("unsupported directory version or suite")
        rd = Reader(data, 6)
        vk = rd.take(0x6E, 32)
        records = []
        while rd.peek_tag() == 0x60:
            inner = Reader(rd.take(0x60))
            ident = inner.take(0x61, ID_LEN)
            try:
                role = Role(inner.take(0x62, 1)[0])
            except ValueError:
                raise TokenError("unknown role") from None
            key = inner.take(0x63)
            inner.finish()
            records.append(Record(ident, role, key))
        signed_end = rd.pos
        sig = rd.take(0x6F)
        rd.finish()
        if root_vk is not None and vk != root_vk:
            raise DirectoryTampered("directory is signed by an unexpected root key")
        if not primitives.verify(vk, data[:signed_end], sig):
            raise DirectoryTampered("directory signature does not verify")
        keys = [(r.id, r.role) for r in records]
        if keys != sorted(set(keys)):
            raise TokenError("directory records must be sorted and unique")
        return cls(records)
