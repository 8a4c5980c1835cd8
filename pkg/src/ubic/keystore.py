"""On-disk key management for the command-line front end.

Layout of a keystore home directory::

    root.pub            root verification key (pins the directory)
    root.key            root signing key, passphrase-wrapped
    directory.bin       signed public-key directory
    keys/<name>.json    private material of one identity, passphrase-wrapped
    pe/<holder>.json    predicate-encryption secret keys of a holder, wrapped

Private files are AES-256-GCM encrypted under a key derived from the
passphrase with scrypt.  Randomness for key generation comes from the
``rng`` handle; salts and nonces of the wrapping always come from the OS.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
from pathlib import Path

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import bgroup, ipe, primitives
from .directory import Directory, Role, make_id
from .errors import UbicError

SCRYPT_N = 2 ** 14


class KeystoreError(UbicError):
    code = "keystore.error"


class BadPassphrase(KeystoreError):
    code = "keystore.bad-passphrase"


class DuplicateId(KeystoreError):
    code = "keystore.duplicate-id"


def wrap(passphrase: str, plaintext: bytes) -> dict:
    # always OS randomness: a seeded run must never repeat a salt or nonce
    salt, nonce = os.urandom(16), os.urandom(12)
    key = hashlib.scrypt(passphrase.encode(), salt=salt, n=SCRYPT_N, r=8, p=1, dklen=32)
    ct = AESGCM(key).encrypt(nonce, plaintext, b"ubic/keystore/v1")
    return {"kdf": "scrypt", "n": SCRYPT_N, "salt": salt.hex(), "nonce": nonce.hex(), "ct": ct.hex()}


def unwrap(passphrase: str, blob: dict) -> bytes:
    key = hashlib.scrypt(passphrase.encode(), salt=bytes.fromhex(blob["salt"]),
                         n=blob["n"], r=8, p=1, dklen=32)
    try:
        return AESGCM(key).decrypt(bytes.fromhex(blob["nonce"]), bytes.fromhex(blob["ct"]),
                                   b"ubic/keystore/v1")
    except InvalidTag:
        raise BadPassphrase("wrong passphrase or corrupted key file") from None


ROLE_NAMES = {"user": Role.USER, "token": Role.TOKEN, "signer": Role.SIGNER,
              "pe-authority": Role.PE_AUTHORITY}


class Keystore:
    def __init__(self, home: str | Path, passphrase: str, rng: random.Random | None = None):
        self.home = Path(home)
        self.passphrase = passphrase
        self.rng = rng

    # -- files --
    def _write_private(self, path: Path, payload: dict):
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = wrap(self.passphrase, json.dumps(payload).encode())
        path.write_text(json.dumps(blob) + "\n")

    def _read_private(self, path: Path) -> dict:
        if not path.exists():
            raise KeystoreError(f"no such key file: {path}")
        return json.loads(unwrap(self.passphrase, json.loads(path.read_text())))

    def _root(self) -> primitives.SigKeyPair:
        key_file = self.home / "root.key"
        if not key_file.exists():
            self.home.mkdir(parents=True, exist_ok=True)
            root = primitives.sig_keygen(self.rng)
            self._write_private(key_file, {"sk": root.sk.hex(), "vk": root.vk.hex()})
            (self.home / "root.pub").write_text(root.vk.hex() + "\n")
            (self.home / "directory.bin").write_bytes(Directory().encode(root))
            return root
        d = self._read_private(key_file)
        return primitives.SigKeyPair(bytes.fromhex(d["sk"]), bytes.fromhex(d["vk"]))

    def directory(self) -> Directory:
        """Load the directory, checking it against the pinned root key."""
        data = (self.home / "directory.bin").read_bytes()
        root_vk = bytes.fromhex((self.home / "root.pub").read_text().strip())
        return Directory.decode(data, root_vk)

    def _key_file(self, name: str) -> Path:
        return self.home / "keys" / f"{name}.json"

    # -- identities --
    def keygen(self, role: str, name: str, *, gps: tuple[int, int] | None = None,
               n: int = 2, bits: int = 32) -> bytes:
        """Create an identity; returns the public key recorded in the directory."""
        role_enum = ROLE_NAMES[role]
        root = self._root()
        directory = self.directory()
        ident = make_id(name)
        if self._key_file(name).exists() or ident in directory.ids():
            raise DuplicateId(f"identity {name!r} already exists")
        if role == "user":
            kp = primitives.pke_keygen(self.rng)
            public, private = kp.ek, {"dk": kp.dk.hex(), "ek": kp.ek.hex()}
        elif role in ("token", "signer"):
            kp = primitives.sig_keygen(self.rng)
            public, private = kp.vk, {"sk": kp.sk.hex(), "vk": kp.vk.hex()}
            if role == "token":
                private["gps"] = list(gps or (0, 0))
                private["pending"] = {}
        else:
            params = bgroup.group_gen(bits, self.rng)
            pk, msk = ipe.setup(params, n, ipe.Mode.MESSAGE, self.rng)
            public = ipe.encode_public_key(pk)
            private = {"msk": ipe.encode_master_secret(msk).hex()}
        private["role"] = role
        self._write_private(self._key_file(name), private)
        directory.register(ident, role_enum, public)
        (self.home / "directory.bin").write_bytes(directory.encode(root))
        return public

    def private(self, name: str, role: str) -> dict:
        d = self._read_private(self._key_file(name))
        if d.get("role") != role:
            raise KeystoreError(f"{name!r} is not a {role}")
        return d

    def update_private(self, name: str, payload: dict):
        self._write_private(self._key_file(name), payload)

    def sig_keys(self, name: str, role: str) -> primitives.SigKeyPair:
        d = self.private(name, role)
        return primitives.SigKeyPair(bytes.fromhex(d["sk"]), bytes.fromhex(d["vk"]))

    def pke_keys(self, name: str) -> primitives.PkeKeyPair:
        d = self.private(name, "user")
        return primitives.PkeKeyPair(bytes.fromhex(d["dk"]), bytes.fromhex(d["ek"]))

    def pe_master(self, name: str) -> ipe.IpeMasterSecret:
        return ipe.decode_master_secret(bytes.fromhex(self.private(name, "pe-authority")["msk"]))

    def pe_public(self, name: str) -> ipe.IpePublicKey:
        return ipe.decode_public_key(self.directory().lookup(make_id(name), Role.PE_AUTHORITY))

    # -- predicate-encryption secret keys held by users --
    def _pe_file(self, holder: str) -> Path:
        return self.home / "pe" / f"{holder}.json"

    def add_pe_keys(self, holder: str, keys: list[ipe.IpeSecretKey]):
        path = self._pe_file(holder)
        existing = self._read_private(path)["keys"] if path.exists() else []
        existing += [ipe.encode_secret_key(k).hex() for k in keys]
        self._write_private(path, {"keys": existing})

    def pe_keys(self, holder: str) -> list[ipe.IpeSecretKey]:
        return [ipe.decode_secret_key(bytes.fromhex(h)) for h in self._read_private(self._pe_file(holder))["keys"]]
